#include <fstream>

#include "commands.hpp"
#include "inoculate/mixer.hpp"

namespace inoculate::cli {

namespace {

struct MixOptions {
    std::string adversarial;
    std::string snli_train;
    std::string spec_file;
    MixtureSpec spec;
    bool no_shuffle = false;
    std::string out;
};

}  // namespace

Action add_mix(CLI::App& app, Streams io) {
    auto opts = std::make_shared<MixOptions>();
    auto* cmd = app.add_subcommand("mix", "Build a fine-tuning mixture of adversarial and SNLI pairs");
    cmd->add_option("--adversarial", opts->adversarial, "adversarial pairs JSONL (perturbed contradictions)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--snli-train", opts->snli_train, "SNLI train split JSONL")->check(CLI::ExistingFile);
    cmd->add_option("--spec-file", opts->spec_file, "mixture spec JSON; flags given explicitly override it")
        ->check(CLI::ExistingFile);
    auto* n_adv = cmd->add_option("--n-adversarial", opts->spec.n_adversarial, "adversarial contradictions")
                      ->capture_default_str();
    auto* n_other = cmd->add_option("--n-per-label", opts->spec.n_per_other_label,
                                    "SNLI entailment and neutral pairs each")
                        ->capture_default_str();
    auto* n_contra = cmd->add_option("--n-snli-contradiction", opts->spec.n_snli_contradiction,
                                     "original SNLI contradictions")
                         ->capture_default_str();
    auto* seed = cmd->add_option("--seed", opts->spec.seed, "sampling seed")->capture_default_str();
    auto* name = cmd->add_option("--name", opts->spec.name, "mixture name")->capture_default_str();
    auto* shuffle = cmd->add_flag("--no-shuffle", opts->no_shuffle, "keep stratum order");
    cmd->add_option("--out", opts->out, "mixture JSONL")->required();

    return [opts, io, n_adv, n_other, n_contra, seed, name, shuffle] {
        MixtureSpec spec = opts->spec;
        if (!opts->spec_file.empty()) {
            std::ifstream f(opts->spec_file);
            Json j;
            try {
                j = Json::parse(f);
            } catch (const Json::exception& e) {
                throw Error(opts->spec_file + ": malformed JSON: " + e.what());
            }
            auto from_file = mixture_spec_from_json(j);
            if (!n_adv->count()) spec.n_adversarial = from_file.n_adversarial;
            if (!n_other->count()) spec.n_per_other_label = from_file.n_per_other_label;
            if (!n_contra->count()) spec.n_snli_contradiction = from_file.n_snli_contradiction;
            if (!seed->count()) spec.seed = from_file.seed;
            if (!name->count()) spec.name = from_file.name;
            if (!shuffle->count()) spec.shuffle = from_file.shuffle;
            if (opts->adversarial.empty()) opts->adversarial = from_file.adversarial_source;
            if (opts->snli_train.empty()) opts->snli_train = from_file.snli_train_source;
        }
        if (shuffle->count()) spec.shuffle = !opts->no_shuffle;
        spec.adversarial_source = opts->adversarial;
        spec.snli_train_source = opts->snli_train;

        RunManifest manifest;
        manifest.command = "mix";
        Dataset adversarial{"adversarial", {}};
        Dataset snli{"snli-train", {}};
        if (spec.n_adversarial > 0) {
            if (opts->adversarial.empty()) throw UsageError("--adversarial is required when --n-adversarial > 0");
            adversarial = load_jsonl(opts->adversarial);
            manifest.add_input(opts->adversarial);
        }
        if (spec.n_per_other_label > 0 || spec.n_snli_contradiction > 0) {
            if (opts->snli_train.empty()) throw UsageError("--snli-train is required for SNLI strata");
            snli = load_jsonl(opts->snli_train);
            manifest.add_input(opts->snli_train);
        }
        const auto mixture = build_mixture(spec, adversarial, snli);

        const std::filesystem::path out(opts->out);
        ensure_parent(out);
        write_jsonl(mixture, out);
        manifest.config["spec"] = to_json(spec);
        manifest.seeds.emplace_back("seed", spec.seed);
        manifest.artifacts.push_back(out.string());
        write_manifest(manifest, manifest_path(out));

        const auto counts = gold_distribution(mixture);
        io.out << out.string() << ": " << mixture.size() << " pairs (" << describe(spec) << "), labels "
               << counts[0] << '/' << counts[1] << '/' << counts[2] << '\n';
        return kOk;
    };
}

}  // namespace inoculate::cli
