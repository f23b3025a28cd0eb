#include <fstream>

#include "commands.hpp"
#include "inoculate/perturb.hpp"

namespace inoculate::cli {

namespace {

struct PerturbOptions {
    std::string source;
    std::size_t n = 100;
    std::string rules = "all";
    std::uint64_t seed = 0;
    std::string out;
    std::string edit_log;
};

}  // namespace

Action add_perturb(CLI::App& app, Streams io) {
    auto opts = std::make_shared<PerturbOptions>();
    auto* cmd = app.add_subcommand("perturb", "Build a rule-based challenge set from source contradictions");
    cmd->add_option("--source", opts->source, "source pairs JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("-n,--n", opts->n, "pairs to generate")->capture_default_str();
    cmd->add_option("--rules", opts->rules, "comma-separated rule names, or 'all'")->capture_default_str();
    cmd->add_option("--seed", opts->seed, "sampling seed")->capture_default_str();
    cmd->add_option("--out", opts->out, "challenge set JSONL")->required();
    cmd->add_option("--edit-log", opts->edit_log, "edit log JSONL (default: <out>.edits.jsonl)");

    return [opts, io] {
        const auto rules = parse_rule_list(opts->rules);
        const auto source = load_jsonl(opts->source);
        const auto set = build_challenge_set(source, opts->n, rules, opts->seed);

        const std::filesystem::path out(opts->out);
        const std::filesystem::path log = opts->edit_log.empty() ? std::filesystem::path(opts->out + ".edits.jsonl")
                                                                 : std::filesystem::path(opts->edit_log);
        ensure_parent(out);
        ensure_parent(log);
        write_jsonl(set.dataset, out);
        {
            std::ofstream f(log, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError(log.string(), "cannot open for writing");
            write_edit_log(set.outcomes, f);
        }

        RunManifest manifest;
        manifest.command = "perturb";
        manifest.add_input(opts->source);
        Json rule_names = Json::array();
        for (auto r : rules) rule_names.push_back(std::string(to_string(r)));
        manifest.config["source"] = opts->source;
        manifest.config["n"] = opts->n;
        manifest.config["rules"] = std::move(rule_names);
        manifest.seeds.emplace_back("seed", opts->seed);
        manifest.artifacts = {out.string(), log.string()};
        write_manifest(manifest, manifest_path(out));

        std::array<std::size_t, kAllRules.size()> per_rule{};
        for (const auto& o : set.outcomes) ++per_rule[static_cast<std::size_t>(o.rule)];
        io.out << out.string() << ": " << set.dataset.size() << " pairs";
        for (auto r : kAllRules) io.out << ", " << to_string(r) << ' ' << per_rule[static_cast<std::size_t>(r)];
        io.out << '\n';
        return kOk;
    };
}

}  // namespace inoculate::cli
