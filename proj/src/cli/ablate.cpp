#include <sys/wait.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>

#include "commands.hpp"
#include "inoculate/mixer.hpp"

namespace inoculate::cli {

namespace {

struct AblateOptions {
    std::string snli_test;
    std::string challenge;
    EmbeddingOptions embedding;
    double threshold = 0.8;
    std::string adversarial;
    std::string snli_train;
    std::string config_file;
    std::optional<std::size_t> sweep_max;
    std::size_t sweep_step = 10;
    std::size_t sweep_per_label = 100;
    std::string train_hook;
    std::string predict_hook;
    std::string base_model;
    double lr = 1e-5;
    int epochs = 3;
    std::uint64_t seed = 0;
    std::string work_dir;
    std::string out_dir = "ablation";
};

struct Config {
    std::string name;
    std::optional<MixtureSpec> mixture;
    std::string predictions;  // stubbed/precomputed predictions file
    std::string endpoint;     // already fine-tuned model server
};

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'')
            q += "'\\''";
        else
            q += c;
    }
    return q + "'";
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string expand(std::string tmpl, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        const std::string ph = "{" + key + "}";
        for (auto at = tmpl.find(ph); at != std::string::npos; at = tmpl.find(ph, at + value.size()))
            tmpl.replace(at, ph.size(), value);
    }
    return tmpl;
}

void run_hook(const char* what, const std::string& command, const std::filesystem::path& log) {
    const auto full = "( " + command + " ) > " + shell_quote(log.string()) + " 2>&1";
    const int status = std::system(full.c_str());
    if (status == -1) throw Error(std::string(what) + " could not be started");
    if (!WIFEXITED(status)) throw Error(std::string(what) + " terminated abnormally (see " + log.string() + ")");
    if (WEXITSTATUS(status) != 0)
        throw Error(std::string(what) + " exited with status " + std::to_string(WEXITSTATUS(status)) + " (see " +
                    log.string() + ")");
}

std::string slug(const std::string& name) {
    std::string s;
    for (unsigned char c : name) s += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_';
    return s;
}

std::vector<Config> read_config_file(const std::string& path, const AblateOptions& opts) {
    std::ifstream f(path);
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::exception& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
    if (j.is_object() && j.contains("configs")) j = j["configs"];
    if (!j.is_array()) throw Error(path + ": expected an array of configurations");
    const auto base_dir = std::filesystem::path(path).parent_path();
    std::vector<Config> configs;
    for (const auto& c : j) {
        if (!c.is_object() || !c.contains("name") || !c["name"].is_string())
            throw Error(path + ": every configuration needs a string 'name'");
        Config cfg;
        cfg.name = c["name"].get<std::string>();
        if (auto m = c.find("mixture"); m != c.end() && !m->is_null()) {
            auto spec = mixture_spec_from_json(*m);
            if (spec.adversarial_source.empty()) spec.adversarial_source = opts.adversarial;
            if (spec.snli_train_source.empty()) spec.snli_train_source = opts.snli_train;
            if (!m->contains("name")) spec.name = cfg.name;
            cfg.mixture = spec;
        }
        if (auto p = c.find("predictions"); p != c.end() && p->is_string()) {
            std::filesystem::path pp = p->get<std::string>();
            cfg.predictions = (pp.is_relative() ? base_dir / pp : pp).string();
        }
        if (auto e = c.find("endpoint"); e != c.end() && e->is_string()) cfg.endpoint = e->get<std::string>();
        configs.push_back(std::move(cfg));
    }
    return configs;
}

}  // namespace

Action add_ablate(CLI::App& app, Streams io) {
    auto opts = std::make_shared<AblateOptions>();
    auto* cmd = app.add_subcommand("ablate", "Run fine-tuning configurations and tabulate the three accuracies");
    cmd->add_option("--snli-test", opts->snli_test, "SNLI test pairs JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--challenge", opts->challenge, "challenge set JSONL")->required()->check(CLI::ExistingFile);
    add_embedding_options(*cmd, opts->embedding, false);
    cmd->add_option("--threshold", opts->threshold, "similar-subset threshold (strict >)")->capture_default_str();
    cmd->add_option("--adversarial", opts->adversarial, "adversarial training pairs for mixtures")
        ->check(CLI::ExistingFile);
    cmd->add_option("--snli-train", opts->snli_train, "SNLI train split for mixtures")->check(CLI::ExistingFile);
    auto* cfg = cmd->add_option("--config-file", opts->config_file,
                                "JSON list of {name, mixture|null, predictions?, endpoint?}")
                    ->check(CLI::ExistingFile);
    auto* sweep = cmd->add_option("--sweep-max", opts->sweep_max, "sweep n_adversarial from 0 to this value");
    sweep->excludes(cfg);
    cmd->add_option("--sweep-step", opts->sweep_step, "sweep step")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--sweep-per-label", opts->sweep_per_label, "SNLI entailment/neutral pairs in sweep mixtures")
        ->capture_default_str();
    cmd->add_option("--train-hook", opts->train_hook,
                    "fine-tune command template: {mixture} {lr} {epochs} {out} {parent}");
    cmd->add_option("--predict-hook", opts->predict_hook, "prediction command template: {checkpoint} {pairs} {out}");
    cmd->add_option("--base-model", opts->base_model, "checkpoint the baseline is evaluated from and fine-tunes start from");
    cmd->add_option("--lr", opts->lr, "fine-tuning learning rate")->capture_default_str();
    cmd->add_option("--epochs", opts->epochs, "fine-tuning epochs")->capture_default_str();
    cmd->add_option("--seed", opts->seed, "mixture seed")->capture_default_str();
    cmd->add_option("--work-dir", opts->work_dir, "mixtures, checkpoints, hook logs (default: <out-dir>/work)");
    cmd->add_option("--out-dir", opts->out_dir, "output directory")->capture_default_str();

    return [opts, io] {
        TrainRecipe recipe{opts->epochs, opts->lr, opts->base_model};
        recipe.validate();

        std::vector<Config> configs;
        if (!opts->config_file.empty()) {
            configs = read_config_file(opts->config_file, *opts);
        } else if (opts->sweep_max) {
            for (auto& s : sweep_specs(*opts->sweep_max, opts->sweep_step, opts->sweep_per_label, opts->adversarial,
                                       opts->snli_train, opts->seed))
                configs.push_back({s.name, s, {}, {}});
        } else {
            for (auto& c : ablation_configs(opts->adversarial, opts->snli_train, opts->seed))
                configs.push_back({c.name, c.mixture, {}, {}});
        }
        if (configs.empty()) throw UsageError("no configurations to run");

        RunManifest manifest;
        manifest.command = "ablate";
        const auto test = load_jsonl(opts->snli_test);
        const auto challenge = load_jsonl(opts->challenge);
        manifest.add_input(opts->snli_test);
        manifest.add_input(opts->challenge);
        if (!opts->config_file.empty()) manifest.add_input(opts->config_file);

        std::optional<StopWordList> stops;
        std::optional<EmbeddingTable<float>> table;
        if (!opts->embedding.glove.empty()) {
            stops = load_stopwords(opts->embedding, &manifest);
            table = load_table(opts->embedding, &manifest);
        }

        const std::filesystem::path out_dir(opts->out_dir);
        const std::filesystem::path work =
            opts->work_dir.empty() ? out_dir / "work" : std::filesystem::path(opts->work_dir);
        std::filesystem::create_directories(out_dir);
        std::filesystem::create_directories(work);

        Dataset eval_set{"eval", test.pairs};
        eval_set.pairs.insert(eval_set.pairs.end(), challenge.pairs.begin(), challenge.pairs.end());
        index_by_id(eval_set);
        const auto eval_pairs = work / "eval_pairs.jsonl";
        bool eval_pairs_written = false;

        std::optional<Dataset> adversarial, snli_train;
        auto sources = [&] {
            if (!adversarial && !opts->adversarial.empty()) {
                adversarial = load_jsonl(opts->adversarial);
                manifest.add_input(opts->adversarial);
            }
            if (!snli_train && !opts->snli_train.empty()) {
                snli_train = load_jsonl(opts->snli_train);
                manifest.add_input(opts->snli_train);
            }
        };

        std::vector<AblationRow> rows;
        Json config_log = Json::array();
        for (const auto& c : configs) {
            AblationRow row;
            row.config = c.name;
            row.mixture = c.mixture ? describe(*c.mixture) : "none";
            if (c.mixture) row.n_adversarial = static_cast<int>(c.mixture->n_adversarial);
            Json entry{{"name", c.name}, {"mixture", c.mixture ? to_json(*c.mixture) : Json(nullptr)}};
            const auto dir = work / slug(c.name);
            try {
                std::vector<Prediction> preds;
                if (!c.predictions.empty()) {
                    manifest.add_input(c.predictions);
                    preds = load_predictions(c.predictions);
                    entry["predictions"] = c.predictions;
                } else if (!c.endpoint.empty()) {
                    ModelOptions m;
                    m.endpoint = c.endpoint;
                    RunManifest scratch;
                    preds = obtain_predictions(m, eval_set.pairs, scratch, io.err);
                    entry["endpoint"] = c.endpoint;
                    entry["model_id"] = scratch.config["model_id"];
                } else {
                    if (opts->predict_hook.empty())
                        throw Error("no predictions file, endpoint or --predict-hook for this configuration");
                    std::filesystem::create_directories(dir);
                    std::string checkpoint = opts->base_model;
                    if (c.mixture) {
                        if (opts->train_hook.empty()) throw Error("mixture configuration needs --train-hook");
                        sources();
                        const auto mixture = build_mixture(*c.mixture, adversarial ? *adversarial : Dataset{},
                                                           snli_train ? *snli_train : Dataset{});
                        const auto mixture_path = dir / "mixture.jsonl";
                        write_jsonl(mixture, mixture_path);
                        RunManifest mix_manifest;
                        mix_manifest.command = "mix";
                        mix_manifest.config["spec"] = to_json(*c.mixture);
                        if (c.mixture->n_adversarial > 0) mix_manifest.add_input(opts->adversarial);
                        if (c.mixture->n_per_other_label + c.mixture->n_snli_contradiction > 0)
                            mix_manifest.add_input(opts->snli_train);
                        mix_manifest.seeds.emplace_back("seed", c.mixture->seed);
                        mix_manifest.artifacts.push_back(mixture_path.string());
                        write_manifest(mix_manifest, manifest_path(mixture_path));
                        checkpoint = (dir / "checkpoint").string();
                        run_hook("train-hook",
                                 expand(opts->train_hook, {{"mixture", shell_quote(mixture_path.string())},
                                                           {"lr", format_double(recipe.learning_rate)},
                                                           {"epochs", std::to_string(recipe.epochs)},
                                                           {"out", shell_quote(checkpoint)},
                                                           {"parent", shell_quote(opts->base_model)}}),
                                 dir / "train.log");
                        entry["mixture_sha256"] = sha256_file(mixture_path);
                    } else if (checkpoint.empty()) {
                        throw Error("baseline configuration needs --base-model");
                    }
                    if (!eval_pairs_written) {
                        write_jsonl(eval_set, eval_pairs);
                        eval_pairs_written = true;
                    }
                    const auto pred_path = dir / "predictions.jsonl";
                    run_hook("predict-hook",
                             expand(opts->predict_hook, {{"checkpoint", shell_quote(checkpoint)},
                                                         {"pairs", shell_quote(eval_pairs.string())},
                                                         {"out", shell_quote(pred_path.string())}}),
                             dir / "predict.log");
                    preds = load_predictions(pred_path);
                    entry["predictions"] = pred_path.string();
                }

                const auto test_preds = restrict_to(preds, test);
                const auto ch_preds = restrict_to(preds, challenge);
                if (test_preds.size() + ch_preds.size() != preds.size())
                    throw Error("predictions include ids outside the SNLI test and challenge sets");
                row.snli_test = evaluate(test, test_preds);
                row.adv_test = evaluate(challenge, ch_preds);
                if (table) {
                    const auto joined = join(test, test_preds, *table, *stops);
                    row.snli_contra = subset_accuracy(joined.records, Label::contradiction, opts->threshold).percent;
                }
                entry["status"] = "ok";
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
                entry["status"] = "failed";
                entry["error"] = row.error;
                io.err << "config '" << c.name << "' failed: " << e.what() << '\n';
            }
            rows.push_back(std::move(row));
            config_log.push_back(std::move(entry));
        }

        const auto table_text = render_ablation_table(rows);
        io.out << table_text;
        auto write_file = [&](const std::filesystem::path& path, auto&& write) {
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError(path.string(), "cannot open for writing");
            write(f);
            manifest.artifacts.push_back(path.string());
        };
        write_file(out_dir / "ablation.txt", [&](std::ostream& o) { o << table_text; });
        write_file(out_dir / "ablation.csv", [&](std::ostream& o) { write_ablation_csv(rows, o); });
        write_file(out_dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(rows, o); });

        manifest.config["configs"] = std::move(config_log);
        manifest.config["threshold"] = opts->threshold;
        manifest.config["train_hook"] = opts->train_hook;
        manifest.config["predict_hook"] = opts->predict_hook;
        manifest.config["base_model"] = opts->base_model;
        manifest.config["learning_rate"] = recipe.learning_rate;
        manifest.config["epochs"] = recipe.epochs;
        manifest.seeds.emplace_back("seed", opts->seed);
        write_manifest(manifest, out_dir / "ablate.manifest.jsonl");

        const auto failed = std::count_if(rows.begin(), rows.end(), [](const AblationRow& r) { return r.failed; });
        if (failed == 0) return static_cast<int>(kOk);
        return static_cast<int>(static_cast<std::size_t>(failed) == rows.size() ? kFailure : kPartialFailure);
    };
}

}  // namespace inoculate::cli
