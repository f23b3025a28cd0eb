#include <map>

#include "commands.hpp"

namespace inoculate::cli {

namespace {

struct IngestOptions {
    std::vector<std::string> inputs;
    std::string split;
    std::string out_dir = ".";
};

// snli_1.0_dev.jsonl -> validation, *_train* -> train, ...
std::string infer_split(const std::filesystem::path& p) {
    const auto stem = p.stem().string();
    for (const auto& [needle, split] :
         std::vector<std::pair<std::string, std::string>>{{"train", "train"},
                                                          {"test", "test"},
                                                          {"validation", "validation"},
                                                          {"dev", "validation"}})
        if (stem.find(needle) != std::string::npos) return split;
    return stem;
}

}  // namespace

Action add_ingest(CLI::App& app, Streams io) {
    auto opts = std::make_shared<IngestOptions>();
    auto* cmd = app.add_subcommand("ingest", "Convert SNLI or canonical JSONL into canonical per-split files");
    cmd->add_option("inputs", opts->inputs, "input JSONL files")->required()->check(CLI::ExistingFile);
    cmd->add_option("--split", opts->split, "split name for every input (default: inferred from file name)");
    cmd->add_option("--out-dir", opts->out_dir, "output directory")->capture_default_str();

    return [opts, io] {
        std::map<std::string, Dataset> splits;
        std::map<std::string, std::vector<std::string>> sources;
        RunManifest manifest;
        manifest.command = "ingest";
        std::size_t dropped = 0;
        for (const auto& in : opts->inputs) {
            const auto split = opts->split.empty() ? infer_split(in) : opts->split;
            auto imported = import_snli(in, split);
            manifest.add_input(in);
            dropped += imported.dropped_unlabeled;
            auto& d = splits[split];
            d.name = split;
            for (auto& p : imported.dataset.pairs) d.pairs.push_back(std::move(p));
            sources[split].push_back(in);
            io.err << in << ": " << imported.dataset.size() << " pairs (" << imported.dropped_unlabeled
                   << " without gold label dropped) -> " << split << '\n';
        }
        std::filesystem::create_directories(opts->out_dir);
        Json per_split = Json::object();
        for (auto& [split, d] : splits) {
            index_by_id(d);  // duplicate ids across inputs of one split
            const auto path = std::filesystem::path(opts->out_dir) / (split + ".jsonl");
            write_jsonl(d, path);
            manifest.artifacts.push_back(path.string());
            per_split[split] = Json{{"pairs", d.size()}, {"sources", sources[split]}};
            io.out << path.string() << '\t' << d.size() << '\n';
        }
        manifest.config["split_override"] = opts->split;
        manifest.config["out_dir"] = opts->out_dir;
        manifest.config["splits"] = std::move(per_split);
        manifest.config["dropped_unlabeled"] = dropped;
        write_manifest(manifest, std::filesystem::path(opts->out_dir) / "ingest.manifest.jsonl");
        return kOk;
    };
}

}  // namespace inoculate::cli
