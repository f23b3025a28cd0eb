#include "inoculate/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "inoculate/error.hpp"
#include "inoculate/prng.hpp"

namespace inoculate {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

Label label_from_json(const Json& v) {
    if (v.is_number_integer()) {
        const auto c = v.get<long long>();
        if (c < 0 || c > 2) throw Error("unknown label '" + v.dump() + "'");
        return label_from_code(static_cast<int>(c));
    }
    if (!v.is_string()) throw Error("unknown label '" + v.dump() + "'");
    return parse_label(v.get<std::string>());
}

const std::string& required_string(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw Error(std::string("missing or non-string field '") + key + "'");
    return it->get_ref<const std::string&>();
}

}  // namespace

std::string_view to_string(Label l) {
    switch (l) {
        case Label::entailment: return "entailment";
        case Label::neutral: return "neutral";
        case Label::contradiction: return "contradiction";
    }
    return "?";
}

std::optional<Label> try_parse_label(std::string_view text) {
    const auto t = lower(text);
    if (t == "entailment" || t == "0") return Label::entailment;
    if (t == "neutral" || t == "1") return Label::neutral;
    if (t == "contradiction" || t == "2") return Label::contradiction;
    return std::nullopt;
}

Label parse_label(std::string_view text) {
    if (auto l = try_parse_label(text)) return *l;
    throw Error("unknown label '" + std::string(text) + "'");
}

Label label_from_code(int c) {
    if (c < 0 || c > 2) throw Error("label code out of range: " + std::to_string(c));
    return static_cast<Label>(c);
}

bool is_cataloged_rule(std::string_view name) {
    return name == "negation_mirror" || name == "abstract_detail" || name == "preposition_swap" ||
           name == "manual";
}

std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& dataset) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
        if (!index.emplace(dataset.pairs[i].id, i).second)
            throw Error("duplicate id '" + dataset.pairs[i].id + "' in dataset '" + dataset.name + "'");
    }
    return index;
}

Json to_json(const SentencePair& pair) {
    Json obj;
    obj["id"] = pair.id;
    obj["premise"] = pair.premise;
    obj["hypothesis"] = pair.hypothesis;
    obj["label"] = std::string(to_string(pair.gold));
    Json prov;
    if (const auto* orig = std::get_if<OriginalProvenance>(&pair.provenance)) {
        prov["kind"] = "original";
        prov["split"] = orig->split;
    } else {
        const auto& pert = std::get<PerturbedProvenance>(pair.provenance);
        prov["kind"] = "perturbed";
        prov["rule"] = pert.rule;
        prov["source_id"] = pert.source_id;
        if (pert.machine_generated) prov["machine_generated"] = true;
    }
    obj["provenance"] = std::move(prov);
    return obj;
}

void validate_pair(const SentencePair& pair) {
    if (pair.id.empty()) throw Error("empty id");
    if (blank(pair.premise)) throw Error("empty premise in '" + pair.id + "'");
    if (blank(pair.hypothesis)) throw Error("empty hypothesis in '" + pair.id + "'");
    if (const auto* pert = std::get_if<PerturbedProvenance>(&pair.provenance)) {
        if (!is_cataloged_rule(pert->rule))
            throw Error("unknown rule '" + pert->rule + "' in provenance of '" + pair.id + "'");
        if (pert->source_id.empty())
            throw Error("perturbed pair '" + pair.id + "' has no source id");
    }
}

SentencePair pair_from_json(const Json& obj, const std::string& fallback_id,
                            const std::string& default_split) {
    if (!obj.is_object()) throw Error("expected a JSON object");
    SentencePair pair;
    if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw Error("field 'id' must be a string");
        pair.id = it->get<std::string>();
    } else {
        pair.id = fallback_id;
    }
    pair.premise = required_string(obj, "premise");
    pair.hypothesis = required_string(obj, "hypothesis");
    auto label = obj.find("label");
    if (label == obj.end()) throw Error("missing field 'label'");
    pair.gold = label_from_json(*label);

    if (auto it = obj.find("provenance"); it != obj.end() && !it->is_null()) {
        const auto& kind = required_string(*it, "kind");
        if (kind == "original") {
            pair.provenance = OriginalProvenance{required_string(*it, "split")};
        } else if (kind == "perturbed") {
            PerturbedProvenance p;
            p.rule = required_string(*it, "rule");
            p.source_id = required_string(*it, "source_id");
            if (auto mg = it->find("machine_generated"); mg != it->end()) {
                if (!mg->is_boolean()) throw Error("'machine_generated' must be a boolean");
                p.machine_generated = mg->get<bool>();
            }
            pair.provenance = std::move(p);
        } else {
            throw Error("unknown provenance kind '" + kind + "'");
        }
    } else {
        pair.provenance = OriginalProvenance{default_split};
    }
    validate_pair(pair);
    return pair;
}

Dataset read_jsonl(std::istream& in, const std::string& name, const std::string& source) {
    Dataset dataset;
    dataset.name = name;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        SentencePair pair;
        try {
            pair = pair_from_json(Json::parse(line), name + ":" + std::to_string(lineno), name);
        } catch (const Json::exception& e) {
            throw ParseError(source, lineno, std::string("malformed JSON: ") + e.what());
        } catch (const Error& e) {
            throw ParseError(source, lineno, e.what());
        }
        if (!seen.insert(pair.id).second)
            throw ParseError(source, lineno, "duplicate id '" + pair.id + "'");
        dataset.pairs.push_back(std::move(pair));
    }
    return dataset;
}

Dataset load_jsonl(const std::filesystem::path& path, std::optional<std::string> name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    return read_jsonl(in, name ? *name : path.stem().string(), path.string());
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
    for (const auto& pair : dataset.pairs) out << to_json(pair).dump() << '\n';
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    write_jsonl(dataset, out);
    out.flush();
    if (!out) throw IoError(path.string(), "write failed");
}

SnliImport import_snli(const std::filesystem::path& path, const std::string& split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    SnliImport result;
    result.dataset.name = split;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const std::string fallback = split + ":" + std::to_string(lineno);
        SentencePair pair;
        try {
            auto obj = Json::parse(line);
            if (obj.contains("sentence1")) {
                const auto& gold = required_string(obj, "gold_label");
                if (gold == "-") {
                    ++result.dropped_unlabeled;
                    continue;
                }
                pair.id = obj.contains("pairID") && obj["pairID"].is_string()
                              ? obj["pairID"].get<std::string>()
                              : fallback;
                pair.premise = required_string(obj, "sentence1");
                pair.hypothesis = required_string(obj, "sentence2");
                pair.gold = parse_label(gold);
                pair.provenance = OriginalProvenance{split};
                validate_pair(pair);
            } else {
                pair = pair_from_json(obj, fallback, split);
            }
        } catch (const Json::exception& e) {
            throw ParseError(path.string(), lineno, std::string("malformed JSON: ") + e.what());
        } catch (const Error& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
        if (!seen.insert(pair.id).second)
            throw ParseError(path.string(), lineno, "duplicate id '" + pair.id + "'");
        result.dataset.pairs.push_back(std::move(pair));
    }
    return result;
}

Dataset filter_by_label(const Dataset& dataset, Label label) {
    Dataset out{dataset.name, {}};
    std::copy_if(dataset.pairs.begin(), dataset.pairs.end(), std::back_inserter(out.pairs),
                 [label](const SentencePair& p) { return p.gold == label; });
    return out;
}

Dataset sample(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
    if (n > dataset.size())
        throw Error("cannot sample " + std::to_string(n) + " pairs from '" + dataset.name +
                    "' of size " + std::to_string(dataset.size()));
    const auto order = seeded_permutation(dataset.size(), seed);
    Dataset out{dataset.name, {}};
    out.pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.pairs.push_back(dataset.pairs[order[i]]);
    return out;
}

}  // namespace inoculate
