#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

namespace inoculate {

using Json = nlohmann::ordered_json;

/// NLI gold/predicted label. The integer codes are part of the file formats:
/// probability vectors are always ordered entailment, neutral, contradiction.
enum class Label : std::uint8_t { entailment = 0, neutral = 1, contradiction = 2 };

inline constexpr std::array<Label, 3> kAllLabels = {Label::entailment, Label::neutral,
                                                    Label::contradiction};

inline constexpr int code(Label l) { return static_cast<int>(l); }
std::string_view to_string(Label l);
std::optional<Label> try_parse_label(std::string_view text);
/// Accepts the three names (any case) or the codes "0".."2". Throws Error.
Label parse_label(std::string_view text);
Label label_from_code(int c);

struct OriginalProvenance {
    std::string split;
    bool operator==(const OriginalProvenance&) const = default;
};

struct PerturbedProvenance {
    std::string rule;
    std::string source_id;
    bool machine_generated = false;
    bool operator==(const PerturbedProvenance&) const = default;
};

using Provenance = std::variant<OriginalProvenance, PerturbedProvenance>;

/// Rule names allowed in perturbed provenance: the three rewrite rules plus
/// "manual" for pairs authored in the workbench.
bool is_cataloged_rule(std::string_view name);

struct SentencePair {
    std::string id;
    std::string premise;
    std::string hypothesis;
    Label gold = Label::entailment;
    Provenance provenance = OriginalProvenance{};

    bool is_perturbed() const { return std::holds_alternative<PerturbedProvenance>(provenance); }
    bool operator==(const SentencePair&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<SentencePair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
    bool operator==(const Dataset&) const = default;
};

/// id -> index into dataset.pairs. Throws Error on a duplicate id.
std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& dataset);

// JSON mapping for a single pair line.
Json to_json(const SentencePair& pair);
/// `fallback_id` is used when the object has no "id"; `default_split` fills a
/// missing provenance. Throws Error describing the offending field.
SentencePair pair_from_json(const Json& obj, const std::string& fallback_id,
                            const std::string& default_split);
/// Checks the SentencePair invariants that do not need the rest of a dataset.
void validate_pair(const SentencePair& pair);

/// Reads canonical pairs JSONL. The dataset name defaults to the file stem.
Dataset load_jsonl(const std::filesystem::path& path, std::optional<std::string> name = {});
Dataset read_jsonl(std::istream& in, const std::string& name, const std::string& source);

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);
void write_jsonl(const Dataset& dataset, std::ostream& out);

struct SnliImport {
    Dataset dataset;
    std::size_t dropped_unlabeled = 0;  // rows with gold "-"
};

/// Reads SNLI's native JSONL (sentence1/sentence2/gold_label[/pairID]).
/// Rows whose gold label is "-" are dropped and counted. Lines already in the
/// canonical schema are accepted as-is.
SnliImport import_snli(const std::filesystem::path& path, const std::string& split);

Dataset filter_by_label(const Dataset& dataset, Label label);

/// n distinct pairs drawn without replacement. The first n entries of a
/// SplitMix64(seed) Fisher-Yates shuffle, so n == size yields the whole
/// dataset in shuffled order. Throws Error when n > size.
Dataset sample(const Dataset& dataset, std::size_t n, std::uint64_t seed);

}  // namespace inoculate
