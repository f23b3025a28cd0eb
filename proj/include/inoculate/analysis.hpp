#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inoculate/corpus.hpp"
#include "inoculate/embedding.hpp"

namespace inoculate {

/// Probabilities in label order: entailment, neutral, contradiction.
using LabelProbs = std::array<double, 3>;

struct Prediction {
    std::string id;
    Label label = Label::entailment;
    std::optional<LabelProbs> probs;

    bool operator==(const Prediction&) const = default;
};

/// Each prob in [0, 1], sum within 1e-3 of 1, and the label's prob is a
/// maximum. Throws Error.
void validate_prediction(const Prediction& p);

Json to_json(const Prediction& p);
Prediction prediction_from_json(const Json& obj);

using LabelCounts = std::array<std::size_t, 3>;

struct SimilarityRecord {
    std::string id;
    double similarity = 0.0;
    Label gold = Label::entailment;
    Label predicted = Label::entailment;
    bool correct = false;
};

inline SimilarityRecord make_record(std::string id, double similarity, Label gold, Label predicted) {
    return {std::move(id), similarity, gold, predicted, gold == predicted};
}

struct JoinResult {
    std::vector<SimilarityRecord> records;
    std::size_t degenerate_count = 0;
    std::vector<std::string> degenerate_ids;
};

/// One record per predicted pair with a defined similarity, in dataset order.
/// Throws Error listing prediction ids absent from the dataset, or on a
/// duplicate prediction id.
template <typename Scalar>
JoinResult join(const Dataset& dataset, std::span<const Prediction> predictions,
                const EmbeddingTable<Scalar>& table, const StopWordList& stops);

extern template JoinResult join<float>(const Dataset&, std::span<const Prediction>,
                                       const EmbeddingTable<float>&, const StopWordList&);
extern template JoinResult join<double>(const Dataset&, std::span<const Prediction>,
                                        const EmbeddingTable<double>&, const StopWordList&);

struct StratifiedBin {
    double lo = 0.0;
    double hi = 0.0;
    double correct_pct = 0.0;
    double incorrect_pct = 0.0;
    std::size_t correct_n = 0;
    std::size_t incorrect_n = 0;

    bool operator==(const StratifiedBin&) const = default;
};

struct StratifiedCurve {
    double lo = 0.5;
    double hi = 1.0;
    double bin_width = 0.05;
    std::vector<StratifiedBin> bins;
    std::size_t below_range = 0;  // records with similarity < lo
    std::size_t above_range = 0;  // records with similarity > hi
    bool correct_empty = false;    // no correct record inside [lo, hi]
    bool incorrect_empty = false;
};

/// Bins are left-closed/right-open and tile [lo, hi); the last bin also takes
/// similarity == hi. Each population is normalized over its in-range records.
StratifiedCurve stratified_curve(std::span<const SimilarityRecord> records, double lo = 0.5,
                                 double hi = 1.0, double bin_width = 0.05);

struct CumulativePoint {
    double threshold = 0.0;
    double cum_correct_pct = 0.0;
    double cum_incorrect_pct = 0.0;

    bool operator==(const CumulativePoint&) const = default;
};

struct CumulativeCurve {
    std::vector<CumulativePoint> points;  // ascending thresholds
    bool correct_empty = false;
    bool incorrect_empty = false;
};

/// Percent of each population with similarity >= t, for t in
/// {start, start + step, ..., 1.0}.
CumulativeCurve cumulative_curve(std::span<const SimilarityRecord> records, double start = 0.8,
                                 double step = 0.01);
/// Same, at caller-chosen thresholds (sorted ascending on output).
CumulativeCurve cumulative_curve_at(std::span<const SimilarityRecord> records,
                                    std::vector<double> thresholds);

struct SubsetAccuracy {
    std::optional<double> percent;  // nullopt: empty subset
    std::size_t subset_size = 0;
    std::size_t correct = 0;
};

/// Accuracy over records with gold == gold_filter and similarity strictly
/// greater than min_similarity.
SubsetAccuracy subset_accuracy(std::span<const SimilarityRecord> records, Label gold_filter,
                               double min_similarity);

LabelCounts label_distribution(std::span<const Prediction> predictions);
LabelCounts gold_distribution(const Dataset& dataset);

/// 100 * correct / |dataset|. Every pair must be predicted exactly once and
/// every prediction must name a pair; otherwise Error listing the ids.
double evaluate(const Dataset& gold, std::span<const Prediction> predictions);

struct SetReport {
    std::string name;
    std::size_t pairs = 0;
    double accuracy = 0.0;
    LabelCounts predicted_distribution{};
};

struct EvalReport {
    std::optional<double> snli_test_acc;
    std::optional<double> similar_contra_acc;
    std::size_t similar_contra_size = 0;
    std::optional<double> challenge_acc;
    std::size_t degenerate_count = 0;
    double threshold = 0.8;
    std::string stopwords_version;
    std::vector<SetReport> sets;
};

Json to_json(const EvalReport& report);

struct AblationRow {
    std::string config;
    std::string mixture;  // human description, e.g. "100 adv + 100/label SNLI"
    std::optional<int> n_adversarial;
    std::optional<double> snli_test;
    std::optional<double> snli_contra;
    std::optional<double> adv_test;
    bool failed = false;
    std::string error;

    bool operator==(const AblationRow&) const = default;
};

/// Aligned text table, one decimal per metric, rows in input order.
std::string render_ablation_table(std::span<const AblationRow> rows);
/// Machine form: CSV `config,mixture,n_adversarial,snli_test,snli_contra,adv_test,status`.
/// Values are written with round-trip precision.
void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
std::vector<AblationRow> read_ablation_csv(std::istream& in);

// Chart data. Headers are fixed; doubles round-trip exactly.
void write_chart_csv(const StratifiedCurve& curve, std::ostream& out);
void write_chart_csv(const CumulativeCurve& curve, std::ostream& out);
void write_chart_csv(const LabelCounts& counts, std::ostream& out);
/// x = n_adversarial, one column per metric; rows without n_adversarial are skipped.
void write_sweep_csv(std::span<const AblationRow> rows, std::ostream& out);

StratifiedCurve read_stratified_csv(std::istream& in);
CumulativeCurve read_cumulative_csv(std::istream& in);
LabelCounts read_distribution_csv(std::istream& in);

template <typename Curve>
void emit_chart_data(const Curve& curve, const std::filesystem::path& path);

}  // namespace inoculate
