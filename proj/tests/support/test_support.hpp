#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "inoculate/analysis.hpp"
#include "inoculate/corpus.hpp"
#include "inoculate/embedding.hpp"
#include "inoculate/modelgate.hpp"
#include "inoculate/perturb.hpp"
#include "inoculate/prng.hpp"

namespace httplib {
class Server;
}

namespace testing_support {

using namespace inoculate;

std::filesystem::path data_dir();
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Toy 2-d table: cat (1,0), dog (0,1).
EmbeddingTable<double> toy_table();

// Synthetic 16-d stand-in for GloVe. Every verb lemma of the shipped lexicon
// and a list of caption nouns get a random base vector; inflections and
// plurals sit close to their lemma's vector. Deterministic.
const EmbeddingTable<double>& standard_table();
void write_glove(const EmbeddingTable<double>& table, const std::filesystem::path& path);

Dataset contradiction_fixture();

// Naive reference for bag-of-words similarity: its own tokenizer, a token map
// parsed from GloVe text, a straight sum in token order and a plain loop cosine.
struct NaiveBow {
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::unordered_set<std::string> stops;

    static NaiveBow from_files(const std::filesystem::path& glove, const std::filesystem::path& stopwords);
    std::optional<std::vector<double>> embed(const std::string& text) const;
    std::optional<double> similarity(const std::string& a, const std::string& b) const;
};

// 50 pairs (100 sentences) mixing table words, stop words, unknown words and
// punctuation; some sentences are deliberately all stop words.
std::vector<SentencePair> random_sentence_pairs(std::uint64_t seed, std::size_t n_pairs = 50);

// 500 records: 400 correct spread over [0.30, 0.95], 100 incorrect with 80
// of them in [0.8, 1.0]. Interleaved by a seeded permutation.
std::vector<SimilarityRecord> concentrated_incorrect_fixture();

// Random records for property checks: size in [1, 60], similarities in
// [-0.2, 1.0] on a 1e-3 grid (with some exact bin edges), random labels.
std::vector<SimilarityRecord> random_records(SplitMix64& rng);

// Original pairs of split "train", n per label, ids "tr-<label>-<i>".
Dataset synthetic_snli_train(std::size_t n_per_label);
// Perturbed contradictions (machine generated), ids "adv-<i>~negation_mirror".
Dataset synthetic_adversarial(std::size_t n);

// Files for driving `ablate` against tests/stub_model.cpp. The SNLI test set
// has 400 contradictions (premise == hypothesis, similarity 1) then 600
// entailment/neutral pairs; the challenge set has 400 perturbed
// contradictions; pools hold 100 pairs per stratum.
struct StubHarness {
    explicit StubHarness(std::string stub_binary);

    TempDir dir;
    std::string stub;
    std::filesystem::path test, challenge, adversarial, snli_train, glove, base_checkpoint;

    std::string train_hook() const;
    std::string predict_hook() const;

    // Closed forms of the stub for a model fine-tuned on `a` adversarial pairs.
    static double adv_acc(long a);
    static double contra_acc(long a);
    static double test_acc(long a);
};

// The ablation table row values, with prediction files realizing them on a
// 2000-pair SNLI test set (1000 high-similarity contradictions) and a
// 100-pair challenge set, plus a config file naming the four rows.
struct ReferenceTableRow {
    std::string name;
    double snli_test, snli_contra, adv_test;
};
const std::vector<ReferenceTableRow>& reference_table_rows();

struct ReferenceTableFixture {
    ReferenceTableFixture();

    TempDir dir;
    std::filesystem::path test, challenge, glove, config;
};

// Invariants every perturbation outcome must satisfy against its source:
// label preservation, edit confinement (replayed edits reproduce the result,
// untouched side byte-identical), provenance, and for preposition swaps a
// replacement outside both sides' classes. Returns the violations found.
std::vector<std::string> outcome_violations(const SentencePair& source, const PerturbationOutcome& outcome,
                                            const PerturbResources& res = {});

// Canonical probabilities for a label: 0.9 on it, 0.05 elsewhere.
LabelProbs probs_for(Label label);
Prediction make_prediction(std::string id, Label label);

// Answers the model protocol from a per-item oracle. Knobs simulate failures.
class StubNliServer {
public:
    using Oracle = std::function<Prediction(const PredictItem&)>;

    StubNliServer(std::string model_id, Oracle oracle);
    ~StubNliServer();

    std::string url() const;
    std::size_t health_calls() const { return health_calls_.load(); }
    std::size_t predict_calls() const { return predict_calls_.load(); }
    std::vector<std::vector<std::string>> batches() const;
    std::vector<std::string> request_bodies() const;

    void fail_next(int n) { fail_next_ = n; }       // 503 for the next n predicts
    void drop_last(bool on) { drop_last_ = on; }    // answer one prediction short
    void omit_probs(bool on) { omit_probs_ = on; }  // labels without probs
    void reply_model_id(std::string id);            // predict answers claim this model

private:
    std::string model_id_;
    std::string reply_model_id_;
    Oracle oracle_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<std::vector<std::string>> batches_;
    std::vector<std::string> bodies_;
    std::atomic<std::size_t> health_calls_{0};
    std::atomic<std::size_t> predict_calls_{0};
    std::atomic<int> fail_next_{0};
    std::atomic<bool> drop_last_{false};
    std::atomic<bool> omit_probs_{false};
};

// Deterministic oracle: label from a hash of the texts.
Prediction hashed_oracle(const PredictItem& item);

}  // namespace testing_support
