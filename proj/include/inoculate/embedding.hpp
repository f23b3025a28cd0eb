#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "inoculate/corpus.hpp"
#include "inoculate/error.hpp"

namespace inoculate {

/// Lowercased maximal runs of alphanumeric characters. Bytes >= 0x80 count
/// as word characters so multibyte UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

class StopWordList {
public:
    StopWordList(std::unordered_set<std::string> words, std::string version);

    /// The frozen English list compiled into the library (data/stopwords_en_v1.txt).
    static const StopWordList& builtin();
    /// One token per line; blank lines and lines starting with '#' are skipped.
    static StopWordList load(const std::filesystem::path& path, std::string version = {});

    bool contains(std::string_view token) const { return words_.count(std::string(token)) != 0; }
    std::size_t size() const { return words_.size(); }
    const std::string& version() const { return version_; }

private:
    std::unordered_set<std::string> words_;
    std::string version_;
};

namespace detail {

struct GloveScan {
    std::size_t lines = 0;
};

// Streams "token v1 ... vD" records to `emit`. Validates the component count
// against expected_dim (or the first line's count) and the numeric syntax.
GloveScan scan_glove(std::istream& in, const std::string& source,
                     std::optional<std::size_t> expected_dim,
                     const std::function<void(std::string&&, std::span<const double>)>& emit);

}  // namespace detail

/// Token -> D-dimensional vector store. Rows of a row-major Eigen matrix;
/// storage precision is the template parameter, arithmetic on it is double.
template <typename Scalar = float>
class EmbeddingTable {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Index = Eigen::Index;

    EmbeddingTable() = default;

    /// Throws Error on duplicate/empty/uppercase tokens or a row-count mismatch.
    EmbeddingTable(std::vector<std::string> tokens, Matrix vectors, std::string source,
                   std::size_t duplicates_skipped = 0)
        : tokens_(std::move(tokens)),
          vectors_(std::move(vectors)),
          source_(std::move(source)),
          duplicates_(duplicates_skipped) {
        if (static_cast<Index>(tokens_.size()) != vectors_.rows())
            throw Error("embedding table: token count does not match row count");
        if (vectors_.cols() <= 0 && !tokens_.empty()) throw Error("embedding table: zero dimension");
        index_.reserve(tokens_.size());
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            const auto& t = tokens_[i];
            if (t.empty()) throw Error("embedding table: empty token");
            if (std::any_of(t.begin(), t.end(), [](unsigned char c) { return c >= 'A' && c <= 'Z'; }))
                throw Error("embedding table: token '" + t + "' is not lowercase");
            if (!index_.emplace(t, static_cast<Index>(i)).second)
                throw Error("embedding table: duplicate token '" + t + "'");
        }
    }

    Index dim() const { return vectors_.cols(); }
    std::size_t size() const { return tokens_.size(); }
    const std::string& source() const { return source_; }
    std::size_t duplicates_skipped() const { return duplicates_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const Matrix& matrix() const { return vectors_; }

    std::optional<Index> find(std::string_view token) const {
        auto it = index_.find(std::string(token));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    bool contains(std::string_view token) const { return find(token).has_value(); }
    auto row(Index i) const { return vectors_.row(i); }

private:
    std::vector<std::string> tokens_;
    Matrix vectors_;
    std::unordered_map<std::string, Index> index_;
    std::string source_;
    std::size_t duplicates_ = 0;
};

/// Reads a GloVe text file. Tokens are lowercased; when two records map to
/// the same token the first wins and the rest are counted.
template <typename Scalar = float>
EmbeddingTable<Scalar> read_glove(std::istream& in, const std::string& source,
                                  std::optional<std::size_t> expected_dim = {}) {
    std::vector<std::string> tokens;
    std::vector<Scalar> flat;
    std::unordered_set<std::string> seen;
    std::size_t dim = 0;
    std::size_t collapsed = 0;
    detail::scan_glove(
        in, source, expected_dim, [&](std::string&& token, std::span<const double> values) {
            dim = values.size();
            if (!seen.insert(token).second) {
                ++collapsed;
                return;
            }
            tokens.push_back(std::move(token));
            for (double v : values) flat.push_back(static_cast<Scalar>(v));
        });
    if (tokens.empty() && expected_dim) dim = *expected_dim;
    typename EmbeddingTable<Scalar>::Matrix m(static_cast<Eigen::Index>(tokens.size()),
                                              static_cast<Eigen::Index>(dim));
    if (!flat.empty())
        m = Eigen::Map<const typename EmbeddingTable<Scalar>::Matrix>(flat.data(), m.rows(), m.cols());
    return EmbeddingTable<Scalar>(std::move(tokens), std::move(m), source,
                                  collapsed);
}

template <typename Scalar = float>
EmbeddingTable<Scalar> load_glove(const std::filesystem::path& path,
                                  std::optional<std::size_t> expected_dim = {});

extern template EmbeddingTable<float> load_glove<float>(const std::filesystem::path&,
                                                        std::optional<std::size_t>);
extern template EmbeddingTable<double> load_glove<double>(const std::filesystem::path&,
                                                          std::optional<std::size_t>);

struct SentenceVector {
    Eigen::VectorXd values;
    Eigen::Index contributing = 0;
};

/// Mean of the in-vocabulary, non-stop-word token vectors of `text`.
/// nullopt (degenerate) when no token contributes. Rows are summed in table
/// order, so the result does not depend on token order, bit for bit.
template <typename Scalar>
std::optional<SentenceVector> bow_embed(const EmbeddingTable<Scalar>& table, std::string_view text,
                                        const StopWordList& stops) {
    std::vector<Eigen::Index> rows;
    for (const auto& token : tokenize(text)) {
        if (stops.contains(token)) continue;
        if (auto i = table.find(token)) rows.push_back(*i);
    }
    if (rows.empty()) return std::nullopt;
    std::sort(rows.begin(), rows.end());
    SentenceVector out;
    out.values = Eigen::VectorXd::Zero(table.dim());
    for (auto r : rows) out.values += table.row(r).transpose().template cast<double>();
    out.values /= static_cast<double>(rows.size());
    out.contributing = static_cast<Eigen::Index>(rows.size());
    return out;
}

/// dot(u, v) / (|u| |v|) clamped to [-1, 1]. Throws Error on a dimension
/// mismatch or a zero-norm input.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
    if (u.size() != v.size())
        throw Error("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
    const auto a = u.template cast<double>().eval();
    const auto b = v.template cast<double>().eval();
    const double nu = a.norm();
    const double nv = b.norm();
    if (!(nu > 0.0) || !(nv > 0.0)) throw Error("cosine: zero-norm input");
    return std::clamp(a.dot(b) / (nu * nv), -1.0, 1.0);
}

template <typename Scalar>
std::optional<double> pair_similarity(const EmbeddingTable<Scalar>& table, const SentencePair& pair,
                                      const StopWordList& stops) {
    auto p = bow_embed(table, pair.premise, stops);
    if (!p) return std::nullopt;
    auto h = bow_embed(table, pair.hypothesis, stops);
    if (!h) return std::nullopt;
    return cosine(p->values, h->values);
}

/// pair_similarity over every pair, split across `threads` workers. Output is
/// indexed like the input regardless of the thread count.
template <typename Scalar>
std::vector<std::optional<double>> pair_similarities(const EmbeddingTable<Scalar>& table,
                                                     std::span<const SentencePair> pairs,
                                                     const StopWordList& stops,
                                                     unsigned threads = 0) {
    std::vector<std::optional<double>> out(pairs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, pairs.size() / 256)));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = pair_similarity(table, pairs[i], stops);
    };
    if (threads <= 1) {
        work(0, pairs.size());
        return out;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (pairs.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(pairs.size(), begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }
    return out;
}

}  // namespace inoculate
