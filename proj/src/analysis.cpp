#include "inoculate/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "inoculate/error.hpp"

namespace inoculate {

namespace {

// Snap used when a similarity sits on a bin edge or threshold up to rounding.
constexpr double kEdgeEps = 1e-9;

double pct(std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw ParseError("csv", line, "not a number: '" + s + "'");
    return v;
}

std::size_t parse_count(const std::string& s, std::size_t line) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw ParseError("csv", line, "not a count: '" + s + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::string& header) {
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw ParseError("csv", 1, "expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    const auto width = split_csv(header).size();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != width)
            throw ParseError("csv", lineno, "expected " + std::to_string(width) + " fields");
        rows.push_back(std::move(fields));
    }
    return rows;
}

constexpr const char* kStratifiedHeader = "bin_lo,bin_hi,correct_pct,incorrect_pct,correct_n,incorrect_n";
constexpr const char* kCumulativeHeader = "threshold,cum_correct_pct,cum_incorrect_pct";
constexpr const char* kDistributionHeader = "label,count";
constexpr const char* kAblationHeader = "config,mixture,n_adversarial,snli_test,snli_contra,adv_test,status";
constexpr const char* kSweepHeader = "n_adversarial,snli_test,snli_contra,adv_test";

std::string opt_double(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

}  // namespace

void validate_prediction(const Prediction& p) {
    if (!p.probs) return;
    const auto& probs = *p.probs;
    double sum = 0.0;
    for (double v : probs) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error("probability out of [0, 1] for '" + p.id + "'");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-3)
        throw Error("probabilities for '" + p.id + "' sum to " + fmt_double(sum));
    const double max = *std::max_element(probs.begin(), probs.end());
    if (probs[static_cast<std::size_t>(code(p.label))] < max)
        throw Error("label '" + std::string(to_string(p.label)) + "' is not the argmax of probs for '" +
                    p.id + "'");
}

Json to_json(const Prediction& p) {
    Json obj;
    obj["id"] = p.id;
    obj["label"] = std::string(to_string(p.label));
    if (p.probs) obj["probs"] = Json::array({(*p.probs)[0], (*p.probs)[1], (*p.probs)[2]});
    return obj;
}

Prediction prediction_from_json(const Json& obj) {
    if (!obj.is_object()) throw Error("prediction must be a JSON object");
    Prediction p;
    auto id = obj.find("id");
    if (id == obj.end() || !id->is_string()) throw Error("prediction without string 'id'");
    p.id = id->get<std::string>();
    auto label = obj.find("label");
    if (label == obj.end()) throw Error("prediction '" + p.id + "' without 'label'");
    if (label->is_number_integer()) {
        p.label = label_from_code(label->get<int>());
    } else if (label->is_string()) {
        p.label = parse_label(label->get<std::string>());
    } else {
        throw Error("prediction '" + p.id + "' has a non-label 'label'");
    }
    if (auto probs = obj.find("probs"); probs != obj.end() && !probs->is_null()) {
        if (!probs->is_array() || probs->size() != 3)
            throw Error("prediction '" + p.id + "': 'probs' must be an array of 3 numbers");
        LabelProbs values{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(*probs)[i].is_number()) throw Error("prediction '" + p.id + "': non-numeric prob");
            values[i] = (*probs)[i].get<double>();
        }
        p.probs = values;
    }
    validate_prediction(p);
    return p;
}

template <typename Scalar>
JoinResult join(const Dataset& dataset, std::span<const Prediction> predictions,
                const EmbeddingTable<Scalar>& table, const StopWordList& stops) {
    const auto index = index_by_id(dataset);
    std::unordered_map<std::string, const Prediction*> by_id;
    std::vector<std::string> unknown;
    for (const auto& p : predictions) {
        if (!index.count(p.id)) {
            unknown.push_back(p.id);
            continue;
        }
        if (!by_id.emplace(p.id, &p).second) throw Error("duplicate prediction id '" + p.id + "'");
    }
    if (!unknown.empty()) {
        std::string msg = "predictions for ids absent from dataset '" + dataset.name + "':";
        for (const auto& id : unknown) msg += " " + id;
        throw Error(msg);
    }

    std::vector<SentencePair> predicted;
    std::vector<const Prediction*> preds;
    for (const auto& pair : dataset.pairs) {
        auto it = by_id.find(pair.id);
        if (it == by_id.end()) continue;
        predicted.push_back(pair);
        preds.push_back(it->second);
    }
    const auto sims = pair_similarities(table, std::span<const SentencePair>(predicted), stops);

    JoinResult result;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!sims[i]) {
            ++result.degenerate_count;
            result.degenerate_ids.push_back(predicted[i].id);
            continue;
        }
        result.records.push_back(make_record(predicted[i].id, *sims[i], predicted[i].gold, preds[i]->label));
    }
    return result;
}

template JoinResult join<float>(const Dataset&, std::span<const Prediction>, const EmbeddingTable<float>&,
                                const StopWordList&);
template JoinResult join<double>(const Dataset&, std::span<const Prediction>, const EmbeddingTable<double>&,
                                 const StopWordList&);

StratifiedCurve stratified_curve(std::span<const SimilarityRecord> records, double lo, double hi,
                                 double bin_width) {
    if (!(lo < hi)) throw Error("stratified_curve: lo must be below hi");
    if (!(bin_width > 0.0)) throw Error("stratified_curve: bin width must be positive");
    const double ratio = (hi - lo) / bin_width;
    const double nbins_real = std::round(ratio);
    if (std::abs(ratio - nbins_real) > 1e-9 || nbins_real < 1.0)
        throw Error("stratified_curve: bin width must divide (hi - lo)");
    const auto nbins = static_cast<std::size_t>(nbins_real);

    StratifiedCurve curve;
    curve.lo = lo;
    curve.hi = hi;
    curve.bin_width = bin_width;
    curve.bins.resize(nbins);
    for (std::size_t i = 0; i < nbins; ++i) {
        curve.bins[i].lo = lo + static_cast<double>(i) * bin_width;
        curve.bins[i].hi = i + 1 == nbins ? hi : lo + static_cast<double>(i + 1) * bin_width;
    }

    std::size_t correct_total = 0;
    std::size_t incorrect_total = 0;
    for (const auto& r : records) {
        if (r.similarity < lo - kEdgeEps) {
            ++curve.below_range;
            continue;
        }
        if (r.similarity > hi + kEdgeEps) {
            ++curve.above_range;
            continue;
        }
        auto bin = static_cast<std::size_t>(std::max(0.0, std::floor((r.similarity - lo) / bin_width + kEdgeEps)));
        bin = std::min(bin, nbins - 1);
        if (r.correct) {
            ++curve.bins[bin].correct_n;
            ++correct_total;
        } else {
            ++curve.bins[bin].incorrect_n;
            ++incorrect_total;
        }
    }
    for (auto& b : curve.bins) {
        b.correct_pct = pct(b.correct_n, correct_total);
        b.incorrect_pct = pct(b.incorrect_n, incorrect_total);
    }
    curve.correct_empty = correct_total == 0;
    curve.incorrect_empty = incorrect_total == 0;
    return curve;
}

CumulativeCurve cumulative_curve_at(std::span<const SimilarityRecord> records, std::vector<double> thresholds) {
    std::sort(thresholds.begin(), thresholds.end());
    std::vector<double> correct;
    std::vector<double> incorrect;
    for (const auto& r : records) (r.correct ? correct : incorrect).push_back(r.similarity);
    std::sort(correct.begin(), correct.end());
    std::sort(incorrect.begin(), incorrect.end());

    auto at_or_above = [](const std::vector<double>& sorted, double t) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), t - kEdgeEps);
        return static_cast<std::size_t>(sorted.end() - it);
    };
    CumulativeCurve curve;
    curve.correct_empty = correct.empty();
    curve.incorrect_empty = incorrect.empty();
    for (double t : thresholds) {
        curve.points.push_back({t, pct(at_or_above(correct, t), correct.size()),
                                pct(at_or_above(incorrect, t), incorrect.size())});
    }
    return curve;
}

CumulativeCurve cumulative_curve(std::span<const SimilarityRecord> records, double start, double step) {
    if (!(start < 1.0)) throw Error("cumulative_curve: start must be below 1.0");
    if (!(step > 0.0)) throw Error("cumulative_curve: step must be positive");
    const auto steps = static_cast<std::size_t>(std::floor((1.0 - start) / step + kEdgeEps));
    std::vector<double> thresholds;
    thresholds.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) thresholds.push_back(start + static_cast<double>(i) * step);
    return cumulative_curve_at(records, std::move(thresholds));
}

SubsetAccuracy subset_accuracy(std::span<const SimilarityRecord> records, Label gold_filter,
                               double min_similarity) {
    SubsetAccuracy out;
    for (const auto& r : records) {
        if (r.gold != gold_filter || !(r.similarity > min_similarity)) continue;
        ++out.subset_size;
        if (r.correct) ++out.correct;
    }
    if (out.subset_size > 0) out.percent = pct(out.correct, out.subset_size);
    return out;
}

LabelCounts label_distribution(std::span<const Prediction> predictions) {
    LabelCounts counts{};
    for (const auto& p : predictions) ++counts[static_cast<std::size_t>(code(p.label))];
    return counts;
}

LabelCounts gold_distribution(const Dataset& dataset) {
    LabelCounts counts{};
    for (const auto& p : dataset.pairs) ++counts[static_cast<std::size_t>(code(p.gold))];
    return counts;
}

double evaluate(const Dataset& gold, std::span<const Prediction> predictions) {
    const auto index = index_by_id(gold);
    std::vector<char> covered(gold.size(), 0);
    std::vector<std::string> unknown;
    std::size_t correct = 0;
    for (const auto& p : predictions) {
        auto it = index.find(p.id);
        if (it == index.end()) {
            unknown.push_back(p.id);
            continue;
        }
        if (covered[it->second]) throw Error("duplicate prediction id '" + p.id + "'");
        covered[it->second] = 1;
        if (gold.pairs[it->second].gold == p.label) ++correct;
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (!covered[i]) missing.push_back(gold.pairs[i].id);
    if (!unknown.empty() || !missing.empty()) {
        std::string msg = "prediction coverage mismatch for '" + gold.name + "'";
        auto list = [&msg](const char* what, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            msg += std::string("; ") + what + " (" + std::to_string(ids.size()) + "):";
            for (std::size_t i = 0; i < ids.size() && i < 20; ++i) msg += " " + ids[i];
            if (ids.size() > 20) msg += " ...";
        };
        list("missing ids", missing);
        list("unknown ids", unknown);
        throw Error(msg);
    }
    if (gold.empty()) throw Error("cannot evaluate against empty dataset '" + gold.name + "'");
    return pct(correct, gold.size());
}

Json to_json(const EvalReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json obj;
    obj["snli_test_acc"] = opt(report.snli_test_acc);
    obj["similar_contra_acc"] = opt(report.similar_contra_acc);
    obj["similar_contra_size"] = report.similar_contra_size;
    obj["challenge_acc"] = opt(report.challenge_acc);
    obj["degenerate_count"] = report.degenerate_count;
    obj["threshold"] = report.threshold;
    obj["stopwords_version"] = report.stopwords_version;
    Json sets = Json::array();
    for (const auto& s : report.sets) {
        Json dist;
        for (auto l : kAllLabels) dist[std::string(to_string(l))] = s.predicted_distribution[code(l)];
        sets.push_back(Json{{"name", s.name}, {"pairs", s.pairs}, {"accuracy", s.accuracy},
                            {"label_distribution", dist}});
    }
    obj["sets"] = std::move(sets);
    return obj;
}

std::string render_ablation_table(std::span<const AblationRow> rows) {
    const std::array<std::string, 4> header = {"Finetuned Set", "SNLI Test", "SNLI contra", "Adv. test"};
    std::vector<std::array<std::string, 4>> cells;
    auto metric = [](const AblationRow& r, const std::optional<double>& v) {
        if (r.failed) return std::string("failed");
        if (!v) return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(1) << *v;
        return s.str();
    };
    for (const auto& r : rows) cells.push_back({r.config, metric(r, r.snli_test), metric(r, r.snli_contra),
                                                metric(r, r.adv_test)});
    std::array<std::size_t, 4> width{};
    for (std::size_t c = 0; c < 4; ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::array<std::string, 4>& row) {
        out << std::left << std::setw(static_cast<int>(width[0])) << row[0];
        for (std::size_t c = 1; c < 4; ++c) out << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
        out << '\n';
    };
    emit(header);
    for (const auto& row : cells) emit(row);
    return out.str();
}

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
    out << kAblationHeader << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.config) << ',' << csv_field(r.mixture) << ','
            << (r.n_adversarial ? std::to_string(*r.n_adversarial) : std::string()) << ','
            << opt_double(r.snli_test) << ',' << opt_double(r.snli_contra) << ',' << opt_double(r.adv_test) << ','
            << (r.failed ? csv_field("failed: " + r.error) : std::string("ok")) << '\n';
    }
}

std::vector<AblationRow> read_ablation_csv(std::istream& in) {
    std::vector<AblationRow> rows;
    std::size_t lineno = 1;
    for (auto& f : read_csv(in, kAblationHeader)) {
        ++lineno;
        AblationRow r;
        r.config = f[0];
        r.mixture = f[1];
        if (!f[2].empty()) r.n_adversarial = static_cast<int>(parse_count(f[2], lineno));
        auto opt = [lineno](const std::string& s) {
            return s.empty() ? std::optional<double>() : std::optional<double>(parse_double(s, lineno));
        };
        r.snli_test = opt(f[3]);
        r.snli_contra = opt(f[4]);
        r.adv_test = opt(f[5]);
        if (f[6] != "ok") {
            r.failed = true;
            r.error = f[6].rfind("failed: ", 0) == 0 ? f[6].substr(8) : f[6];
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_chart_csv(const StratifiedCurve& curve, std::ostream& out) {
    out << kStratifiedHeader << '\n';
    for (const auto& b : curve.bins)
        out << fmt_double(b.lo) << ',' << fmt_double(b.hi) << ',' << fmt_double(b.correct_pct) << ','
            << fmt_double(b.incorrect_pct) << ',' << b.correct_n << ',' << b.incorrect_n << '\n';
}

void write_chart_csv(const CumulativeCurve& curve, std::ostream& out) {
    out << kCumulativeHeader << '\n';
    for (const auto& p : curve.points)
        out << fmt_double(p.threshold) << ',' << fmt_double(p.cum_correct_pct) << ','
            << fmt_double(p.cum_incorrect_pct) << '\n';
}

void write_chart_csv(const LabelCounts& counts, std::ostream& out) {
    out << kDistributionHeader << '\n';
    for (auto l : kAllLabels) out << to_string(l) << ',' << counts[code(l)] << '\n';
}

void write_sweep_csv(std::span<const AblationRow> rows, std::ostream& out) {
    out << kSweepHeader << '\n';
    for (const auto& r : rows) {
        if (!r.n_adversarial) continue;
        out << *r.n_adversarial << ',' << opt_double(r.snli_test) << ',' << opt_double(r.snli_contra) << ','
            << opt_double(r.adv_test) << '\n';
    }
}

StratifiedCurve read_stratified_csv(std::istream& in) {
    StratifiedCurve curve;
    std::size_t lineno = 1;
    std::size_t correct_total = 0;
    std::size_t incorrect_total = 0;
    for (auto& f : read_csv(in, kStratifiedHeader)) {
        ++lineno;
        StratifiedBin b{parse_double(f[0], lineno), parse_double(f[1], lineno), parse_double(f[2], lineno),
                        parse_double(f[3], lineno), parse_count(f[4], lineno), parse_count(f[5], lineno)};
        correct_total += b.correct_n;
        incorrect_total += b.incorrect_n;
        curve.bins.push_back(b);
    }
    if (!curve.bins.empty()) {
        curve.lo = curve.bins.front().lo;
        curve.hi = curve.bins.back().hi;
        curve.bin_width = curve.bins.front().hi - curve.bins.front().lo;
    }
    curve.correct_empty = correct_total == 0;
    curve.incorrect_empty = incorrect_total == 0;
    return curve;
}

CumulativeCurve read_cumulative_csv(std::istream& in) {
    CumulativeCurve curve;
    std::size_t lineno = 1;
    for (auto& f : read_csv(in, kCumulativeHeader)) {
        ++lineno;
        curve.points.push_back({parse_double(f[0], lineno), parse_double(f[1], lineno), parse_double(f[2], lineno)});
    }
    return curve;
}

LabelCounts read_distribution_csv(std::istream& in) {
    LabelCounts counts{};
    std::size_t lineno = 1;
    for (auto& f : read_csv(in, kDistributionHeader)) {
        ++lineno;
        counts[static_cast<std::size_t>(code(parse_label(f[0])))] = parse_count(f[1], lineno);
    }
    return counts;
}

template <typename Curve>
void emit_chart_data(const Curve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    write_chart_csv(curve, out);
    out.flush();
    if (!out) throw IoError(path.string(), "write failed");
}

template void emit_chart_data<StratifiedCurve>(const StratifiedCurve&, const std::filesystem::path&);
template void emit_chart_data<CumulativeCurve>(const CumulativeCurve&, const std::filesystem::path&);
template void emit_chart_data<LabelCounts>(const LabelCounts&, const std::filesystem::path&);

}  // namespace inoculate
