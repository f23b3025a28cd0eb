#include <gtest/gtest.h>

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "inoculate/analysis.hpp"
#include "inoculate/prng.hpp"
#include "test_support.hpp"

using namespace inoculate;
using namespace testing_support;

namespace {

SentencePair pair(std::string id, std::string premise, std::string hypothesis, Label gold) {
    return {std::move(id), std::move(premise), std::move(hypothesis), gold, OriginalProvenance{"test"}};
}

Dataset toy_dataset() {
    return {"toy",
            {pair("p1", "cat", "cat", Label::contradiction), pair("p2", "cat dog", "cat", Label::entailment),
             pair("p3", "dog", "cat", Label::neutral), pair("p4", "the cat", "a dog", Label::contradiction)}};
}

// Hand fixture: 0.55 and 0.65 correct, 0.85 and 0.95 incorrect.
std::vector<SimilarityRecord> hand_records() {
    return {make_record("a", 0.55, Label::contradiction, Label::contradiction),
            make_record("b", 0.65, Label::entailment, Label::entailment),
            make_record("c", 0.85, Label::contradiction, Label::neutral),
            make_record("d", 0.95, Label::contradiction, Label::entailment)};
}

}  // namespace

TEST(Prediction, Validation) {
    EXPECT_NO_THROW(validate_prediction(make_prediction("x", Label::neutral)));
    EXPECT_NO_THROW(validate_prediction({"x", Label::neutral, std::nullopt}));
    EXPECT_THROW(validate_prediction({"x", Label::neutral, LabelProbs{0.5, 0.5, 0.5}}), Error);
    EXPECT_THROW(validate_prediction({"x", Label::neutral, LabelProbs{0.8, 0.1, 0.1}}), Error);
    EXPECT_THROW(validate_prediction({"x", Label::neutral, LabelProbs{-0.1, 1.1, 0.0}}), Error);
}

TEST(Prediction, JsonRoundTrip) {
    const auto p = make_prediction("q7", Label::contradiction);
    EXPECT_EQ(prediction_from_json(to_json(p)), p);
    EXPECT_THROW(prediction_from_json(Json::parse(R"({"id":3,"label":"neutral"})")), Error);
    EXPECT_THROW(prediction_from_json(Json::parse(R"({"id":"a","label":"maybe"})")), Error);
    EXPECT_THROW(prediction_from_json(Json::parse(R"({"id":"a","label":"neutral","probs":[1,0]})")), Error);
}

TEST(Join, ZeroPredictions) {
    const auto r = join(toy_dataset(), {}, toy_table(), StopWordList::builtin());
    EXPECT_TRUE(r.records.empty());
    EXPECT_EQ(r.degenerate_count, 0u);
}

TEST(Join, FourPairFixture) {
    const std::vector<Prediction> preds = {make_prediction("p4", Label::contradiction),
                                           make_prediction("p2", Label::neutral),
                                           make_prediction("p1", Label::contradiction),
                                           make_prediction("p3", Label::neutral)};
    const auto r = join(toy_dataset(), preds, toy_table(), StopWordList::builtin());
    ASSERT_EQ(r.records.size(), 4u);
    const std::vector<std::string> ids = {"p1", "p2", "p3", "p4"};
    const std::vector<bool> correct = {true, false, true, true};
    const std::vector<double> sims = {1.0, 0.7071068, 0.0, 0.0};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(r.records[i].id, ids[i]);
        EXPECT_EQ(r.records[i].correct, correct[i]) << ids[i];
        EXPECT_NEAR(r.records[i].similarity, sims[i], 1e-6) << ids[i];
    }
}

TEST(Join, AllStopWordHypothesisIsDegenerate) {
    auto ds = toy_dataset();
    ds.pairs[2].hypothesis = "the a of";
    std::vector<Prediction> preds;
    for (const auto& p : ds.pairs) preds.push_back(make_prediction(p.id, p.gold));
    const auto r = join(ds, preds, toy_table(), StopWordList::builtin());
    EXPECT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.degenerate_count, 1u);
    EXPECT_EQ(r.degenerate_ids, std::vector<std::string>{"p3"});
}

TEST(Join, UnknownAndDuplicateIds) {
    const std::vector<Prediction> unknown = {make_prediction("p1", Label::neutral),
                                             make_prediction("zz", Label::neutral)};
    try {
        join(toy_dataset(), unknown, toy_table(), StopWordList::builtin());
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
    }
    const std::vector<Prediction> dup = {make_prediction("p1", Label::neutral), make_prediction("p1", Label::neutral)};
    EXPECT_THROW(join(toy_dataset(), dup, toy_table(), StopWordList::builtin()), Error);
}

TEST(Stratified, HandBinning) {
    const auto recs = hand_records();
    const auto c = stratified_curve(recs, 0.5, 1.0, 0.1);
    ASSERT_EQ(c.bins.size(), 5u);
    const double want_correct[] = {50, 50, 0, 0, 0};
    const double want_incorrect[] = {0, 0, 0, 50, 50};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(c.bins[i].correct_pct, want_correct[i]) << i;
        EXPECT_EQ(c.bins[i].incorrect_pct, want_incorrect[i]) << i;
    }
    EXPECT_FALSE(c.correct_empty);
    EXPECT_FALSE(c.incorrect_empty);
    EXPECT_EQ(c.below_range + c.above_range, 0u);
}

TEST(Stratified, EmptyPopulationFlagged) {
    const std::vector<SimilarityRecord> recs = {make_record("a", 0.7, Label::neutral, Label::neutral)};
    const auto c = stratified_curve(recs);
    EXPECT_TRUE(c.incorrect_empty);
    EXPECT_FALSE(c.correct_empty);
    for (const auto& b : c.bins) EXPECT_EQ(b.incorrect_pct, 0.0);
}

TEST(Stratified, Boundaries) {
    const std::vector<SimilarityRecord> at_lo = {make_record("a", 0.5, Label::neutral, Label::neutral)};
    EXPECT_EQ(stratified_curve(at_lo).bins.front().correct_n, 1u);
    const std::vector<SimilarityRecord> at_hi = {make_record("a", 1.0, Label::neutral, Label::neutral)};
    EXPECT_EQ(stratified_curve(at_hi).bins.back().correct_n, 1u);
    // 0.6 sits on an inner edge: left-closed puts it in the second bin.
    const std::vector<SimilarityRecord> edge = {make_record("a", 0.6, Label::neutral, Label::neutral)};
    EXPECT_EQ(stratified_curve(edge, 0.5, 1.0, 0.1).bins[1].correct_n, 1u);
    const std::vector<SimilarityRecord> outside = {make_record("a", 0.2, Label::neutral, Label::neutral),
                                                   make_record("b", 0.9, Label::neutral, Label::entailment)};
    const auto c = stratified_curve(outside);
    EXPECT_EQ(c.below_range, 1u);
    EXPECT_TRUE(c.correct_empty);
}

TEST(Stratified, RejectsBadGeometry) {
    EXPECT_THROW(stratified_curve({}, 1.0, 0.5, 0.1), Error);
    EXPECT_THROW(stratified_curve({}, 0.5, 1.0, 0.0), Error);
    EXPECT_THROW(stratified_curve({}, 0.5, 1.0, 0.3), Error);
}

TEST(Cumulative, HandCounts) {
    const auto recs = hand_records();
    const auto c = cumulative_curve(recs);
    ASSERT_EQ(c.points.size(), 21u);
    EXPECT_EQ(c.points.front().threshold, 0.8);
    EXPECT_EQ(c.points.front().cum_correct_pct, 0.0);
    EXPECT_EQ(c.points.front().cum_incorrect_pct, 100.0);
    EXPECT_NEAR(c.points.back().threshold, 1.0, 1e-12);

    const auto below = cumulative_curve_at(recs, {0.1});
    EXPECT_EQ(below.points[0].cum_correct_pct, 100.0);
    EXPECT_EQ(below.points[0].cum_incorrect_pct, 100.0);
    const auto above = cumulative_curve_at(recs, {0.99});
    EXPECT_EQ(above.points[0].cum_correct_pct, 0.0);
    EXPECT_EQ(above.points[0].cum_incorrect_pct, 0.0);
    const auto mid = cumulative_curve_at(recs, {0.9, 0.6});
    EXPECT_EQ(mid.points[0].threshold, 0.6);
    EXPECT_EQ(mid.points[0].cum_correct_pct, 50.0);
    EXPECT_EQ(mid.points[1].cum_incorrect_pct, 50.0);
}

TEST(Cumulative, RandomizedInvariants) {
    SplitMix64 rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto recs = random_records(rng);
        std::size_t n_correct = 0;
        double min_sim = 2.0;
        for (const auto& r : recs) {
            n_correct += r.correct;
            min_sim = std::min(min_sim, r.similarity);
        }
        const std::size_t n_incorrect = recs.size() - n_correct;

        const auto cum = cumulative_curve(recs, -0.2, 0.05);
        for (std::size_t i = 1; i < cum.points.size(); ++i) {
            ASSERT_LE(cum.points[i].cum_correct_pct, cum.points[i - 1].cum_correct_pct);
            ASSERT_LE(cum.points[i].cum_incorrect_pct, cum.points[i - 1].cum_incorrect_pct);
        }
        const auto at_min = cumulative_curve_at(recs, {min_sim});
        ASSERT_EQ(at_min.points[0].cum_correct_pct, n_correct ? 100.0 : 0.0);
        ASSERT_EQ(at_min.points[0].cum_incorrect_pct, n_incorrect ? 100.0 : 0.0);

        const auto strat = stratified_curve(recs);
        std::size_t c_in = 0, i_in = 0;
        double c_pct = 0, i_pct = 0;
        for (const auto& b : strat.bins) {
            c_in += b.correct_n;
            i_in += b.incorrect_n;
            c_pct += b.correct_pct;
            i_pct += b.incorrect_pct;
        }
        ASSERT_EQ(c_in + i_in + strat.below_range + strat.above_range, recs.size());
        ASSERT_NEAR(c_pct, c_in ? 100.0 : 0.0, 1e-6);
        ASSERT_NEAR(i_pct, i_in ? 100.0 : 0.0, 1e-6);
        ASSERT_EQ(strat.correct_empty, c_in == 0);
    }
}

TEST(Cumulative, ConcentratedIncorrectShape) {
    const auto recs = concentrated_incorrect_fixture();
    ASSERT_EQ(recs.size(), 500u);
    const auto c = cumulative_curve(recs);
    for (const auto& p : c.points) EXPECT_GE(p.cum_incorrect_pct, p.cum_correct_pct) << p.threshold;
}

TEST(Subset, HandCount) {
    const std::vector<SimilarityRecord> recs = {
        make_record("a", 0.9, Label::contradiction, Label::contradiction),
        make_record("b", 0.85, Label::contradiction, Label::neutral),
        make_record("c", 0.7, Label::contradiction, Label::contradiction),
        make_record("d", 0.95, Label::entailment, Label::neutral)};
    const auto s = subset_accuracy(recs, Label::contradiction, 0.8);
    ASSERT_TRUE(s.percent);
    EXPECT_EQ(*s.percent, 50.0);
    EXPECT_EQ(s.subset_size, 2u);
    EXPECT_EQ(s.correct, 1u);

    // Strict inequality at the threshold.
    const std::vector<SimilarityRecord> at = {make_record("a", 0.8, Label::contradiction, Label::contradiction)};
    EXPECT_EQ(subset_accuracy(at, Label::contradiction, 0.8).subset_size, 0u);
    const auto empty = subset_accuracy(recs, Label::contradiction, 0.99);
    EXPECT_FALSE(empty.percent);
    EXPECT_EQ(empty.subset_size, 0u);
}

TEST(Subset, MinusOneMatchesEvaluateOnLabel) {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto recs = random_records(rng);
        Dataset ds{"d", {}};
        std::vector<Prediction> preds;
        for (const auto& r : recs) {
            if (r.gold != Label::contradiction) continue;
            ds.pairs.push_back(pair(r.id, "x", "y", r.gold));
            preds.push_back(make_prediction(r.id, r.predicted));
        }
        const auto s = subset_accuracy(recs, Label::contradiction, -1.0);
        if (ds.empty()) {
            EXPECT_FALSE(s.percent);
            continue;
        }
        ASSERT_TRUE(s.percent);
        EXPECT_EQ(*s.percent, evaluate(ds, preds));
    }
}

TEST(Distribution, Counts) {
    EXPECT_EQ(label_distribution({}), (LabelCounts{0, 0, 0}));
    std::vector<Prediction> all(4, make_prediction("x", Label::contradiction));
    EXPECT_EQ(label_distribution(all), (LabelCounts{0, 0, 4}));
    const std::vector<Prediction> mixed = {
        make_prediction("1", Label::entailment), make_prediction("2", Label::contradiction),
        make_prediction("3", Label::neutral), make_prediction("4", Label::contradiction),
        make_prediction("5", Label::entailment)};
    EXPECT_EQ(label_distribution(mixed), (LabelCounts{2, 1, 2}));
    EXPECT_EQ(gold_distribution(toy_dataset()), (LabelCounts{1, 1, 2}));
}

TEST(Evaluate, Cases) {
    const auto ds = toy_dataset();
    std::vector<Prediction> right, wrong;
    for (const auto& p : ds.pairs) {
        right.push_back(make_prediction(p.id, p.gold));
        wrong.push_back(make_prediction(p.id, label_from_code((code(p.gold) + 1) % 3)));
    }
    EXPECT_EQ(evaluate(ds, right), 100.0);
    EXPECT_EQ(evaluate(ds, wrong), 0.0);
    auto half = right;
    half[0] = wrong[0];
    std::reverse(half.begin(), half.end());
    EXPECT_EQ(evaluate(ds, half), 75.0);

    try {
        evaluate(ds, std::span<const Prediction>(right).first(2));
        FAIL() << "expected a coverage error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("p3"), std::string::npos);
        EXPECT_NE(msg.find("p4"), std::string::npos);
    }
    EXPECT_THROW(evaluate(ds, {}), Error);
}

TEST(Evaluate, PermutationInvariant) {
    const auto ds = contradiction_fixture();
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < ds.size(); ++i)
        preds.push_back(make_prediction(ds.pairs[i].id, i % 3 ? Label::contradiction : Label::entailment));
    const double base = evaluate(ds, preds);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<Prediction> shuffled;
        for (auto i : seeded_permutation(preds.size(), seed)) shuffled.push_back(preds[i]);
        EXPECT_EQ(evaluate(ds, shuffled), base);
    }
}

namespace {

std::vector<AblationRow> table_rows() {
    return {{"Baseline", "baseline", std::nullopt, 89.2, 91.2, 62.0, false, ""},
            {"300 SNLI", "300 SNLI", 0, 89.1, 90.6, 62.0, false, ""},
            {"100 adversarial", "100 adversarial", 100, 88.4, 93.7, 72.0, false, ""},
            {"100 adversarial + 200 SNLI", "100 adversarial + 200 SNLI", 100, 88.9, 92.9, 75.0, false, ""}};
}

std::vector<std::vector<std::string>> table_cells(const std::string& table) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(table);
    std::string line;
    const std::regex sep(" {2,}");
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        for (std::sregex_token_iterator it(line.begin(), line.end(), sep, -1), end; it != end; ++it)
            if (!it->str().empty()) cells.push_back(*it);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(AblationTable, DefaultRows) {
    const auto text = render_ablation_table(table_rows());
    const std::vector<std::vector<std::string>> want = {
        {"Finetuned Set", "SNLI Test", "SNLI contra", "Adv. test"},
        {"Baseline", "89.2", "91.2", "62.0"},
        {"300 SNLI", "89.1", "90.6", "62.0"},
        {"100 adversarial", "88.4", "93.7", "72.0"},
        {"100 adversarial + 200 SNLI", "88.9", "92.9", "75.0"}};
    EXPECT_EQ(table_cells(text), want);

    // Columns line up: every line has the same length.
    std::istringstream in(text);
    std::string line;
    std::set<std::size_t> lengths;
    while (std::getline(in, line)) lengths.insert(line.size());
    EXPECT_EQ(lengths.size(), 1u);
}

TEST(AblationTable, SingleAndFailedRows) {
    const std::vector<AblationRow> one = {table_rows()[0]};
    EXPECT_EQ(table_cells(render_ablation_table(one)).size(), 2u);
    AblationRow bad{"broken", "x", 10, std::nullopt, std::nullopt, std::nullopt, true, "trainer exited 7"};
    AblationRow partial{"no-glove", "x", 10, 80.0, std::nullopt, 70.0, false, ""};
    const std::vector<AblationRow> rows = {bad, partial};
    const auto cells = table_cells(render_ablation_table(rows));
    EXPECT_EQ(cells[1], (std::vector<std::string>{"broken", "failed", "failed", "failed"}));
    EXPECT_EQ(cells[2], (std::vector<std::string>{"no-glove", "80.0", "-", "70.0"}));
}

TEST(AblationCsv, RoundTrip) {
    auto rows = table_rows();
    rows.push_back({"odd, \"quoted\" name", "m", 5, 1.0 / 3.0, std::nullopt, 0.1 + 0.2, false, ""});
    rows.push_back({"broken", "x", 10, std::nullopt, std::nullopt, std::nullopt, true, "exit 7, see log"});
    std::stringstream s;
    write_ablation_csv(rows, s);
    EXPECT_EQ(read_ablation_csv(s), rows);

    std::stringstream sweep;
    write_sweep_csv(rows, sweep);
    const auto text = sweep.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "n_adversarial,snli_test,snli_contra,adv_test");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);  // baseline has no x value
}

TEST(ChartCsv, RoundTrips) {
    const auto recs = hand_records();
    const auto strat = stratified_curve(recs, 0.5, 1.0, 0.1);
    std::stringstream s1;
    write_chart_csv(strat, s1);
    EXPECT_EQ(s1.str().substr(0, s1.str().find('\n')), "bin_lo,bin_hi,correct_pct,incorrect_pct,correct_n,incorrect_n");
    const auto back = read_stratified_csv(s1);
    EXPECT_EQ(back.bins, strat.bins);
    EXPECT_EQ(back.correct_empty, strat.correct_empty);

    const auto cum = cumulative_curve(recs);
    std::stringstream s2;
    write_chart_csv(cum, s2);
    EXPECT_EQ(s2.str().substr(0, s2.str().find('\n')), "threshold,cum_correct_pct,cum_incorrect_pct");
    EXPECT_EQ(read_cumulative_csv(s2).points, cum.points);

    const LabelCounts counts{3, 5, 92};
    std::stringstream s3;
    write_chart_csv(counts, s3);
    EXPECT_EQ(read_distribution_csv(s3), counts);

    std::stringstream bad("threshold,wrong\n");
    EXPECT_THROW(read_cumulative_csv(bad), ParseError);
}

TEST(ChartCsv, EmitToFile) {
    TempDir dir;
    const auto strat = stratified_curve(hand_records(), 0.5, 1.0, 0.1);
    emit_chart_data(strat, dir / "s.csv");
    std::istringstream in(read_file(dir / "s.csv"));
    EXPECT_EQ(read_stratified_csv(in).bins, strat.bins);
    EXPECT_THROW(emit_chart_data(strat, dir / "missing" / "s.csv"), IoError);
}

TEST(EvalReport, Json) {
    EvalReport r;
    r.snli_test_acc = 89.2;
    r.similar_contra_size = 0;
    r.stopwords_version = "en-v1";
    r.sets.push_back({"snli-test", 10, 89.2, {1, 2, 7}});
    const auto j = to_json(r);
    EXPECT_EQ(j["snli_test_acc"], 89.2);
    EXPECT_TRUE(j["similar_contra_acc"].is_null());
    EXPECT_TRUE(j["challenge_acc"].is_null());
    EXPECT_EQ(j["threshold"], 0.8);
    EXPECT_EQ(j["sets"][0]["label_distribution"]["contradiction"], 7);
}
