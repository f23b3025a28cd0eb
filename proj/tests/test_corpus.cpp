#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "inoculate/corpus.hpp"
#include "inoculate/error.hpp"
#include "inoculate/prng.hpp"
#include "test_support.hpp"

using namespace inoculate;
using testing_support::data_dir;
using testing_support::TempDir;

namespace {

// Reference SplitMix64 + Fisher-Yates written from the published constants,
// kept separate from the library implementation.
struct OracleRng {
    std::uint64_t s;
    std::uint64_t next() {
        s += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = (~std::uint64_t{0} - n + 1) % n;
        while (true) {
            auto r = next();
            if (r >= limit) return r % n;
        }
    }
};

std::vector<std::string> oracle_sample_ids(const Dataset& d, std::size_t n, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& p : d.pairs) ids.push_back(p.id);
    OracleRng rng{seed};
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    ids.resize(n);
    return ids;
}

std::vector<std::string> golden_ids(const std::string& name) {
    std::istringstream in(testing_support::read_file(data_dir() / name));
    std::vector<std::string> ids;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ids.push_back(line);
    return ids;
}

std::vector<std::string> ids_of(const Dataset& d) {
    std::vector<std::string> ids;
    for (const auto& p : d.pairs) ids.push_back(p.id);
    return ids;
}

Dataset load_string(const std::string& text, const std::string& name = "mem") {
    std::istringstream in(text);
    return read_jsonl(in, name, name);
}

}  // namespace

TEST(Label, NamesAndCodesRoundTrip) {
    for (auto l : kAllLabels) {
        EXPECT_EQ(parse_label(to_string(l)), l);
        EXPECT_EQ(parse_label(std::to_string(code(l))), l);
        EXPECT_EQ(label_from_code(code(l)), l);
    }
    EXPECT_EQ(parse_label("Contradiction"), Label::contradiction);
    EXPECT_EQ(parse_label("NEUTRAL"), Label::neutral);
    EXPECT_EQ(code(Label::entailment), 0);
    EXPECT_EQ(code(Label::neutral), 1);
    EXPECT_EQ(code(Label::contradiction), 2);
    EXPECT_THROW(parse_label("contra"), Error);
    EXPECT_THROW(parse_label("3"), Error);
    EXPECT_THROW(parse_label("-"), Error);
}

TEST(LoadJsonl, EmptyFileGivesEmptyDataset) {
    TempDir tmp;
    testing_support::write_file(tmp / "empty.jsonl", "");
    auto d = load_jsonl(tmp / "empty.jsonl");
    EXPECT_EQ(d.size(), 0u);
    EXPECT_EQ(d.name, "empty");
}

TEST(LoadJsonl, ThreeLinesInFileOrder) {
    auto d = load_jsonl(data_dir() / "three_pairs.jsonl");
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(ids_of(d), (std::vector<std::string>{"t1", "t2", "t3"}));
    EXPECT_EQ(d.pairs[0].gold, Label::entailment);
    EXPECT_EQ(d.pairs[1].gold, Label::neutral);
    EXPECT_EQ(d.pairs[2].gold, Label::contradiction);
    EXPECT_EQ(std::get<OriginalProvenance>(d.pairs[0].provenance).split, "train");
}

TEST(LoadJsonl, MissingIdUsesNameAndLine) {
    auto d = load_string(R"({"premise":"a b","hypothesis":"c d","label":"neutral"})"
                         "\n"
                         R"({"premise":"e f","hypothesis":"g h","label":2})",
                         "dev");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.pairs[0].id, "dev:1");
    EXPECT_EQ(d.pairs[1].id, "dev:2");
    EXPECT_EQ(d.pairs[1].gold, Label::contradiction);
}

TEST(LoadJsonl, ErrorsNameTheLine) {
    try {
        load_string("{\"id\":\"a\",\"premise\":\"x\",\"hypothesis\":\"y\",\"label\":\"neutral\"}\n{not json}\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    try {
        load_string("\n{\"id\":\"a\",\"premise\":\"x\",\"hypothesis\":\"y\",\"label\":\"maybe\"}\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("maybe"), std::string::npos);
    }
    try {
        load_string("{\"id\":\"a\",\"premise\":\"x\",\"hypothesis\":\"y\",\"label\":\"neutral\"}\n"
                    "{\"id\":\"a\",\"premise\":\"x\",\"hypothesis\":\"z\",\"label\":\"neutral\"}\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
}

TEST(LoadJsonl, RejectsBlankTextAndUncatalogedRules) {
    EXPECT_THROW(load_string(R"({"id":"a","premise":"   ","hypothesis":"y","label":"neutral"})"), ParseError);
    EXPECT_THROW(load_string(R"({"id":"a","premise":"x","hypothesis":"y","label":"contradiction",)"
                             R"("provenance":{"kind":"perturbed","rule":"synonym","source_id":"s"}})"),
                 ParseError);
    EXPECT_THROW(load_string(R"({"id":"a","premise":"x","hypothesis":"y","label":"contradiction",)"
                             R"("provenance":{"kind":"perturbed","rule":"preposition_swap","source_id":""}})"),
                 ParseError);
}

TEST(WriteJsonl, RoundTripIsFieldIdentity) {
    TempDir tmp;
    auto d = load_jsonl(data_dir() / "three_pairs.jsonl");
    d.pairs.push_back({"p1", "A cat sits above a mat.", "A cat sits on a mat.", Label::contradiction,
                       PerturbedProvenance{"preposition_swap", "t3", true}});
    write_jsonl(d, tmp / "out.jsonl");
    auto back = load_jsonl(tmp / "out.jsonl", d.name);
    EXPECT_EQ(back, d);

    const auto text = testing_support::read_file(tmp / "out.jsonl");
    EXPECT_NE(text.find(R"("provenance":{"kind":"perturbed","rule":"preposition_swap","source_id":"t3")"),
              std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(WriteJsonl, CanonicalFieldOrder) {
    Dataset d{"x", {{"a", "P.", "H.", Label::neutral, OriginalProvenance{"test"}}}};
    std::ostringstream out;
    write_jsonl(d, out);
    EXPECT_EQ(out.str(),
              R"({"id":"a","premise":"P.","hypothesis":"H.","label":"neutral","provenance":{"kind":"original","split":"test"}})"
              "\n");
}

TEST(WriteJsonl, EmptyDatasetEmptyFile) {
    TempDir tmp;
    write_jsonl(Dataset{"e", {}}, tmp / "e.jsonl");
    EXPECT_EQ(std::filesystem::file_size(tmp / "e.jsonl"), 0u);
}

TEST(WriteJsonl, UnwritablePathNamesIt) {
    try {
        write_jsonl(Dataset{"e", {}}, "/nonexistent-dir/x.jsonl");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_EQ(e.path(), "/nonexistent-dir/x.jsonl");
    }
}

TEST(ImportSnli, MapsNativeFieldsAndDropsDash) {
    auto r = import_snli(data_dir() / "snli_native.jsonl", "train");
    EXPECT_EQ(r.dropped_unlabeled, 1u);
    ASSERT_EQ(r.dataset.size(), 3u);
    EXPECT_EQ(r.dataset.pairs[0].id, "3416050480.jpg#4r1n");
    EXPECT_EQ(r.dataset.pairs[0].premise, "A person on a horse jumps over a broken down airplane.");
    EXPECT_EQ(r.dataset.pairs[1].gold, Label::contradiction);
    EXPECT_EQ(std::get<OriginalProvenance>(r.dataset.pairs[2].provenance).split, "train");
}

TEST(FilterByLabel, IdentityAndCount) {
    auto fixture = testing_support::contradiction_fixture();
    EXPECT_EQ(filter_by_label(fixture, Label::contradiction).pairs, fixture.pairs);
    auto three = load_jsonl(data_dir() / "three_pairs.jsonl");
    auto c = filter_by_label(three, Label::contradiction);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.pairs[0].id, "t3");
}

TEST(FilterByLabel, PartitionsRandomDatasets) {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Dataset d{"r", {}};
        const auto n = rng.below(40);
        for (std::uint64_t i = 0; i < n; ++i)
            d.pairs.push_back({"id" + std::to_string(i), "p", "h", label_from_code(static_cast<int>(rng.below(3))),
                               OriginalProvenance{"train"}});
        std::size_t total = 0;
        std::set<std::string> seen;
        for (auto l : kAllLabels) {
            auto part = filter_by_label(d, l);
            total += part.size();
            for (const auto& p : part.pairs) {
                EXPECT_EQ(p.gold, l);
                EXPECT_TRUE(seen.insert(p.id).second);
            }
            // original relative order
            for (std::size_t i = 1; i < part.size(); ++i)
                EXPECT_LT(std::stoi(part.pairs[i - 1].id.substr(2)), std::stoi(part.pairs[i].id.substr(2)));
        }
        EXPECT_EQ(total, d.size());
    }
}

TEST(Sample, DeterministicAndWithoutReplacement) {
    auto d = testing_support::contradiction_fixture();
    EXPECT_EQ(sample(d, 2, 7), sample(d, 2, 7));
    auto all = sample(d, d.size(), 11);
    std::set<std::string> ids;
    for (const auto& p : all.pairs) ids.insert(p.id);
    EXPECT_EQ(ids.size(), d.size());
    EXPECT_THROW(sample(d, d.size() + 1, 0), Error);
    EXPECT_EQ(sample(d, 0, 0).size(), 0u);
}

TEST(Sample, MatchesReferenceShuffle) {
    auto d = testing_support::contradiction_fixture();
    for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 8ULL, 12345ULL, ~0ULL})
        for (std::size_t n : {0u, 1u, 2u, 5u, 20u}) EXPECT_EQ(ids_of(sample(d, n, seed)), oracle_sample_ids(d, n, seed));
}

TEST(Sample, GoldenFilesSeeds7And8) {
    auto d = testing_support::contradiction_fixture();
    EXPECT_EQ(ids_of(sample(d, 2, 7)), golden_ids("sample_fixture20_n2_seed7.txt"));
    EXPECT_EQ(ids_of(sample(d, 2, 8)), golden_ids("sample_fixture20_n2_seed8.txt"));
}
