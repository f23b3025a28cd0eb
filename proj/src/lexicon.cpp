#include <sstream>
#include <unordered_set>

#include "inoculate/error.hpp"
#include "inoculate/perturb.hpp"

namespace inoculate {

namespace resources {
extern const std::string_view kVerbsEnV1;
}

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::vector<std::string> split_words(std::string_view phrase) {
    std::vector<std::string> words;
    std::istringstream in{std::string(phrase)};
    for (std::string w; in >> w;) words.push_back(ascii_lower(w));
    return words;
}

bool word_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::string_view to_string(RuleKind r) {
    switch (r) {
        case RuleKind::negation_mirror: return "negation_mirror";
        case RuleKind::abstract_detail: return "abstract_detail";
        case RuleKind::preposition_swap: return "preposition_swap";
    }
    return "?";
}

std::optional<RuleKind> parse_rule(std::string_view name) {
    for (auto r : kAllRules)
        if (to_string(r) == name) return r;
    return std::nullopt;
}

std::vector<RuleKind> parse_rule_list(std::string_view csv) {
    if (csv == "all") return {kAllRules.begin(), kAllRules.end()};
    std::vector<RuleKind> rules;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto comma = csv.find(',', start);
        if (comma == std::string_view::npos) comma = csv.size();
        auto name = csv.substr(start, comma - start);
        auto rule = parse_rule(name);
        if (!rule) throw Error("unknown rule '" + std::string(name) + "'");
        if (std::find(rules.begin(), rules.end(), *rule) == rules.end()) rules.push_back(*rule);
        start = comma + 1;
    }
    return rules;
}

std::string_view to_string(Side s) { return s == Side::premise ? "premise" : "hypothesis"; }

// --- VerbLexicon -----------------------------------------------------------

VerbLexicon VerbLexicon::parse(std::string_view text) {
    VerbLexicon lex;
    std::istringstream in{std::string(text)};
    std::vector<std::array<std::string, 4>> rows;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto words = split_words(line);
        if (words.empty() || words[0][0] == '#') continue;
        if (words.size() != 4) throw ParseError("verb lexicon", lineno, "expected 4 forms");
        rows.push_back({words[0], words[1], words[2], words[3]});
    }
    // Base forms first so a word that is both a base and another verb's
    // inflection ("read", "left") resolves to itself.
    for (const auto& r : rows) {
        lex.forms_.emplace(r[0], Entry{r[0], VerbForm::base});
        lex.gerunds_.emplace(r[0], r[2]);
        lex.bases_.push_back(r[0]);
    }
    for (const auto& r : rows) {
        lex.forms_.emplace(r[1], Entry{r[0], VerbForm::third_person});
        lex.forms_.emplace(r[2], Entry{r[0], VerbForm::gerund});
        lex.forms_.emplace(r[3], Entry{r[0], VerbForm::past});
    }
    return lex;
}

const VerbLexicon& VerbLexicon::builtin() {
    static const VerbLexicon lex = parse(resources::kVerbsEnV1);
    return lex;
}

std::optional<VerbLexicon::Entry> VerbLexicon::lookup(std::string_view word) const {
    auto it = forms_.find(ascii_lower(word));
    if (it == forms_.end()) return std::nullopt;
    return it->second;
}

std::string VerbLexicon::lemma(std::string_view word) const {
    if (auto e = lookup(word)) return e->base;
    return ascii_lower(word);
}

std::string VerbLexicon::gerund(std::string_view base) const {
    const auto b = ascii_lower(base);
    if (auto it = gerunds_.find(b); it != gerunds_.end()) return it->second;
    if (b.size() > 2 && b.ends_with("ie")) return b.substr(0, b.size() - 2) + "ying";
    if (b.size() > 2 && b.back() == 'e' && !b.ends_with("ee") && !b.ends_with("ye") && !b.ends_with("oe"))
        return b.substr(0, b.size() - 1) + "ing";
    return b + "ing";
}

bool VerbLexicon::is_auxiliary(std::string_view word) {
    static const std::unordered_set<std::string> aux = {
        "is",  "are",  "was",  "were", "be",    "been",  "being",  "am",    "has",   "have", "had",
        "does", "do",  "did",  "can",  "could", "will",  "would",  "shall", "should", "may", "might",
        "must", "'s",  "'re"};
    return aux.count(ascii_lower(word)) != 0;
}

// --- PrepositionClassMap ---------------------------------------------------

PrepositionClassMap::PrepositionClassMap(std::vector<Class> classes) : classes_(std::move(classes)) {
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        if (classes_[c].members.empty()) throw Error("preposition class '" + classes_[c].name + "' is empty");
        for (auto& m : classes_[c].members) {
            const auto words = split_words(m);
            if (words.empty()) throw Error("empty preposition in class '" + classes_[c].name + "'");
            std::string norm;
            for (const auto& w : words) norm += (norm.empty() ? "" : " ") + w;
            m = norm;
            if (!member_class_.emplace(norm, c).second)
                throw Error("preposition '" + norm + "' belongs to more than one class");
            longest_ = std::max(longest_, words.size());
        }
    }
}

const PrepositionClassMap& PrepositionClassMap::standard() {
    static const PrepositionClassMap map({
        {"in", {"in", "inside", "within"}},
        {"on", {"on", "on top of", "atop"}},
        {"near", {"near", "next to", "beside"}},
        {"above", {"above", "over"}},
        {"below", {"below", "under", "underneath"}},
        {"outside", {"outside", "outside of"}},
    });
    return map;
}

std::optional<std::size_t> PrepositionClassMap::class_of(std::string_view phrase) const {
    std::string norm;
    for (const auto& w : split_words(phrase)) norm += (norm.empty() ? "" : " ") + w;
    auto it = member_class_.find(norm);
    if (it == member_class_.end()) return std::nullopt;
    return it->second;
}

std::optional<PrepositionClassMap::Match> PrepositionClassMap::find_first(std::string_view text) const {
    struct Span {
        std::size_t begin, end;
        std::string lower;
    };
    std::vector<Span> words;
    for (std::size_t i = 0; i < text.size();) {
        if (!word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && word_char(static_cast<unsigned char>(text[j]))) ++j;
        words.push_back({i, j, ascii_lower(text.substr(i, j - i))});
        i = j;
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string phrase;
        std::optional<Match> best;
        for (std::size_t k = 0; k < longest_ && i + k < words.size(); ++k) {
            phrase += (k ? " " : "") + words[i + k].lower;
            if (auto it = member_class_.find(phrase); it != member_class_.end())
                best = Match{it->second, words[i].begin, words[i + k].end, phrase};
        }
        if (best) return best;
    }
    return std::nullopt;
}

// --- AbstractTemplateSet ---------------------------------------------------

AbstractTemplateSet::AbstractTemplateSet(std::vector<AbstractTemplate> templates)
    : templates_(std::move(templates)) {
    if (templates_.empty()) throw Error("abstract template set is empty");
    for (const auto& t : templates_) {
        for (const auto* s : {&t.singular, &t.plural}) {
            const auto at = s->find("{vp}");
            if (at == std::string::npos || s->find("{vp}", at + 1) != std::string::npos)
                throw Error("template '" + *s + "' must contain exactly one {vp} slot");
        }
    }
}

const AbstractTemplateSet& AbstractTemplateSet::standard() {
    static const AbstractTemplateSet set({
        {" but wants to {vp}", " but want to {vp}", false},
        {" but dreams of {vp}", " but dream of {vp}", true},
        {" and hopes to {vp} later", " and hope to {vp} later", false},
        {" but only before {vp}", " but only before {vp}", true},
    });
    return set;
}

}  // namespace inoculate
