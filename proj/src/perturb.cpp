#include "inoculate/perturb.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <unordered_set>

#include "inoculate/error.hpp"
#include "inoculate/prng.hpp"

namespace inoculate {

namespace {

struct Word {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string lower;
};

bool word_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Words keep internal apostrophes ("doesn't" is one word).
std::vector<Word> scan_words(std::string_view text) {
    std::vector<Word> words;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size()) {
            const auto c = static_cast<unsigned char>(text[j]);
            if (word_char(c)) {
                ++j;
            } else if (c == '\'' && j + 1 < text.size() && word_char(static_cast<unsigned char>(text[j + 1]))) {
                ++j;
            } else {
                break;
            }
        }
        std::string lower(text.substr(i, j - i));
        for (auto& c : lower)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        words.push_back({i, j, std::move(lower)});
        i = j;
    }
    return words;
}

const std::unordered_set<std::string>& determiners() {
    static const std::unordered_set<std::string> d = {
        "a",     "an",   "the",   "this",  "that", "these", "those", "his",   "her",  "their",
        "its",   "our",  "my",    "your",  "some", "several", "many", "each", "every", "another",
        "one",   "two",  "three", "four",  "five", "six",   "seven", "eight", "nine", "ten",
        "no",    "any",  "both",  "few",   "other"};
    return d;
}

const std::unordered_set<std::string>& plural_quantifiers() {
    static const std::unordered_set<std::string> q = {
        "two",  "three",  "four",  "five",     "six",    "seven", "eight", "nine", "ten",  "several",
        "many", "some",   "both",  "few",      "people", "men",   "women", "children", "they", "we",
        "these", "those"};
    return q;
}

bool negator(const std::string& w) {
    return w == "not" || w == "never" || w == "no" || w == "nobody" || w == "nothing" || w.ends_with("n't");
}

// A word right after a determiner (or sentence-initial) sits where a noun or
// adjective would, so it is not taken as a verb.
bool noun_position(const std::vector<Word>& words, std::size_t i) {
    return i == 0 || determiners().count(words[i - 1].lower) != 0;
}

bool plural_like(const std::string& w) {
    if (plural_quantifiers().count(w)) return true;
    return w.size() > 3 && w.back() == 's' && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is");
}

bool modal_or_to(const std::string& w) {
    return w == "to" || w == "can" || w == "will" || w == "would" || w == "could" || w == "should" ||
           w == "may" || w == "might" || w == "must" || w == "do" || w == "does" || w == "did";
}

struct VerbHit {
    std::size_t index = 0;  // into the word list
    std::string lemma;
};

std::string strip_s(const std::string& w) {
    if (w.ends_with("ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
    for (const char* suffix : {"ches", "shes", "sses", "xes", "zes"})
        if (w.ends_with(suffix)) return w.substr(0, w.size() - 2);
    return w.substr(0, w.size() - 1);
}

// First content verb, in order of confidence: finite or progressive table
// forms, then other -ing forms, then bare forms after a plural subject or
// modal, then the strip-trailing-s fallback for words outside the table.
std::optional<VerbHit> find_content_verb(const std::vector<Word>& words, const VerbLexicon& verbs,
                                         const StopWordList& stops) {
    for (const auto& w : words)
        if (negator(w.lower)) return std::nullopt;

    auto scan = [&](auto accept) -> std::optional<VerbHit> {
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (VerbLexicon::is_auxiliary(words[i].lower) || noun_position(words, i)) continue;
            auto entry = verbs.lookup(words[i].lower);
            if (entry && accept(i, *entry)) return VerbHit{i, entry->base};
        }
        return std::nullopt;
    };
    auto after_aux = [&](std::size_t i) { return i > 0 && VerbLexicon::is_auxiliary(words[i - 1].lower); };

    if (auto hit = scan([&](std::size_t i, const VerbLexicon::Entry& e) {
            return e.form == VerbForm::third_person || e.form == VerbForm::past ||
                   (e.form == VerbForm::gerund && after_aux(i));
        }))
        return hit;
    if (auto hit = scan([](std::size_t, const VerbLexicon::Entry& e) { return e.form == VerbForm::gerund; }))
        return hit;
    if (auto hit = scan([&](std::size_t i, const VerbLexicon::Entry& e) {
            return e.form == VerbForm::base && (plural_like(words[i - 1].lower) || modal_or_to(words[i - 1].lower));
        }))
        return hit;

    for (std::size_t i = 1; i < words.size(); ++i) {
        const auto& w = words[i].lower;
        if (noun_position(words, i) || stops.contains(words[i - 1].lower) || stops.contains(w)) continue;
        if (VerbLexicon::is_auxiliary(w) || verbs.lookup(w)) continue;
        if (w.size() < 4 || w.back() != 's' || w.ends_with("ss") || w.ends_with("us") || w.ends_with("is"))
            continue;
        if (w.find('\'') != std::string::npos) continue;
        return VerbHit{i, strip_s(w)};
    }
    return std::nullopt;
}

bool plural_subject(const std::vector<Word>& words, const VerbLexicon& verbs) {
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto& w = words[i].lower;
        if (w == "is" || w == "was" || w == "has" || w == "does") return false;
        if (w == "are" || w == "were" || w == "have" || w == "do") return true;
        if (noun_position(words, i)) continue;
        if (auto e = verbs.lookup(w)) {
            if (e->form == VerbForm::third_person) return false;
            if (e->form == VerbForm::base && plural_like(words[i - 1].lower)) return true;
        }
    }
    for (std::size_t i = 0; i < words.size() && i < 4; ++i)
        if (plural_quantifiers().count(words[i].lower)) return true;
    return false;
}

struct Tail {
    std::size_t body_end = 0;  // premise text before trailing punctuation/space
    std::string terminal;      // punctuation to re-append
};

Tail split_tail(std::string_view text) {
    std::size_t end = text.size();
    while (end > 0 && (text[end - 1] == ' ' || text[end - 1] == '\t' || text[end - 1] == '\n' ||
                       text[end - 1] == '\r'))
        --end;
    std::size_t body = end;
    while (body > 0 && (text[body - 1] == '.' || text[body - 1] == '!' || text[body - 1] == '?')) --body;
    std::size_t trimmed = body;
    while (trimmed > 0 && text[trimmed - 1] == ' ') --trimmed;
    Tail t;
    t.body_end = trimmed;
    t.terminal = body < end ? std::string(text.substr(body, end - body)) : std::string(".");
    return t;
}

// Appends `clause` to the premise ahead of its terminal punctuation.
PerturbationOutcome append_to_premise(const SentencePair& pair, const std::string& clause, RuleKind rule,
                                      std::uint64_t seed) {
    const auto tail = split_tail(pair.premise);
    Edit edit;
    edit.side = Side::premise;
    edit.begin = tail.body_end;
    edit.end = pair.premise.size();
    edit.removed = pair.premise.substr(tail.body_end);
    edit.inserted = clause + tail.terminal;

    PerturbationOutcome out;
    out.rule = rule;
    out.seed = seed;
    out.result = pair;
    out.result.id = pair.id + "~" + std::string(to_string(rule));
    out.result.premise = pair.premise.substr(0, edit.begin) + edit.inserted;
    out.result.provenance = PerturbedProvenance{std::string(to_string(rule)), pair.id, false};
    out.edits.push_back(std::move(edit));
    return out;
}

void require_contradiction(const SentencePair& pair) {
    if (pair.gold != Label::contradiction)
        throw Error("perturbation rules apply to contradiction pairs only ('" + pair.id + "' is " +
                    std::string(to_string(pair.gold)) + ")");
}

std::string trim_terminal(std::string_view s) {
    std::size_t end = s.size();
    while (end > 0 && (s[end - 1] == ' ' || s[end - 1] == '.' || s[end - 1] == '!' || s[end - 1] == '?' ||
                       s[end - 1] == '\n' || s[end - 1] == '\r' || s[end - 1] == '\t'))
        --end;
    std::size_t begin = 0;
    while (begin < end && s[begin] == ' ') ++begin;
    return std::string(s.substr(begin, end - begin));
}

struct VerbPhrase {
    std::string lemma;
    std::string rest;  // text after the verb, original case, no terminal punctuation
};

std::optional<VerbPhrase> extract_verb_phrase(std::string_view hypothesis, const VerbLexicon& verbs,
                                              const StopWordList& stops) {
    const auto words = scan_words(hypothesis);
    auto hit = find_content_verb(words, verbs, stops);
    if (!hit) return std::nullopt;
    return VerbPhrase{hit->lemma, trim_terminal(hypothesis.substr(words[hit->index].end))};
}

std::set<std::string> content_lemmas(std::string_view text, const VerbLexicon& verbs, const StopWordList& stops) {
    std::set<std::string> out;
    for (const auto& w : scan_words(text)) {
        if (w.lower.find('\'') != std::string::npos) continue;
        if (stops.contains(w.lower)) continue;
        out.insert(verbs.lemma(w.lower));
    }
    return out;
}

struct AbstractPlan {
    VerbPhrase vp;
    bool plural = false;
};

std::optional<AbstractPlan> plan_abstract_detail(const SentencePair& pair, const VerbLexicon& verbs,
                                                 const StopWordList& stops) {
    auto vp = extract_verb_phrase(pair.hypothesis, verbs, stops);
    if (!vp) return std::nullopt;
    // The inserted phrase must carry at least two content words of the
    // hypothesis, or it does not raise lexical overlap.
    auto inserted = content_lemmas(vp->lemma + " " + vp->rest, verbs, stops);
    const auto hyp = content_lemmas(pair.hypothesis, verbs, stops);
    std::size_t shared = 0;
    for (const auto& l : inserted) shared += hyp.count(l);
    if (shared < 2) return std::nullopt;
    // Nothing to gain when the premise already has every content token of
    // the hypothesis: the pair is as similar as appending can make it.
    const auto prem_tokens = tokenize(pair.premise);
    bool gap = false;
    for (const auto& t : tokenize(pair.hypothesis))
        if (!stops.contains(t) && std::find(prem_tokens.begin(), prem_tokens.end(), t) == prem_tokens.end()) gap = true;
    if (!gap) return std::nullopt;
    return AbstractPlan{std::move(*vp), plural_subject(scan_words(pair.premise), verbs)};
}

struct NegationPlan {
    std::string lemma;
    bool plural = false;
};

std::optional<NegationPlan> plan_negation_mirror(const SentencePair& pair, const VerbLexicon& verbs) {
    const auto hyp_words = scan_words(pair.hypothesis);
    auto hit = find_content_verb(hyp_words, verbs, StopWordList::builtin());
    if (!hit) return std::nullopt;
    const auto prem_words = scan_words(pair.premise);
    for (const auto& w : prem_words)
        if (verbs.lemma(w.lower) == hit->lemma) return std::nullopt;
    return NegationPlan{hit->lemma, plural_subject(prem_words, verbs)};
}

struct SwapPlan {
    PrepositionClassMap::Match premise;
    std::vector<std::size_t> eligible;  // class indices
};

std::optional<SwapPlan> plan_preposition_swap(const SentencePair& pair, const PrepositionClassMap& map) {
    auto p = map.find_first(pair.premise);
    if (!p) return std::nullopt;
    auto h = map.find_first(pair.hypothesis);
    if (!h) return std::nullopt;
    SwapPlan plan{*p, {}};
    for (std::size_t c = 0; c < map.classes().size(); ++c)
        if (c != p->class_index && c != h->class_index) plan.eligible.push_back(c);
    if (plan.eligible.empty()) return std::nullopt;
    return plan;
}

std::string fill(const std::string& tmpl, const std::string& vp) {
    const auto at = tmpl.find("{vp}");
    return tmpl.substr(0, at) + vp + tmpl.substr(at + 4);
}

}  // namespace

std::vector<RuleKind> applicable_rules(const SentencePair& pair, const PerturbResources& res) {
    require_contradiction(pair);
    std::vector<RuleKind> rules;
    if (plan_negation_mirror(pair, res.verbs)) rules.push_back(RuleKind::negation_mirror);
    if (plan_abstract_detail(pair, res.verbs, res.stops)) rules.push_back(RuleKind::abstract_detail);
    if (plan_preposition_swap(pair, res.prepositions)) rules.push_back(RuleKind::preposition_swap);
    return rules;
}

PerturbationOutcome apply_negation_mirror(const SentencePair& pair, const VerbLexicon& verbs) {
    require_contradiction(pair);
    auto plan = plan_negation_mirror(pair, verbs);
    if (!plan)
        throw NotApplicable("negation_mirror: no hypothesis verb absent from the premise in '" + pair.id + "'");
    const std::string clause = std::string(plan->plural ? " and don't " : " and doesn't ") + plan->lemma;
    return append_to_premise(pair, clause, RuleKind::negation_mirror, 0);
}

PerturbationOutcome apply_abstract_detail(const SentencePair& pair, const AbstractTemplateSet& templates,
                                          std::uint64_t seed, const VerbLexicon& verbs,
                                          const StopWordList& stops) {
    require_contradiction(pair);
    auto plan = plan_abstract_detail(pair, verbs, stops);
    if (!plan) throw NotApplicable("abstract_detail: no usable verb phrase in '" + pair.id + "'");
    SplitMix64 rng(seed);
    const auto& tmpl = templates.templates()[static_cast<std::size_t>(rng.below(templates.size()))];
    const std::string head = tmpl.gerund ? verbs.gerund(plan->vp.lemma) : plan->vp.lemma;
    const std::string vp = plan->vp.rest.empty() ? head : head + " " + plan->vp.rest;
    return append_to_premise(pair, fill(plan->plural ? tmpl.plural : tmpl.singular, vp),
                             RuleKind::abstract_detail, seed);
}

PerturbationOutcome apply_preposition_swap(const SentencePair& pair, const PrepositionClassMap& prep_map,
                                           std::uint64_t seed) {
    require_contradiction(pair);
    auto plan = plan_preposition_swap(pair, prep_map);
    if (!plan) {
        const char* why = !prep_map.find_first(pair.premise)      ? "no mapped preposition in the premise"
                          : !prep_map.find_first(pair.hypothesis) ? "no mapped preposition in the hypothesis"
                                                                  : "no replacement class left";
        throw NotApplicable(std::string("preposition_swap: ") + why + " of '" + pair.id + "'");
    }
    SplitMix64 rng(seed);
    const auto& cls = prep_map.classes()[plan->eligible[static_cast<std::size_t>(rng.below(plan->eligible.size()))]];
    std::string replacement = cls.members[static_cast<std::size_t>(rng.below(cls.members.size()))];
    const char first = pair.premise[plan->premise.begin];
    if (first >= 'A' && first <= 'Z' && replacement[0] >= 'a' && replacement[0] <= 'z')
        replacement[0] = static_cast<char>(replacement[0] - 'a' + 'A');

    Edit edit{Side::premise, plan->premise.begin, plan->premise.end,
              pair.premise.substr(plan->premise.begin, plan->premise.end - plan->premise.begin), replacement};
    PerturbationOutcome out;
    out.rule = RuleKind::preposition_swap;
    out.seed = seed;
    out.result = pair;
    out.result.id = pair.id + "~preposition_swap";
    out.result.premise = pair.premise.substr(0, edit.begin) + replacement + pair.premise.substr(edit.end);
    out.result.provenance = PerturbedProvenance{"preposition_swap", pair.id, false};
    out.edits.push_back(std::move(edit));
    return out;
}

PerturbationOutcome apply_rule(RuleKind rule, const SentencePair& pair, std::uint64_t seed,
                               const PerturbResources& res) {
    switch (rule) {
        case RuleKind::negation_mirror: {
            auto out = apply_negation_mirror(pair, res.verbs);
            out.seed = seed;  // deterministic rule; seed kept for the edit log
            return out;
        }
        case RuleKind::abstract_detail: return apply_abstract_detail(pair, res.templates, seed, res.verbs, res.stops);
        case RuleKind::preposition_swap: return apply_preposition_swap(pair, res.prepositions, seed);
    }
    throw Error("unknown rule");
}

std::string replay_edits(std::string_view source, std::span<const Edit> edits, Side side) {
    std::vector<const Edit*> mine;
    for (const auto& e : edits)
        if (e.side == side) mine.push_back(&e);
    std::sort(mine.begin(), mine.end(), [](const Edit* a, const Edit* b) { return a->begin < b->begin; });
    std::string out;
    std::size_t cursor = 0;
    for (const auto* e : mine) {
        if (e->begin < cursor || e->end > source.size() || e->begin > e->end)
            throw Error("edit span out of order or out of range");
        out.append(source.substr(cursor, e->begin - cursor));
        out.append(e->inserted);
        cursor = e->end;
    }
    out.append(source.substr(cursor));
    return out;
}

ChallengeSet build_challenge_set(const Dataset& source, std::size_t n, std::span<const RuleKind> rules,
                                 std::uint64_t seed, const PerturbResources& res) {
    ChallengeSet out;
    out.dataset.name = "challenge";
    if (n == 0) return out;
    if (rules.empty()) throw Error("build_challenge_set: no rules selected");

    std::vector<RuleKind> rotation;
    for (auto r : kAllRules)
        if (std::find(rules.begin(), rules.end(), r) != rules.end()) rotation.push_back(r);

    const auto contradictions = filter_by_label(source, Label::contradiction);
    const auto visit = sample(contradictions, contradictions.size(), seed);
    std::size_t turn = 0;
    for (const auto& pair : visit.pairs) {
        if (out.dataset.size() == n) break;
        const auto usable = applicable_rules(pair, res);
        std::optional<RuleKind> chosen;
        for (std::size_t k = 0; k < rotation.size() && !chosen; ++k) {
            const auto r = rotation[(turn + k) % rotation.size()];
            if (std::find(usable.begin(), usable.end(), r) != usable.end()) chosen = r;
        }
        if (!chosen) continue;
        auto outcome = apply_rule(*chosen, pair, derive_seed(seed, turn), res);
        std::get<PerturbedProvenance>(outcome.result.provenance).machine_generated = true;
        out.dataset.pairs.push_back(outcome.result);
        out.outcomes.push_back(std::move(outcome));
        ++turn;
    }
    if (out.dataset.size() < n)
        throw Error("build_challenge_set: only " + std::to_string(out.dataset.size()) +
                    " rule-applicable contradiction pairs found, " + std::to_string(n) + " requested");
    return out;
}

Json edit_log_entry(const PerturbationOutcome& outcome) {
    Json edits = Json::array();
    for (const auto& e : outcome.edits) {
        Json j;
        j["side"] = std::string(to_string(e.side));
        j["begin"] = e.begin;
        j["end"] = e.end;
        j["removed"] = e.removed;
        j["inserted"] = e.inserted;
        edits.push_back(std::move(j));
    }
    Json entry;
    entry["id"] = outcome.result.id;
    entry["rule"] = std::string(to_string(outcome.rule));
    entry["edits"] = std::move(edits);
    entry["seed"] = outcome.seed;
    return entry;
}

void write_edit_log(std::span<const PerturbationOutcome> outcomes, std::ostream& out) {
    for (const auto& o : outcomes) out << edit_log_entry(o).dump() << '\n';
}

}  // namespace inoculate
