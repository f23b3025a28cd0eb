#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inoculate/corpus.hpp"
#include "inoculate/embedding.hpp"

namespace inoculate {

// The three subtypes of the shared-words error, each a label-preserving
// rewrite of a contradiction pair.
enum class RuleKind : std::uint8_t { negation_mirror, abstract_detail, preposition_swap };

inline constexpr std::array<RuleKind, 3> kAllRules = {RuleKind::negation_mirror, RuleKind::abstract_detail,
                                                      RuleKind::preposition_swap};

std::string_view to_string(RuleKind r);
std::optional<RuleKind> parse_rule(std::string_view name);
/// Comma-separated rule names; "all" selects every rule. Throws Error.
std::vector<RuleKind> parse_rule_list(std::string_view csv);

enum class VerbForm : std::uint8_t { base, third_person, gerund, past };

/// Caption-verb inflection table (inflected -> base) with auxiliaries. Words
/// outside the table are left to the caller's fallback.
class VerbLexicon {
public:
    struct Entry {
        std::string base;
        VerbForm form = VerbForm::base;
    };

    /// Lines of "base third-person gerund past".
    static VerbLexicon parse(std::string_view text);
    static const VerbLexicon& builtin();

    std::optional<Entry> lookup(std::string_view word) const;
    /// Base form for table words, the word itself otherwise.
    std::string lemma(std::string_view word) const;
    /// Gerund from the table, else by spelling rule.
    std::string gerund(std::string_view base) const;
    std::size_t size() const { return bases_.size(); }

    static bool is_auxiliary(std::string_view word);

private:
    std::unordered_map<std::string, Entry> forms_;
    std::unordered_map<std::string, std::string> gerunds_;
    std::vector<std::string> bases_;
};

/// Synonym classes of spatial prepositions. A member may be a multiword
/// phrase; lookups use longest match over words.
class PrepositionClassMap {
public:
    struct Class {
        std::string name;
        std::vector<std::string> members;
    };

    struct Match {
        std::size_t class_index = 0;
        std::size_t begin = 0;  // byte span in the searched text
        std::size_t end = 0;
        std::string phrase;  // lowercased member that matched
    };

    /// Throws Error when classes overlap or a class is empty.
    explicit PrepositionClassMap(std::vector<Class> classes);
    static const PrepositionClassMap& standard();

    const std::vector<Class>& classes() const { return classes_; }
    std::optional<std::size_t> class_of(std::string_view phrase) const;
    /// First mapped preposition in `text`, longest match at each position.
    std::optional<Match> find_first(std::string_view text) const;

private:
    std::vector<Class> classes_;
    std::unordered_map<std::string, std::size_t> member_class_;
    std::size_t longest_ = 1;  // in words
};

/// Desiderative/temporal clause templates with a "{vp}" slot.
struct AbstractTemplate {
    std::string singular;
    std::string plural;
    bool gerund = false;  // slot takes the -ing form of the verb phrase
};

class AbstractTemplateSet {
public:
    explicit AbstractTemplateSet(std::vector<AbstractTemplate> templates);
    static const AbstractTemplateSet& standard();

    const std::vector<AbstractTemplate>& templates() const { return templates_; }
    std::size_t size() const { return templates_.size(); }

private:
    std::vector<AbstractTemplate> templates_;
};

enum class Side : std::uint8_t { premise, hypothesis };
std::string_view to_string(Side s);

/// Byte span [begin, end) of the source text replaced by `inserted`.
struct Edit {
    Side side = Side::premise;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string removed;
    std::string inserted;

    bool operator==(const Edit&) const = default;
};

struct PerturbationOutcome {
    SentencePair result;
    std::vector<Edit> edits;
    RuleKind rule = RuleKind::negation_mirror;
    std::uint64_t seed = 0;
};

struct PerturbResources {
    const VerbLexicon& verbs = VerbLexicon::builtin();
    const PrepositionClassMap& prepositions = PrepositionClassMap::standard();
    const AbstractTemplateSet& templates = AbstractTemplateSet::standard();
    const StopWordList& stops = StopWordList::builtin();
};

/// Rules whose preconditions hold, in kAllRules order. Throws Error unless
/// pair.gold is contradiction.
std::vector<RuleKind> applicable_rules(const SentencePair& pair, const PerturbResources& res = {});

/// Appends " and doesn't <verb>" (or "don't" for a plural subject) to the
/// premise, mirroring the hypothesis' first content verb. Throws NotApplicable.
PerturbationOutcome apply_negation_mirror(const SentencePair& pair,
                                          const VerbLexicon& verbs = VerbLexicon::builtin());

/// Appends a seeded template clause built from the hypothesis' verb phrase.
/// Throws NotApplicable.
PerturbationOutcome apply_abstract_detail(const SentencePair& pair,
                                          const AbstractTemplateSet& templates, std::uint64_t seed,
                                          const VerbLexicon& verbs = VerbLexicon::builtin(),
                                          const StopWordList& stops = StopWordList::builtin());

/// Replaces the premise's first mapped preposition with a seeded member of a
/// class different from both sides' classes. Throws NotApplicable.
PerturbationOutcome apply_preposition_swap(const SentencePair& pair, const PrepositionClassMap& prep_map,
                                           std::uint64_t seed);

PerturbationOutcome apply_rule(RuleKind rule, const SentencePair& pair, std::uint64_t seed,
                               const PerturbResources& res = {});

/// Replays edits of one side onto the source text.
std::string replay_edits(std::string_view source, std::span<const Edit> edits, Side side);

struct ChallengeSet {
    Dataset dataset;
    std::vector<PerturbationOutcome> outcomes;  // parallel to dataset.pairs
};

/// n perturbed contradictions. Source contradictions are visited in the order
/// of a seeded full sample; each usable pair gets the next rule in rotation
/// that applies to it. Throws Error when fewer than n pairs are usable.
ChallengeSet build_challenge_set(const Dataset& source, std::size_t n, std::span<const RuleKind> rules,
                                 std::uint64_t seed, const PerturbResources& res = {});

/// Sidecar line: {"id", "rule", "edits": [...], "seed"}.
Json edit_log_entry(const PerturbationOutcome& outcome);
void write_edit_log(std::span<const PerturbationOutcome> outcomes, std::ostream& out);

}  // namespace inoculate
