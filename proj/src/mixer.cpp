#include "inoculate/mixer.hpp"

#include <unordered_set>

#include "inoculate/error.hpp"
#include "inoculate/prng.hpp"

namespace inoculate {

namespace {

enum Salt : std::uint64_t { kAdversarial = 1, kEntailment, kNeutral, kContradiction, kShuffle };

Dataset stratum(const Dataset& source, Label label, bool perturbed) {
    Dataset out{source.name, {}};
    for (const auto& p : source.pairs)
        if (p.gold == label && p.is_perturbed() == perturbed) out.pairs.push_back(p);
    return out;
}

void take(Dataset& into, const Dataset& from, std::size_t n, std::uint64_t seed, const char* stratum_name) {
    if (from.size() < n)
        throw Error(std::string("mixture stratum '") + stratum_name + "' needs " + std::to_string(n) +
                    " pairs but '" + from.name + "' has " + std::to_string(from.size()));
    auto picked = sample(from, n, seed);
    for (auto& p : picked.pairs) into.pairs.push_back(std::move(p));
}

}  // namespace

std::string describe(const MixtureSpec& spec) {
    const std::size_t snli = 2 * spec.n_per_other_label + spec.n_snli_contradiction;
    if (spec.n_adversarial == 0 && snli == 0) return "empty";
    if (spec.n_adversarial == 0) return std::to_string(snli) + " SNLI";
    if (snli == 0) return std::to_string(spec.n_adversarial) + " adversarial";
    return std::to_string(spec.n_adversarial) + " adversarial + " + std::to_string(snli) + " SNLI";
}

Json to_json(const MixtureSpec& spec) {
    Json j;
    j["name"] = spec.name;
    j["n_adversarial"] = spec.n_adversarial;
    j["n_per_other_label"] = spec.n_per_other_label;
    j["n_snli_contradiction"] = spec.n_snli_contradiction;
    j["adversarial_source"] = spec.adversarial_source;
    j["snli_train_source"] = spec.snli_train_source;
    j["seed"] = spec.seed;
    j["shuffle"] = spec.shuffle;
    return j;
}

MixtureSpec mixture_spec_from_json(const Json& obj) {
    if (!obj.is_object()) throw Error("mixture spec must be a JSON object");
    MixtureSpec s;
    s.name = obj.value("name", s.name);
    s.n_adversarial = obj.value("n_adversarial", s.n_adversarial);
    s.n_per_other_label = obj.value("n_per_other_label", s.n_per_other_label);
    s.n_snli_contradiction = obj.value("n_snli_contradiction", s.n_snli_contradiction);
    s.adversarial_source = obj.value("adversarial_source", s.adversarial_source);
    s.snli_train_source = obj.value("snli_train_source", s.snli_train_source);
    s.seed = obj.value("seed", s.seed);
    s.shuffle = obj.value("shuffle", s.shuffle);
    return s;
}

void TrainRecipe::validate() const {
    if (epochs < 1) throw Error("train recipe: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw Error("train recipe: learning rate must be positive");
}

Dataset build_mixture(const MixtureSpec& spec, const Dataset& adversarial, const Dataset& snli_train) {
    if (!spec.adversarial_source.empty() && spec.adversarial_source == spec.snli_train_source)
        throw Error("mixture sources must be distinct");
    const bool needs_snli = spec.n_per_other_label > 0 || spec.n_snli_contradiction > 0;
    if (needs_snli) {
        for (const auto& p : snli_train.pairs) {
            const auto* orig = std::get_if<OriginalProvenance>(&p.provenance);
            if (orig && orig->split != "train")
                throw Error("SNLI source '" + snli_train.name + "' contains split '" + orig->split +
                            "' (pair '" + p.id + "'); mixtures sample the train split only");
        }
    }

    Dataset mix{spec.name, {}};
    mix.pairs.reserve(spec.total());
    take(mix, stratum(adversarial, Label::contradiction, true), spec.n_adversarial,
         derive_seed(spec.seed, kAdversarial), "adversarial contradiction");
    if (needs_snli) {
        take(mix, stratum(snli_train, Label::entailment, false), spec.n_per_other_label,
             derive_seed(spec.seed, kEntailment), "SNLI entailment");
        take(mix, stratum(snli_train, Label::neutral, false), spec.n_per_other_label,
             derive_seed(spec.seed, kNeutral), "SNLI neutral");
        take(mix, stratum(snli_train, Label::contradiction, false), spec.n_snli_contradiction,
             derive_seed(spec.seed, kContradiction), "SNLI contradiction");
    }

    std::unordered_set<std::string> ids;
    for (const auto& p : mix.pairs)
        if (!ids.insert(p.id).second) throw Error("mixture would contain duplicate id '" + p.id + "'");

    if (spec.shuffle) mix = sample(mix, mix.size(), derive_seed(spec.seed, kShuffle));
    mix.name = spec.name;
    return mix;
}

std::vector<AblationConfig> ablation_configs(const std::string& adversarial_source,
                                             const std::string& snli_train_source, std::uint64_t seed) {
    auto spec = [&](const char* name, std::size_t adv, std::size_t per_other, std::size_t snli_contra) {
        MixtureSpec s;
        s.name = name;
        s.n_adversarial = adv;
        s.n_per_other_label = per_other;
        s.n_snli_contradiction = snli_contra;
        s.adversarial_source = adversarial_source;
        s.snli_train_source = snli_train_source;
        s.seed = seed;
        return s;
    };
    return {
        {"Baseline", std::nullopt},
        {"300 SNLI", spec("300 SNLI", 0, 100, 100)},
        {"100 adversarial", spec("100 adversarial", 100, 0, 0)},
        {"100 adversarial + 200 SNLI", spec("100 adversarial + 200 SNLI", 100, 100, 0)},
    };
}

std::vector<MixtureSpec> sweep_specs(std::size_t max, std::size_t step, std::size_t n_per_other_label,
                                     const std::string& adversarial_source, const std::string& snli_train_source,
                                     std::uint64_t seed) {
    if (step == 0) throw Error("sweep step must be >= 1");
    std::vector<MixtureSpec> specs;
    auto add = [&](std::size_t n) {
        MixtureSpec s;
        s.name = "sweep-" + std::to_string(n);
        s.n_adversarial = n;
        s.n_per_other_label = n_per_other_label;
        s.adversarial_source = adversarial_source;
        s.snli_train_source = snli_train_source;
        s.seed = seed;
        specs.push_back(std::move(s));
    };
    for (std::size_t n = 0; n <= max; n += step) add(n);
    if (max % step != 0) add(max);
    return specs;
}

}  // namespace inoculate
