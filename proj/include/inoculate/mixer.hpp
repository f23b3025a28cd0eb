#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inoculate/corpus.hpp"

namespace inoculate {

/// One fine-tuning mixture: adversarial contradictions plus SNLI-train
/// entailment/neutral strata (and optionally SNLI contradictions).
struct MixtureSpec {
    std::string name = "mixture";
    std::size_t n_adversarial = 100;
    std::size_t n_per_other_label = 100;
    std::size_t n_snli_contradiction = 0;
    std::string adversarial_source;
    std::string snli_train_source;
    std::uint64_t seed = 0;
    bool shuffle = true;

    std::size_t total() const { return n_adversarial + 2 * n_per_other_label + n_snli_contradiction; }
    bool operator==(const MixtureSpec&) const = default;
};

/// "100 adversarial + 200 SNLI" style description.
std::string describe(const MixtureSpec& spec);
Json to_json(const MixtureSpec& spec);
MixtureSpec mixture_spec_from_json(const Json& obj);

struct TrainRecipe {
    int epochs = 3;
    double learning_rate = 1e-5;
    std::string base_model;

    /// Throws Error unless epochs >= 1 and learning_rate > 0.
    void validate() const;
};

/// Exact strata, sampled with corpus::sample under seeds derived from
/// spec.seed; adversarial first, then entailment, neutral, SNLI
/// contradiction, then a seeded shuffle if requested. Only perturbed
/// contradictions count as adversarial; SNLI strata take original pairs of
/// split "train" and refuse any other split. Throws Error naming a short stratum.
Dataset build_mixture(const MixtureSpec& spec, const Dataset& adversarial, const Dataset& snli_train);

struct AblationConfig {
    std::string name;
    std::optional<MixtureSpec> mixture;  // nullopt: evaluate the base model as is
};

/// The four table rows: baseline, 300 SNLI, 100 adversarial, 100 adversarial + 200 SNLI.
std::vector<AblationConfig> ablation_configs(const std::string& adversarial_source,
                                             const std::string& snli_train_source, std::uint64_t seed = 0);

/// n_adversarial in {0, step, 2 step, ...} up to max (max itself included).
std::vector<MixtureSpec> sweep_specs(std::size_t max, std::size_t step, std::size_t n_per_other_label,
                                     const std::string& adversarial_source = {},
                                     const std::string& snli_train_source = {}, std::uint64_t seed = 0);

}  // namespace inoculate
