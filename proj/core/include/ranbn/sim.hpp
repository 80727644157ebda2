#pragma once

// Synthetic ground-truth environment: ancestral sampling from a known network,
// deployment contexts as CPD overrides, baseline recommenders and the
// closed-loop runner.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/adapt.hpp"
#include "ranbn/bn.hpp"
#include "ranbn/constraints.hpp"
#include "ranbn/inference.hpp"
#include "ranbn/scoring.hpp"
#include "ranbn/search.hpp"

namespace ranbn {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct ContextProfile {
    std::string name;
    std::string description;
    std::vector<Cpd> overrides;  // same parents and shape as the world's CPD
};

struct GroundTruthSpec {
    BayesianNetwork world;
    std::vector<ContextProfile> contexts;

    // Throws Schema if an override names an unknown node or changes its shape.
    void validate() const;
    const ContextProfile& context(std::string_view name) const;
    // The world with the named context applied; "" = the base world.
    BayesianNetwork in_context(std::string_view name) const;
};

BayesianNetwork apply_context(const BayesianNetwork& world, const ContextProfile& context);

// Ancestral sampling. Pinned variables must be Config-role nodes; their
// columns are constant. Deterministic under seed.
DiscreteDataset forward_sample(const BayesianNetwork& world, const Evidence& pinned, std::size_t n, std::uint64_t seed);
// Each row pins a configuration drawn uniformly from omega.
DiscreteDataset forward_sample_explore(const BayesianNetwork& world, const ConfigurationSpace& omega, std::size_t n,
                                       std::uint64_t seed);

// Threshold rule: when `measurement` compares true against `state`, move
// `config` by `step` states (clamped to its range).
struct ThresholdRule {
    enum class Op { Le, Ge, Eq };
    std::string measurement;
    Op op = Op::Eq;
    int state = 0;
    std::string config;
    int step = 0;
};

struct RuleSet {
    std::vector<std::string> config_variables;
    std::vector<int> cardinalities;
    std::vector<int> default_config;  // returned when no rule fires
    std::vector<ThresholdRule> rules;  // first match wins

    void validate() const;
};

RuleSet rules_from_json(const nlohmann::json& j, const BayesianNetwork& bn);
nlohmann::json rules_to_json(const RuleSet& rules, const BayesianNetwork& bn);

// Applies the first matching rule to `current`; no match returns the default.
std::vector<int> rule_based_recommend(const Evidence& measurements, const RuleSet& rules,
                                      const std::vector<int>& current);

// Configuration whose rows have the highest mean target value. `target_values`
// maps target states to numbers (defaults to the state index). Ties go to the
// lexicographically smaller configuration.
std::vector<int> greedy_recommend(const DiscreteDataset& history, const std::vector<std::string>& config_variables,
                                  const std::string& target, const std::vector<double>& target_values = {});

// Weighted expected utility of every omega entry under the world, no evidence.
std::vector<double> true_utilities(const BayesianNetwork& world, const ConfigurationSpace& omega,
                                   const UtilitySpec& util);
double true_utility(const BayesianNetwork& world, const ConfigurationSpace& omega, const std::vector<int>& config,
                    const UtilitySpec& util);
// Index into omega of the true optimum (lexicographic on ties).
std::size_t true_optimum(const BayesianNetwork& world, const ConfigurationSpace& omega, const UtilitySpec& util);

struct ContextSwitch {
    std::size_t cycle = 0;
    std::string context;
};

struct LoopSettings {
    std::size_t warmup_samples = 5000;
    std::size_t batch_size = 2000;
    double exploration = 0.2;  // share of each batch drawn under random omega entries
    UpdateParams update;
    // Relearn uses at most this many most recent rows; 0 = warmup_samples.
    std::size_t relearn_window = 0;
    ScoreParams score;
    SearchConfig search;
    ConstraintSet delta;
    UtilitySpec utility;  // empty = default_utility(world)
    ConfigurationSpace omega;  // empty = full grid over the world's config nodes
    double model_alpha = 1.0;

    void validate() const;
};

struct LoopRecord {
    std::size_t cycle = 0;
    std::string context;
    std::vector<int> applied_config;
    std::size_t batch_rows = 0;
    std::vector<std::pair<std::string, double>> kpi_means;  // mean state index under the applied config
    std::size_t model_version = 0;
    bool relearned = false;
    std::vector<int> recommendation;
    double score = 0.0;
    Uncertainty uncertainty;
    double applied_true_utility = 0.0;
    std::vector<int> true_optimal_config;
};

struct LoopLog {
    std::vector<std::string> config_variables;
    std::vector<int> warmup_recommendation;
    std::vector<LoopRecord> records;
};

// Warm-up: learn from warmup_samples explored rows under the cycle-0 context
// and recommend. Each cycle then samples a batch under the applied config and
// active context, adapts the model (full relearn when triggered), recommends
// and applies the recommendation in the next cycle.
LoopLog run_closed_loop(const GroundTruthSpec& world, const std::vector<ContextSwitch>& schedule,
                        const LoopSettings& settings, std::size_t cycles, std::uint64_t seed);

nlohmann::json loop_record_to_json(const LoopLog& log, const LoopRecord& record, const BayesianNetwork& world);
std::string loop_log_to_jsonl(const LoopLog& log, const BayesianNetwork& world);

// World files: the model schema plus a "contexts" array.
nlohmann::json world_to_json(const GroundTruthSpec& world);
GroundTruthSpec world_from_json(const nlohmann::json& j);

// Authored worlds.
GroundTruthSpec default_world();  // 10 nodes, 14 edges, contexts cell_center / cell_edge
RuleSet default_rules(const BayesianNetwork& world);
ConstraintSet default_partial_constraints();  // 6 mandatory + 4 prohibited, all consistent with default_world
GroundTruthSpec variance_trap_world();
RuleSet variance_trap_rules(const BayesianNetwork& world);

struct RandomWorldParams {
    std::size_t nodes = 8;
    std::size_t config_nodes = 2;
    std::size_t max_parents = 3;
    int min_states = 2;
    int max_states = 4;
    double edge_probability = 0.35;
    // Caps the product of config cardinalities (omega size); 0 = no cap.
    std::size_t max_omega = 20;
};

// Random network: nodes in topological order, config nodes first and roots,
// Dirichlet(1) CPD rows. Node 0.. config, last node(s) KPIs.
GroundTruthSpec random_world(const RandomWorldParams& params, std::uint64_t seed);

// Values written to CSV for a state: the numeric label when every label of the
// variable parses as a number, the state index otherwise.
std::vector<double> state_values(const VariableSpec& spec);
// CSV rendering of sampled data plus a matching all-discrete schema.
std::string dataset_to_csv(const DiscreteDataset& data);
std::vector<VariableSpec> csv_schema(const DiscreteDataset& data);

}  // namespace ranbn
