#pragma once

// Exact inference over a BayesianNetwork and expected-utility configuration
// recommendation.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/bn.hpp"

namespace ranbn {

// Variable name -> state index. A std::map cannot assign a variable twice.
using Evidence = std::map<std::string, int>;

// Throws UnknownState/Parameter for unknown variables or out-of-range states.
void validate_evidence(const BayesianNetwork& bn, const Evidence& evidence);

struct Posterior {
    std::string variable;
    std::vector<double> probabilities;
};

// Joint state count above which enumerate_posterior refuses to run.
inline constexpr std::size_t kEnumerationLimit = std::size_t{1} << 20;

// Brute force over every full assignment. Refuses networks whose joint state
// space exceeds `limit`.
Posterior enumerate_posterior(const BayesianNetwork& bn, std::string_view query, const Evidence& evidence,
                              std::size_t limit = kEnumerationLimit);

// Variable elimination restricted to the ancestors of query and evidence,
// eliminating hidden variables in greedy min-fill order (lowest index on ties).
// Evidence of probability zero raises ZeroEvidence.
Posterior eliminate(const BayesianNetwork& bn, std::string_view query, const Evidence& evidence);

// Elimination order used by eliminate() for the given hidden variables.
std::vector<std::size_t> min_fill_order(const BayesianNetwork& bn, std::span<const std::size_t> relevant,
                                        std::span<const std::size_t> hidden);

struct KpiUtility {
    std::string kpi;
    double weight = 1.0;
    std::vector<double> utility;  // one value per state
};

struct UtilitySpec {
    std::vector<KpiUtility> kpis;
    // Throws Parameter unless every KPI exists, tables cover all states,
    // weights are >= 0 and at least one is positive.
    void validate(const BayesianNetwork& bn) const;
};

// s/(K-1) for benefit KPIs, -s/(K-1) for cost KPIs, 0 for neutral ones.
std::vector<double> default_utility_table(const VariableSpec& spec);
// Weight-1 default tables for every KPI whose direction is benefit or cost.
UtilitySpec default_utility(const BayesianNetwork& bn);
// Array of {kpi, weight?, direction?, utility?}; missing tables are derived
// from the direction (or the variable's declared direction).
UtilitySpec utility_from_json(const nlohmann::json& j, const BayesianNetwork& bn);

double expected_utility(const Posterior& posterior, std::span<const double> utility);

struct Uncertainty {
    double confidence = 0.0;  // mean max-probability
    double entropy = 0.0;     // mean Shannon entropy / ln(states)
};
Uncertainty confidence_entropy(std::span<const Posterior> posteriors);

struct ConfigurationSpace {
    std::vector<std::string> variables;
    std::vector<std::vector<int>> assignments;  // state index per variable

    // Non-empty, distinct, each assignment covers every variable in range.
    void validate(const BayesianNetwork& bn) const;
};

// Cartesian product of the state sets of `variables`, lexicographic order.
ConfigurationSpace full_grid(const BayesianNetwork& bn, std::span<const std::string> variables);
// Grid over every Config-role variable of the network.
ConfigurationSpace full_grid(const BayesianNetwork& bn);

struct KpiOutcome {
    std::string kpi;
    Posterior posterior;
    double expected_utility = 0.0;
};

struct Candidate {
    std::vector<int> config;
    double score = 0.0;
    std::vector<KpiOutcome> per_kpi;
    Uncertainty uncertainty;
};

struct Recommendation {
    std::vector<std::string> variables;
    Candidate best;
    // Remaining candidates by score descending, then lower entropy, then
    // lexicographic config.
    std::vector<Candidate> runners_up;
};

// Scores every candidate configuration of omega given measurement evidence.
// The maximizer wins; scores within 1e-12 (relative) tie and go to the
// lexicographically smallest config.
Candidate evaluate_candidate(const BayesianNetwork& bn, const ConfigurationSpace& omega, std::size_t index,
                             const Evidence& measurements, const UtilitySpec& util);
Recommendation recommend(const BayesianNetwork& bn, const ConfigurationSpace& omega, const Evidence& measurements,
                         const UtilitySpec& util);

nlohmann::json recommendation_to_json(const BayesianNetwork& bn, const Recommendation& rec);

}  // namespace ranbn
