#pragma once

// Model adaptation: convex blending of CPDs toward estimates from a new batch,
// and full structure relearning on accumulated data.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/bn.hpp"
#include "ranbn/constraints.hpp"
#include "ranbn/scoring.hpp"
#include "ranbn/search.hpp"

namespace ranbn {

struct UpdateParams {
    double learning_rate = 0.2;  // gamma in [0, 1]
    double alpha = 1.0;          // pseudo-count for the batch estimate; match the base model
    // Relearn once accumulated new samples exceed this; 0 = the training size.
    std::size_t relearn_threshold = 0;

    void validate() const;
};

struct NodeDelta {
    std::string node;
    double max_change = 0.0;
    bool shape_mismatch = false;
};

struct UpdateResult {
    BayesianNetwork model;
    std::vector<NodeDelta> deltas;  // model node order
    std::size_t mismatches = 0;
};

// theta <- (1 - gamma) theta + gamma theta_new, rows renormalised. A node whose
// cardinalities differ in new_data keeps its original table. The dag is never
// changed.
UpdateResult incremental_update(const BayesianNetwork& bn, const DiscreteDataset& new_data, const UpdateParams& params);

// hill_climb + estimate_cpds from scratch.
BayesianNetwork full_relearn(const DiscreteDataset& all_data, const ConstraintSet& delta, const ScoreParams& score,
                             const SearchConfig& search_cfg, double alpha = 1.0);

bool should_relearn(std::size_t accumulated_new_samples, std::size_t training_size, const UpdateParams& params);

nlohmann::json update_report_to_json(const UpdateResult& result);

}  // namespace ranbn
