#include "ranbn/adapt.hpp"

#include <algorithm>
#include <cmath>

#include "ranbn/errors.hpp"

namespace ranbn {

void UpdateParams::validate() const {
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
        fail(ErrorKind::Parameter, "learning rate must lie in [0, 1]");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::Parameter, "pseudo-count must be finite and >= 0");
}

UpdateResult incremental_update(const BayesianNetwork& bn, const DiscreteDataset& new_data, const UpdateParams& params) {
    params.validate();
    const double g = params.learning_rate;
    std::vector<Cpd> cpds;
    UpdateResult result;
    for (std::size_t node = 0; node < bn.size(); ++node) {
        const auto& old = bn.cpd(node);
        NodeDelta d{old.child, 0.0, false};
        Cpd next = old;

        auto child_col = new_data.find(old.child);
        if (!child_col) fail(ErrorKind::Schema, "new data lacks variable " + old.child);
        std::vector<std::size_t> parent_cols;
        bool match = new_data.cardinality(*child_col) == old.child_card;
        for (std::size_t j = 0; j < old.parents.size(); ++j) {
            auto col = new_data.find(old.parents[j]);
            if (!col) fail(ErrorKind::Schema, "new data lacks variable " + old.parents[j]);
            parent_cols.push_back(*col);
            match = match && new_data.cardinality(*col) == old.parent_cards[j];
        }
        if (!match) {
            d.shape_mismatch = true;
            ++result.mismatches;
        } else if (g > 0.0) {
            const auto fresh = estimate_table(new_data, *child_col, parent_cols, params.alpha);
            const auto k = static_cast<std::size_t>(old.child_card);
            for (std::size_t r = 0; r < old.rows() && g < 1.0; ++r) {
                double sum = 0.0;
                for (std::size_t s = 0; s < k; ++s) {
                    auto& cell = next.table[r * k + s];
                    cell = (1.0 - g) * old.table[r * k + s] + g * fresh[r * k + s];
                    sum += cell;
                }
                for (std::size_t s = 0; s < k; ++s) next.table[r * k + s] /= sum;
            }
            if (g == 1.0) next.table = fresh;
            for (std::size_t i = 0; i < next.table.size(); ++i)
                d.max_change = std::max(d.max_change, std::abs(next.table[i] - old.table[i]));
        }
        cpds.push_back(std::move(next));
        result.deltas.push_back(std::move(d));
    }
    result.model = BayesianNetwork(bn.specs(), bn.dag(), std::move(cpds));
    return result;
}

BayesianNetwork full_relearn(const DiscreteDataset& all_data, const ConstraintSet& delta, const ScoreParams& score,
                             const SearchConfig& search_cfg, double alpha) {
    auto learned = hill_climb(all_data, delta, score, search_cfg);
    return estimate_cpds(learned.dag, all_data, alpha);
}

bool should_relearn(std::size_t accumulated_new_samples, std::size_t training_size, const UpdateParams& params) {
    const std::size_t threshold = params.relearn_threshold > 0 ? params.relearn_threshold : training_size;
    return accumulated_new_samples > threshold;
}

nlohmann::json update_report_to_json(const UpdateResult& result) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& d : result.deltas)
        nodes.push_back({{"node", d.node}, {"max_change", d.max_change}, {"shape_mismatch", d.shape_mismatch}});
    return {{"nodes", nodes}, {"mismatches", result.mismatches}};
}

}  // namespace ranbn
