#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/dag.hpp"
#include "ranbn/telemetry.hpp"

namespace ranbn {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr double kRowSumTolerance = 1e-9;

// P(child | parents). Rows are parent configurations in row-major mixed radix
// (last parent fastest); table[row * child_card + state].
struct Cpd {
    std::string child;
    std::vector<std::string> parents;
    int child_card = 0;
    std::vector<int> parent_cards;
    std::vector<double> table;

    std::size_t rows() const;
    std::size_t row_index(std::span<const int> parent_states) const;
    std::span<const double> row(std::size_t r) const {
        return {table.data() + r * static_cast<std::size_t>(child_card), static_cast<std::size_t>(child_card)};
    }
    std::span<double> row(std::size_t r) {
        return {table.data() + r * static_cast<std::size_t>(child_card), static_cast<std::size_t>(child_card)};
    }
    // Throws Error{Schema} on shape, range or normalisation violations.
    void validate() const;

    bool operator==(const Cpd&) const = default;
};

class BayesianNetwork {
public:
    BayesianNetwork() = default;
    // Node i of `dag` is described by specs[i]; cpds are matched to nodes by
    // child name and must list exactly the dag parents, in dag order.
    BayesianNetwork(std::vector<VariableSpec> specs, Dag dag, std::vector<Cpd> cpds);

    const std::vector<VariableSpec>& specs() const { return specs_; }
    const Dag& dag() const { return dag_; }
    const std::vector<Cpd>& cpds() const { return cpds_; }
    const Cpd& cpd(std::size_t node) const { return cpds_[node]; }
    const Cpd& cpd(std::string_view name) const { return cpds_[index_of(name)]; }
    std::size_t size() const { return specs_.size(); }
    int cardinality(std::size_t node) const { return static_cast<int>(specs_[node].states.size()); }
    std::size_t index_of(std::string_view name) const { return dag_.index_of(name); }
    std::vector<std::string> names() const { return dag_.nodes(); }

    // P(node = assignment[node] | parents) under a full assignment.
    double conditional(std::size_t node, std::span<const int> assignment) const;

    // Returns a copy with one CPD replaced (same parents and shape required).
    BayesianNetwork with_cpd(Cpd cpd) const;

    bool operator==(const BayesianNetwork&) const = default;

private:
    std::vector<VariableSpec> specs_;
    Dag dag_;
    std::vector<Cpd> cpds_;
};

// Product of the node conditionals at a full assignment (index = node order).
double factorized_joint(const BayesianNetwork& bn, std::span<const int> assignment);
double log_factorized_joint(const BayesianNetwork& bn, std::span<const int> assignment);

// Counting estimator with Dirichlet pseudo-count `alpha` per cell; with alpha = 0
// an unobserved parent configuration falls back to a uniform row. The dag's
// nodes must be dataset columns; parents are ordered by dataset column order.
BayesianNetwork estimate_cpds(const Dag& dag, const DiscreteDataset& data, double alpha = 1.0);

// Smoothed table of one family; parent columns in the given order.
std::vector<double> estimate_table(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents,
                                   double alpha);

// Uniform CPD with the given shape.
Cpd uniform_cpd(std::string child, std::vector<std::string> parents, int child_card, std::vector<int> parent_cards);

nlohmann::json model_to_json(const BayesianNetwork& bn);
BayesianNetwork model_from_json(const nlohmann::json& j);
std::string save_model(const BayesianNetwork& bn);
BayesianNetwork load_model(std::string_view bytes);

}  // namespace ranbn
