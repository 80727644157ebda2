#pragma once

// Test-side generators and brute-force oracles. Oracles here recompute
// quantities from CPD tables directly and share no code with the library
// routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ranbn/bn.hpp"
#include "ranbn/dag.hpp"
#include "ranbn/telemetry.hpp"

namespace ranbn::testing {

inline VariableSpec discrete_spec(std::string name, int card, Role role = Role::Measurement,
                                  Direction direction = Direction::Neutral) {
    VariableSpec s;
    s.name = std::move(name);
    s.role = role;
    s.kind = Kind::Discrete;
    s.direction = direction;
    for (int k = 0; k < card; ++k) s.states.push_back(std::to_string(k));
    return s;
}

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Dirichlet(1) row; strictly positive entries.
inline std::vector<double> random_row(std::mt19937_64& rng, int card) {
    std::vector<double> row(static_cast<std::size_t>(card));
    double total = 0.0;
    for (auto& p : row) {
        p = -std::log1p(-uniform01(rng)) + 1e-3;
        total += p;
    }
    for (auto& p : row) p /= total;
    return row;
}

// Peaked row: most mass on one state, so families are easy to detect.
inline std::vector<double> peaked_row(std::mt19937_64& rng, int card, double peak) {
    std::vector<double> row(static_cast<std::size_t>(card), (1.0 - peak) / (card - 1));
    row[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, card - 1)(rng))] = peak;
    return row;
}

// Full CPDs for `dag` over `specs` with rows drawn by `row_gen(card)`.
template <typename RowGen>
BayesianNetwork network_with_rows(const std::vector<VariableSpec>& specs, const Dag& dag, RowGen row_gen) {
    std::vector<Cpd> cpds;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        Cpd c;
        c.child = specs[v].name;
        c.child_card = static_cast<int>(specs[v].states.size());
        std::size_t rows = 1;
        for (auto p : dag.parents(v)) {
            c.parents.push_back(specs[p].name);
            c.parent_cards.push_back(static_cast<int>(specs[p].states.size()));
            rows *= specs[p].states.size();
        }
        for (std::size_t r = 0; r < rows; ++r)
            for (double x : row_gen(c.child_card)) c.table.push_back(x);
        cpds.push_back(std::move(c));
    }
    return BayesianNetwork(specs, dag, std::move(cpds));
}

struct RandomNetParams {
    std::size_t min_nodes = 1;
    std::size_t max_nodes = 8;
    int min_states = 2;
    int max_states = 4;
    double edge_probability = 0.4;
    std::size_t max_parents = 3;
};

// Random DAG (edges only from lower to higher index) with Dirichlet rows.
inline BayesianNetwork random_network(std::mt19937_64& rng, const RandomNetParams& p = {}) {
    const auto n = std::uniform_int_distribution<std::size_t>(p.min_nodes, p.max_nodes)(rng);
    std::vector<VariableSpec> specs;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        specs.push_back(discrete_spec("X" + std::to_string(i), std::uniform_int_distribution<int>(p.min_states, p.max_states)(rng)));
        names.push_back(specs.back().name);
    }
    Dag dag(names);
    for (std::size_t v = 1; v < n; ++v)
        for (std::size_t u = 0; u < v; ++u)
            if (dag.parents(v).size() < p.max_parents && uniform01(rng) < p.edge_probability) dag.add_edge(u, v);
    return network_with_rows(specs, dag, [&](int card) { return random_row(rng, card); });
}

// P(node = a[node] | parents) read straight from the table (last parent fastest).
inline double table_lookup(const BayesianNetwork& bn, std::size_t node, const std::vector<int>& a) {
    const Cpd& c = bn.cpd(node);
    std::size_t row = 0;
    for (std::size_t k = 0; k < c.parents.size(); ++k)
        row = row * static_cast<std::size_t>(c.parent_cards[k]) + static_cast<std::size_t>(a[bn.index_of(c.parents[k])]);
    return c.table[row * static_cast<std::size_t>(c.child_card) + static_cast<std::size_t>(a[node])];
}

// Calls visit(assignment, probability) for every full assignment.
template <typename Visit>
void for_each_joint(const BayesianNetwork& bn, Visit visit) {
    const std::size_t n = bn.size();
    std::vector<int> a(n, 0);
    while (true) {
        double p = 1.0;
        for (std::size_t v = 0; v < n; ++v) p *= table_lookup(bn, v, a);
        visit(a, p);
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (++a[i] < bn.cardinality(i)) break;
            a[i] = 0;
            if (i == 0) return;
        }
        if (n == 0) return;
    }
}

// Normalized P(query | evidence) by summing the joint.
inline std::vector<double> brute_marginal(const BayesianNetwork& bn, std::size_t query,
                                          const std::map<std::size_t, int>& evidence) {
    std::vector<double> m(static_cast<std::size_t>(bn.cardinality(query)), 0.0);
    for_each_joint(bn, [&](const std::vector<int>& a, double p) {
        for (const auto& [v, s] : evidence)
            if (a[v] != s) return;
        m[static_cast<std::size_t>(a[query])] += p;
    });
    double total = 0.0;
    for (double x : m) total += x;
    for (double& x : m) x /= total;
    return m;
}

inline DiscreteDataset dataset_from_rows(std::vector<VariableSpec> specs, const std::vector<std::vector<int>>& rows) {
    std::vector<int> cells;
    for (const auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
    return DiscreteDataset(std::move(specs), std::move(cells));
}

// Every DAG over `names` as an edge list, in a fixed enumeration order.
inline std::vector<Dag> all_dags(const std::vector<std::string>& names) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j) pairs.emplace_back(i, j);
    std::vector<Dag> out;
    std::size_t combos = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) combos *= 3;
    for (std::size_t code = 0; code < combos; ++code) {
        std::vector<IndexEdge> edges;
        std::size_t c = code;
        for (const auto& [i, j] : pairs) {
            if (c % 3 == 1) edges.emplace_back(i, j);
            if (c % 3 == 2) edges.emplace_back(j, i);
            c /= 3;
        }
        if (!is_acyclic(names.size(), edges)) continue;
        Dag d(names);
        for (const auto& [u, v] : edges) d.add_edge(u, v);
        out.push_back(std::move(d));
    }
    return out;
}

inline std::filesystem::path fixture_path(const std::string& rel) {
    return std::filesystem::path(RANBN_FIXTURE_DIR) / rel;
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ranbn_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace ranbn::testing
