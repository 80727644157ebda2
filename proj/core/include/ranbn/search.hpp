#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/constraints.hpp"
#include "ranbn/dag.hpp"
#include "ranbn/scoring.hpp"
#include "ranbn/telemetry.hpp"

namespace ranbn {

struct SearchConfig {
    std::size_t max_in_degree = 4;
    std::size_t max_iterations = 10000;
    std::size_t random_restarts = 0;
    std::uint64_t seed = 0;
};

enum class MoveKind { Add = 0, Delete = 1, Reverse = 2 };
const char* to_string(MoveKind kind);

struct Move {
    MoveKind kind;
    std::size_t source;
    std::size_t target;

    bool operator==(const Move&) const = default;
};

struct TraceStep {
    Move move;
    double delta;
    double total;
};

struct SearchTrace {
    double initial_score = 0.0;
    double final_score = 0.0;
    std::vector<TraceStep> steps;
    std::size_t restart = 0;  // which start produced the result (0 = mandatory-only start)
    bool mandatory_present = true;
    bool prohibited_absent = true;
};

struct SearchResult {
    Dag dag;
    SearchTrace trace;
};

// Single-edge moves that keep the graph acyclic and within max_in_degree. In
// Hard mode they also never drop or reverse a mandatory edge and never create
// a prohibited edge; the input must then be feasible (Error{Feasibility}).
std::vector<Move> legal_moves(const Dag& dag, const ConstraintSet& delta, const SearchConfig& cfg,
                              ConstraintMode mode = ConstraintMode::Hard);

// Greedy best-improvement search from the graph holding exactly the mandatory
// edges. Ties are broken by (move kind, source name, target name). Restarts
// begin from the mandatory edges plus random legal additions; the best final
// score wins (earliest start on ties).
SearchResult hill_climb(const DiscreteDataset& data, const ConstraintSet& delta, const ScoreParams& params,
                        const SearchConfig& cfg);

struct ExhaustiveResult {
    Dag dag;
    double score = 0.0;
    std::size_t acyclic_count = 0;   // all DAGs on the node set
    std::size_t feasible_count = 0;  // those admitted by the constraints
};

// Scores every DAG over the dataset columns; refuses more than node_limit
// (at most 5) nodes. Ties go to the lexicographically smallest edge list.
ExhaustiveResult exhaustive_best_dag(const DiscreteDataset& data, const ConstraintSet& delta,
                                     const ScoreParams& params, std::size_t node_limit = 5);

nlohmann::json trace_to_json_lines(const SearchTrace& trace, const Dag& dag);

// Constraint-based baseline.
struct PcResult {
    Dag dag;
    std::vector<NamedEdge> skeleton;           // undirected adjacencies, (a, b) with a < b by index
    std::vector<NamedEdge> forced_orientations;  // edges oriented by the lexicographic fallback
    std::size_t tests_run = 0;
    std::size_t tests_skipped = 0;
};

struct CiTest {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    bool degenerate = false;
};

// Pearson chi-square test of x _||_ y | z, pooled over strata of z, with
// (r-1)(c-1) * prod|z| degrees of freedom.
CiTest chi_square_test(const DiscreteDataset& data, std::size_t x, std::size_t y, std::span<const std::size_t> z);

PcResult pc_algorithm(const DiscreteDataset& data, double alpha, std::size_t max_condition_size = 3);

}  // namespace ranbn
