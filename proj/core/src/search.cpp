#include "ranbn/search.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

constexpr double kImprovementEpsilon = 1e-9;

// Constraint membership as dense matrices over dag node indices.
struct ConstraintIndex {
    std::size_t n = 0;
    std::vector<char> mandatory;
    std::vector<char> prohibited;

    ConstraintIndex(const Dag& dag, const ConstraintSet& delta) : n(dag.size()) {
        mandatory.assign(n * n, 0);
        prohibited.assign(n * n, 0);
        for (const auto& [u, v] : delta.mandatory) {
            auto ui = dag.find(u), vi = dag.find(v);
            if (!ui || !vi) fail(ErrorKind::Parameter, "mandatory edge " + u + "->" + v + " names an unknown variable");
            mandatory[*ui * n + *vi] = 1;
        }
        for (const auto& [u, v] : delta.prohibited) {
            auto ui = dag.find(u), vi = dag.find(v);
            if (!ui || !vi) continue;  // can never be created
            prohibited[*ui * n + *vi] = 1;
        }
    }
    bool is_mandatory(std::size_t u, std::size_t v) const { return mandatory[u * n + v] != 0; }
    bool is_prohibited(std::size_t u, std::size_t v) const { return prohibited[u * n + v] != 0; }
};

bool feasible(const Dag& dag, const ConstraintIndex& ci, bool* mandatory_ok = nullptr, bool* prohibited_ok = nullptr) {
    bool m_ok = true, p_ok = true;
    for (std::size_t u = 0; u < ci.n; ++u)
        for (std::size_t v = 0; v < ci.n; ++v) {
            if (ci.is_mandatory(u, v) && !dag.has_edge(u, v)) m_ok = false;
            if (ci.is_prohibited(u, v) && dag.has_edge(u, v)) p_ok = false;
        }
    if (mandatory_ok) *mandatory_ok = m_ok;
    if (prohibited_ok) *prohibited_ok = p_ok;
    return m_ok && p_ok;
}

std::vector<Move> enumerate_moves(const Dag& dag, const ConstraintIndex& ci, const SearchConfig& cfg, bool hard) {
    std::vector<Move> moves;
    const std::size_t n = dag.size();
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            if (dag.has_edge(u, v)) {
                const bool locked = hard && ci.is_mandatory(u, v);
                if (!locked) moves.push_back({MoveKind::Delete, u, v});
                // Reverse: v -> u must not close a cycle via another u ~> v path.
                if (!locked && !(hard && ci.is_prohibited(v, u)) && dag.parents(u).size() < cfg.max_in_degree &&
                    !dag.reachable_without(u, v, u, v)) {
                    moves.push_back({MoveKind::Reverse, u, v});
                }
            } else if (!dag.has_edge(v, u)) {
                if (hard && ci.is_prohibited(u, v)) continue;
                if (dag.parents(v).size() >= cfg.max_in_degree) continue;
                if (dag.reachable(v, u)) continue;
                moves.push_back({MoveKind::Add, u, v});
            }
        }
    }
    return moves;
}

// Lexicographic order on (kind, source name, target name).
bool move_before(const Move& a, const Move& b, const Dag& dag) {
    if (a.kind != b.kind) return a.kind < b.kind;
    const auto& an = dag.nodes();
    if (an[a.source] != an[b.source]) return an[a.source] < an[b.source];
    return an[a.target] < an[b.target];
}

class Climber {
public:
    Climber(const DiscreteDataset& data, const ConstraintSet& delta, const ScoreParams& params, const SearchConfig& cfg)
        : data_(data), delta_(delta), params_(params.resolved(data.rows())), cfg_(cfg) {}

    double local(std::size_t child, const std::vector<std::size_t>& parents) {
        return cache_.get_or_compute(data_, child, parents, params_);
    }

    double constraint_term(const ConstraintIndex& ci, std::size_t u, std::size_t v, bool present) const {
        if (params_.mode == ConstraintMode::Hard) return 0.0;  // constant over the feasible set
        double s = 0.0;
        if (ci.is_mandatory(u, v)) s += present ? params_.alpha_reward : -params_.alpha_penalty;
        if (ci.is_prohibited(u, v) && present) s -= params_.beta_penalty;
        return s;
    }

    double move_delta(const Dag& dag, const ConstraintIndex& ci, const Move& m) {
        auto with = [](std::vector<std::size_t> p, std::size_t x) {
            p.insert(std::upper_bound(p.begin(), p.end(), x), x);
            return p;
        };
        auto without = [](std::vector<std::size_t> p, std::size_t x) {
            p.erase(std::find(p.begin(), p.end(), x));
            return p;
        };
        const auto& pv = dag.parents(m.target);
        switch (m.kind) {
            case MoveKind::Add:
                return local(m.target, with(pv, m.source)) - local(m.target, pv) +
                       constraint_term(ci, m.source, m.target, true) - constraint_term(ci, m.source, m.target, false);
            case MoveKind::Delete:
                return local(m.target, without(pv, m.source)) - local(m.target, pv) +
                       constraint_term(ci, m.source, m.target, false) - constraint_term(ci, m.source, m.target, true);
            case MoveKind::Reverse: {
                const auto& pu = dag.parents(m.source);
                return local(m.target, without(pv, m.source)) - local(m.target, pv) +
                       local(m.source, with(pu, m.target)) - local(m.source, pu) +
                       constraint_term(ci, m.source, m.target, false) - constraint_term(ci, m.source, m.target, true) +
                       constraint_term(ci, m.target, m.source, true) - constraint_term(ci, m.target, m.source, false);
            }
        }
        return 0.0;
    }

    double score(const Dag& dag) {
        double s = 0.0;
        for (std::size_t v = 0; v < dag.size(); ++v) s += local(v, dag.parents(v));
        return s + llm_score(dag, delta_, params_);
    }

    SearchResult climb(Dag dag, const ConstraintIndex& ci) {
        const bool hard = params_.mode == ConstraintMode::Hard;
        SearchResult result{dag, {}};
        auto& trace = result.trace;
        trace.initial_score = score(dag);
        double running = trace.initial_score;
        for (std::size_t it = 0; it < cfg_.max_iterations; ++it) {
            auto moves = enumerate_moves(dag, ci, cfg_, hard);
            const Move* best = nullptr;
            double best_delta = 0.0;
            for (const auto& m : moves) {
                const double d = move_delta(dag, ci, m);
                if (!best) {
                    best = &m;
                    best_delta = d;
                    continue;
                }
                const double tol = kImprovementEpsilon * std::max(1.0, std::abs(best_delta));
                if (d > best_delta + tol || (std::abs(d - best_delta) <= tol && move_before(m, *best, dag))) {
                    best = &m;
                    best_delta = d;
                }
            }
            if (!best || best_delta <= kImprovementEpsilon * std::max(1.0, std::abs(running))) break;
            const Move chosen = *best;
            switch (chosen.kind) {
                case MoveKind::Add: dag.add_edge(chosen.source, chosen.target); break;
                case MoveKind::Delete: dag.remove_edge(chosen.source, chosen.target); break;
                case MoveKind::Reverse: dag.reverse_edge(chosen.source, chosen.target); break;
            }
            if (hard && !feasible(dag, ci)) fail(ErrorKind::Feasibility, "search produced an infeasible graph");
            running += best_delta;
            trace.steps.push_back({chosen, best_delta, running});
        }
        trace.final_score = score(dag);
        feasible(dag, ci, &trace.mandatory_present, &trace.prohibited_absent);
        result.dag = std::move(dag);
        return result;
    }

    const ScoreParams& params() const { return params_; }

private:
    const DiscreteDataset& data_;
    const ConstraintSet& delta_;
    ScoreParams params_;
    SearchConfig cfg_;
    LocalScoreCache cache_;
};

Dag mandatory_start(const DiscreteDataset& data, const ConstraintSet& delta) {
    Dag dag(data.names());
    for (const auto& [u, v] : delta.mandatory) {
        if (!dag.find(u) || !dag.find(v))
            fail(ErrorKind::Parameter, "mandatory edge " + u + "->" + v + " names an unknown variable");
        try {
            dag.add_edge(u, v);
        } catch (const CycleError& e) {
            fail(ErrorKind::Unsatisfiable, std::string("mandatory edges are cyclic: ") + e.what());
        }
    }
    return dag;
}

}  // namespace

const char* to_string(MoveKind kind) {
    switch (kind) {
        case MoveKind::Add: return "add";
        case MoveKind::Delete: return "delete";
        case MoveKind::Reverse: return "reverse";
    }
    return "add";
}

std::vector<Move> legal_moves(const Dag& dag, const ConstraintSet& delta, const SearchConfig& cfg, ConstraintMode mode) {
    ConstraintIndex ci(dag, delta);
    const bool hard = mode == ConstraintMode::Hard;
    if (hard && !feasible(dag, ci)) fail(ErrorKind::Feasibility, "graph violates hard constraints");
    auto moves = enumerate_moves(dag, ci, cfg, hard);
    std::sort(moves.begin(), moves.end(), [&](const Move& a, const Move& b) { return move_before(a, b, dag); });
    return moves;
}

SearchResult hill_climb(const DiscreteDataset& data, const ConstraintSet& delta, const ScoreParams& params,
                        const SearchConfig& cfg) {
    if (data.rows() == 0) fail(ErrorKind::EmptyData, "structure search needs at least one row");
    if (cfg.max_in_degree == 0) fail(ErrorKind::Parameter, "max_in_degree must be at least 1");
    params.validate();

    Climber climber(data, delta, params, cfg);
    const Dag start = mandatory_start(data, delta);
    const ConstraintIndex ci(start, delta);
    const bool hard = params.mode == ConstraintMode::Hard;
    if (hard)
        for (std::size_t v = 0; v < start.size(); ++v)
            if (start.parents(v).size() > cfg.max_in_degree)
                fail(ErrorKind::Feasibility, "mandatory edges give " + start.nodes()[v] + " " +
                                                 std::to_string(start.parents(v).size()) + " parents, above max_in_degree " +
                                                 std::to_string(cfg.max_in_degree));

    SearchResult best = climber.climb(start, ci);
    for (std::size_t r = 1; r <= cfg.random_restarts; ++r) {
        std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * r));
        Dag init = start;
        for (std::size_t k = 0; k < data.cols(); ++k) {
            auto moves = enumerate_moves(init, ci, cfg, hard);
            std::erase_if(moves, [](const Move& m) { return m.kind != MoveKind::Add; });
            if (moves.empty()) break;
            const auto& m = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
            init.add_edge(m.source, m.target);
        }
        auto candidate = climber.climb(std::move(init), ci);
        candidate.trace.restart = r;
        if (candidate.trace.final_score > best.trace.final_score + kImprovementEpsilon * std::abs(best.trace.final_score))
            best = std::move(candidate);
    }
    return best;
}

ExhaustiveResult exhaustive_best_dag(const DiscreteDataset& data, const ConstraintSet& delta, const ScoreParams& params,
                                     std::size_t node_limit) {
    const std::size_t n = data.cols();
    if (node_limit > 5) node_limit = 5;
    if (n > node_limit)
        fail(ErrorKind::Parameter, "exhaustive search refused for " + std::to_string(n) + " nodes (limit " +
                                       std::to_string(node_limit) + ")");
    const auto p = params.resolved(data.rows());
    const Dag empty(data.names());
    const ConstraintIndex ci(empty, delta);
    const bool hard = p.mode == ConstraintMode::Hard;

    std::vector<IndexEdge> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::size_t total = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;

    LocalScoreCache cache;
    ExhaustiveResult out;
    bool have_best = false;
    std::vector<NamedEdge> best_edges;
    std::vector<IndexEdge> edges;
    for (std::size_t code = 0; code < total; ++code) {
        edges.clear();
        std::size_t c = code;
        for (const auto& [i, j] : pairs) {
            const auto digit = c % 3;
            c /= 3;
            if (digit == 1) edges.emplace_back(i, j);
            else if (digit == 2) edges.emplace_back(j, i);
        }
        if (!is_acyclic(n, edges)) continue;
        ++out.acyclic_count;
        Dag dag(data.names());
        for (auto [u, v] : edges) dag.add_edge(u, v);
        if (hard && !feasible(dag, ci)) continue;
        ++out.feasible_count;
        const double s = base_score(dag, data, p, &cache) + llm_score(dag, delta, p);
        auto named = dag.named_edges();
        std::sort(named.begin(), named.end());
        const double tol = kImprovementEpsilon * std::max(1.0, std::abs(out.score));
        if (!have_best || s > out.score + tol || (std::abs(s - out.score) <= tol && named < best_edges)) {
            have_best = true;
            out.score = s;
            out.dag = std::move(dag);
            best_edges = std::move(named);
        }
    }
    if (!have_best) fail(ErrorKind::Feasibility, "no DAG satisfies the constraints");
    return out;
}

nlohmann::json trace_to_json_lines(const SearchTrace& trace, const Dag& dag) {
    nlohmann::json lines = nlohmann::json::array();
    lines.push_back({{"event", "start"}, {"score", trace.initial_score}, {"restart", trace.restart}});
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        lines.push_back({{"event", "move"},
                         {"iteration", i},
                         {"kind", to_string(s.move.kind)},
                         {"source", dag.nodes()[s.move.source]},
                         {"target", dag.nodes()[s.move.target]},
                         {"delta", s.delta},
                         {"total", s.total}});
    }
    lines.push_back({{"event", "end"},
                     {"score", trace.final_score},
                     {"mandatory_present", trace.mandatory_present},
                     {"prohibited_absent", trace.prohibited_absent}});
    return lines;
}

}  // namespace ranbn
