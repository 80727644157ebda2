#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "ranbn/counts.hpp"
#include "ranbn/errors.hpp"
#include "ranbn/search.hpp"

namespace ranbn {

namespace {

// Minimum expected samples per degree of freedom before a test is trusted.
constexpr double kMinSamplesPerDof = 5.0;

void for_each_subset(const std::vector<std::size_t>& pool, std::size_t size,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit) {
    if (size > pool.size()) return;
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    std::vector<std::size_t> subset(size);
    while (true) {
        for (std::size_t i = 0; i < size; ++i) subset[i] = pool[idx[i]];
        if (visit(subset)) return;
        std::size_t i = size;
        while (i > 0 && idx[i - 1] == pool.size() - size + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Partially directed graph used during orientation.
struct Pdag {
    std::size_t n;
    std::vector<char> adj;  // symmetric adjacency
    std::vector<char> dir;  // dir[u*n+v] = u -> v oriented

    explicit Pdag(std::size_t nodes) : n(nodes), adj(nodes * nodes, 0), dir(nodes * nodes, 0) {}
    bool adjacent(std::size_t a, std::size_t b) const { return adj[a * n + b] != 0; }
    bool directed(std::size_t a, std::size_t b) const { return dir[a * n + b] != 0; }
    bool undirected(std::size_t a, std::size_t b) const { return adjacent(a, b) && !directed(a, b) && !directed(b, a); }
    void orient(std::size_t a, std::size_t b) { dir[a * n + b] = 1; }
};

bool apply_meek(Pdag& g) {
    bool changed = false;
    const std::size_t n = g.n;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (!g.undirected(a, b)) continue;
            // R1: c -> a - b with c, b non-adjacent  =>  a -> b
            for (std::size_t c = 0; c < n; ++c) {
                if (c != b && g.directed(c, a) && !g.directed(a, c) && !g.adjacent(c, b)) {
                    g.orient(a, b);
                    changed = true;
                    break;
                }
            }
            if (!g.undirected(a, b)) continue;
            // R2: a -> c -> b and a - b  =>  a -> b
            for (std::size_t c = 0; c < n; ++c) {
                if (g.directed(a, c) && !g.directed(c, a) && g.directed(c, b) && !g.directed(b, c)) {
                    g.orient(a, b);
                    changed = true;
                    break;
                }
            }
            if (!g.undirected(a, b)) continue;
            // R3: a - c -> b, a - d -> b, c and d non-adjacent  =>  a -> b
            for (std::size_t c = 0; c < n && g.undirected(a, b); ++c) {
                if (!g.undirected(a, c) || !(g.directed(c, b) && !g.directed(b, c))) continue;
                for (std::size_t d = c + 1; d < n; ++d) {
                    if (g.undirected(a, d) && g.directed(d, b) && !g.directed(b, d) && !g.adjacent(c, d)) {
                        g.orient(a, b);
                        changed = true;
                        break;
                    }
                }
            }
        }
    return changed;
}

}  // namespace

CiTest chi_square_test(const DiscreteDataset& data, std::size_t x, std::size_t y, std::span<const std::size_t> z) {
    CiTest t;
    const std::size_t r = static_cast<std::size_t>(data.cardinality(x));
    const std::size_t c = static_cast<std::size_t>(data.cardinality(y));
    std::vector<std::size_t> family(z.begin(), z.end());
    family.push_back(y);
    // count_family over child x with parents (z..., y): config = zconf * c + y
    auto fc = count_family(data, x, family);
    const std::size_t strata = fc.parent_configs / c;
    t.dof = static_cast<double>((r - 1) * (c - 1) * strata);

    std::vector<double> row_tot(r), col_tot(c);
    for (std::size_t s = 0; s < strata; ++s) {
        std::fill(row_tot.begin(), row_tot.end(), 0.0);
        std::fill(col_tot.begin(), col_tot.end(), 0.0);
        double n = 0.0;
        for (std::size_t yi = 0; yi < c; ++yi)
            for (std::size_t xi = 0; xi < r; ++xi) {
                const double v = static_cast<double>(fc.at(s * c + yi, xi));
                row_tot[xi] += v;
                col_tot[yi] += v;
                n += v;
            }
        if (n == 0.0) continue;
        for (std::size_t yi = 0; yi < c; ++yi)
            for (std::size_t xi = 0; xi < r; ++xi) {
                const double expected = row_tot[xi] * col_tot[yi] / n;
                if (expected <= 0.0) continue;
                const double diff = static_cast<double>(fc.at(s * c + yi, xi)) - expected;
                t.statistic += diff * diff / expected;
            }
    }
    if (t.dof <= 0.0 || static_cast<double>(data.rows()) < kMinSamplesPerDof * t.dof) {
        t.degenerate = true;
        t.p_value = 0.0;
        return t;
    }
    boost::math::chi_squared dist(t.dof);
    t.p_value = boost::math::cdf(boost::math::complement(dist, t.statistic));
    return t;
}

PcResult pc_algorithm(const DiscreteDataset& data, double alpha, std::size_t max_condition_size) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Parameter, "significance level must be in (0,1)");
    const std::size_t n = data.cols();
    PcResult result;
    Pdag g(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (a != b) g.adj[a * n + b] = 1;

    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sepset;

    // Skeleton phase; adjacency sets are frozen per level so the result does
    // not depend on the order in which pairs are visited.
    for (std::size_t level = 0; level <= max_condition_size; ++level) {
        std::vector<std::vector<std::size_t>> adj_snapshot(n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if (g.adjacent(a, b)) adj_snapshot[a].push_back(b);
        bool any_candidate = false;
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t y : adj_snapshot[x]) {
                if (!g.adjacent(x, y)) continue;
                std::vector<std::size_t> pool;
                for (auto w : adj_snapshot[x])
                    if (w != y) pool.push_back(w);
                if (pool.size() < level) continue;
                any_candidate = true;
                for_each_subset(pool, level, [&](const std::vector<std::size_t>& z) {
                    auto t = chi_square_test(data, x, y, z);
                    if (t.degenerate) {
                        ++result.tests_skipped;
                        return false;
                    }
                    ++result.tests_run;
                    if (t.p_value > alpha) {
                        g.adj[x * n + y] = g.adj[y * n + x] = 0;
                        sepset[{std::min(x, y), std::max(x, y)}] = z;
                        return true;
                    }
                    return false;
                });
            }
        }
        if (!any_candidate) break;
    }

    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (g.adjacent(a, b)) result.skeleton.emplace_back(data.specs()[a].name, data.specs()[b].name);

    // Unshielded colliders a -> c <- b.
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (a == c || b == c || !g.adjacent(a, c) || !g.adjacent(b, c) || g.adjacent(a, b)) continue;
                auto it = sepset.find({a, b});
                if (it != sepset.end() && std::find(it->second.begin(), it->second.end(), c) != it->second.end())
                    continue;
                // Skip orientations that contradict an earlier collider.
                if (!g.directed(c, a)) g.orient(a, c);
                if (!g.directed(c, b)) g.orient(b, c);
            }
    // Bidirected conflicts (both directions set) are treated as undirected.
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (g.directed(a, b) && g.directed(b, a)) g.dir[a * n + b] = g.dir[b * n + a] = 0;

    while (apply_meek(g)) {
    }

    Dag dag(data.names());
    std::vector<IndexEdge> undirected;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (!g.adjacent(a, b)) continue;
            if (g.directed(a, b) && !g.directed(b, a)) {
                try {
                    dag.add_edge(a, b);
                } catch (const CycleError&) {
                    dag.add_edge(b, a);
                    result.forced_orientations.emplace_back(dag.nodes()[b], dag.nodes()[a]);
                }
            } else if (a < b && g.undirected(a, b)) {
                undirected.emplace_back(a, b);
            }
        }
    // Remaining undirected edges: lexicographically smaller name -> larger,
    // flipped if that would close a cycle.
    std::sort(undirected.begin(), undirected.end(), [&](const IndexEdge& l, const IndexEdge& r) {
        auto key = [&](const IndexEdge& e) {
            const auto& a = dag.nodes()[e.first];
            const auto& b = dag.nodes()[e.second];
            return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        };
        return key(l) < key(r);
    });
    for (auto [a, b] : undirected) {
        auto from = dag.nodes()[a] < dag.nodes()[b] ? a : b;
        auto to = from == a ? b : a;
        if (dag.reachable(to, from)) std::swap(from, to);
        dag.add_edge(from, to);
        result.forced_orientations.emplace_back(dag.nodes()[from], dag.nodes()[to]);
    }
    result.dag = std::move(dag);
    return result;
}

}  // namespace ranbn
