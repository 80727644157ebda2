#include "ranbn/dag.hpp"

#include <algorithm>
#include <set>

#include "ranbn/errors.hpp"

namespace ranbn {

Dag::Dag(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
    std::set<std::string> seen;
    for (const auto& n : nodes_)
        if (!seen.insert(n).second) fail(ErrorKind::Parameter, "duplicate node " + n);
    parents_.resize(nodes_.size());
    children_.resize(nodes_.size());
}

std::optional<std::size_t> Dag::find(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == name) return i;
    return std::nullopt;
}

std::size_t Dag::index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) fail(ErrorKind::Parameter, "unknown node '" + std::string(name) + "'");
    return *i;
}

bool Dag::has_edge(std::size_t u, std::size_t v) const {
    const auto& p = parents_[v];
    return std::binary_search(p.begin(), p.end(), u);
}

bool Dag::has_edge(std::string_view u, std::string_view v) const {
    auto ui = find(u);
    auto vi = find(v);
    return ui && vi && has_edge(*ui, *vi);
}

std::size_t Dag::add_node(std::string name) {
    if (auto i = find(name)) return *i;
    nodes_.push_back(std::move(name));
    parents_.emplace_back();
    children_.emplace_back();
    return nodes_.size() - 1;
}

void Dag::add_edge(std::size_t u, std::size_t v) {
    if (u >= size() || v >= size()) fail(ErrorKind::Parameter, "edge endpoint out of range");
    if (u == v) fail(ErrorKind::Parameter, "self-loop on " + nodes_[u]);
    if (has_edge(u, v)) return;
    auto path = find_path(v, u);
    if (!path.empty()) {
        std::vector<std::string> names{nodes_[u]};
        for (auto i : path) names.push_back(nodes_[i]);
        std::string text;
        for (std::size_t i = 0; i < names.size(); ++i) text += (i ? "->" : "") + names[i];
        throw CycleError("adding " + nodes_[u] + "->" + nodes_[v] + " closes cycle " + text, names);
    }
    auto& p = parents_[v];
    p.insert(std::upper_bound(p.begin(), p.end(), u), u);
    auto& c = children_[u];
    c.insert(std::upper_bound(c.begin(), c.end(), v), v);
    ++edge_count_;
}

void Dag::add_edge(std::string_view u, std::string_view v) { add_edge(index_of(u), index_of(v)); }

void Dag::remove_edge(std::size_t u, std::size_t v) {
    if (!has_edge(u, v)) return;
    auto& p = parents_[v];
    p.erase(std::lower_bound(p.begin(), p.end(), u));
    auto& c = children_[u];
    c.erase(std::lower_bound(c.begin(), c.end(), v));
    --edge_count_;
}

void Dag::remove_edge(std::string_view u, std::string_view v) { remove_edge(index_of(u), index_of(v)); }

void Dag::reverse_edge(std::size_t u, std::size_t v) {
    if (!has_edge(u, v)) fail(ErrorKind::Parameter, "no edge " + nodes_[u] + "->" + nodes_[v] + " to reverse");
    remove_edge(u, v);
    try {
        add_edge(v, u);
    } catch (...) {
        add_edge(u, v);
        throw;
    }
}

std::vector<IndexEdge> Dag::edges() const {
    std::vector<IndexEdge> out;
    out.reserve(edge_count_);
    for (std::size_t u = 0; u < size(); ++u)
        for (auto v : children_[u]) out.emplace_back(u, v);
    return out;
}

std::vector<NamedEdge> Dag::named_edges() const {
    std::vector<NamedEdge> out;
    for (auto [u, v] : edges()) out.emplace_back(nodes_[u], nodes_[v]);
    return out;
}

bool Dag::reachable(std::size_t from, std::size_t to) const {
    return reachable_without(from, to, size(), size());
}

bool Dag::reachable_without(std::size_t from, std::size_t to, std::size_t skip_u, std::size_t skip_v) const {
    if (from == to) return true;
    std::vector<char> seen(size(), 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (auto c : children_[n]) {
            if (n == skip_u && c == skip_v) continue;
            if (c == to) return true;
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
        }
    }
    return false;
}

std::vector<std::size_t> Dag::find_path(std::size_t from, std::size_t to) const {
    std::vector<std::size_t> prev(size(), size());
    std::vector<char> seen(size(), 0);
    std::vector<std::size_t> queue{from};
    seen[from] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        auto n = queue[head];
        if (n == to) {
            std::vector<std::size_t> path;
            for (auto cur = to; cur != from; cur = prev[cur]) path.push_back(cur);
            path.push_back(from);
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (auto c : children_[n]) {
            if (!seen[c]) {
                seen[c] = 1;
                prev[c] = n;
                queue.push_back(c);
            }
        }
    }
    return {};
}

std::vector<std::size_t> Dag::topological_order() const {
    std::vector<std::size_t> in_degree(size());
    for (std::size_t v = 0; v < size(); ++v) in_degree[v] = parents_[v].size();
    // Smallest ready index first, so the order is deterministic.
    std::set<std::size_t> ready;
    for (std::size_t v = 0; v < size(); ++v)
        if (in_degree[v] == 0) ready.insert(v);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (auto c : children_[n])
            if (--in_degree[c] == 0) ready.insert(c);
    }
    return order;
}

bool Dag::operator==(const Dag& other) const {
    return nodes_ == other.nodes_ && parents_ == other.parents_;
}

Dag with_edge(Dag dag, std::string_view u, std::string_view v) {
    dag.add_edge(u, v);
    return dag;
}

Dag graph_union(std::span<const Dag> dags) {
    Dag out;
    for (std::size_t d = 0; d < dags.size(); ++d)
        for (const auto& n : dags[d].nodes()) out.add_node(n);

    std::vector<IndexEdge> all;
    std::vector<std::vector<std::size_t>> sources;
    for (std::size_t d = 0; d < dags.size(); ++d) {
        for (const auto& [u, v] : dags[d].named_edges()) {
            IndexEdge e{out.index_of(u), out.index_of(v)};
            auto it = std::find(all.begin(), all.end(), e);
            if (it == all.end()) {
                all.push_back(e);
                sources.push_back({d});
            } else {
                sources[static_cast<std::size_t>(it - all.begin())].push_back(d);
            }
        }
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        try {
            out.add_edge(all[i].first, all[i].second);
        } catch (const CycleError& e) {
            // Collect every input graph that owns an edge on the cycle.
            std::set<std::size_t> involved;
            const auto& path = e.path();
            for (std::size_t k = 0; k + 1 < path.size(); ++k) {
                IndexEdge ce{out.index_of(path[k]), out.index_of(path[k + 1])};
                auto it = std::find(all.begin(), all.end(), ce);
                if (it != all.end())
                    for (auto d : sources[static_cast<std::size_t>(it - all.begin())]) involved.insert(d);
            }
            std::string list;
            for (auto d : involved) list += (list.empty() ? "" : ",") + std::to_string(d);
            throw CycleError("graph union is cyclic (contributing graphs: " + list + "): " + e.what(), path);
        }
    }
    return out;
}

bool is_acyclic(std::size_t node_count, std::span<const IndexEdge> edges) {
    std::vector<std::size_t> in_degree(node_count, 0);
    std::vector<std::vector<std::size_t>> out(node_count);
    for (auto [u, v] : edges) {
        if (u == v) return false;
        out[u].push_back(v);
        ++in_degree[v];
    }
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < node_count; ++i)
        if (in_degree[i] == 0) stack.push_back(i);
    std::size_t visited = 0;
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        ++visited;
        for (auto c : out[n])
            if (--in_degree[c] == 0) stack.push_back(c);
    }
    return visited == node_count;
}

}  // namespace ranbn
