#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ranbn {

using NamedEdge = std::pair<std::string, std::string>;
using IndexEdge = std::pair<std::size_t, std::size_t>;

// Directed acyclic graph over named nodes. Acyclicity is checked on every
// mutation; a rejected mutation leaves the graph untouched. Parent lists are
// kept sorted by node index, which is the canonical parent order for CPDs.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::vector<std::string> nodes);

    const std::vector<std::string>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    bool has_edge(std::size_t u, std::size_t v) const;
    bool has_edge(std::string_view u, std::string_view v) const;

    // Throws CycleError (with the offending path) if u -> v closes a cycle and
    // Error{Parameter} for a self-loop. Adding an existing edge is a no-op.
    void add_edge(std::size_t u, std::size_t v);
    void add_edge(std::string_view u, std::string_view v);
    void remove_edge(std::size_t u, std::size_t v);
    void remove_edge(std::string_view u, std::string_view v);
    void reverse_edge(std::size_t u, std::size_t v);

    // Adds a node with no edges; returns its index (existing index if present).
    std::size_t add_node(std::string name);

    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_[v]; }
    const std::vector<std::size_t>& children(std::size_t u) const { return children_[u]; }

    // Sorted (u, v) pairs.
    std::vector<IndexEdge> edges() const;
    std::vector<NamedEdge> named_edges() const;

    bool reachable(std::size_t from, std::size_t to) const;
    // Directed path from -> to as node indices, empty if none.
    std::vector<std::size_t> find_path(std::size_t from, std::size_t to) const;
    // Reachability that ignores the single edge skip_u -> skip_v.
    bool reachable_without(std::size_t from, std::size_t to, std::size_t skip_u, std::size_t skip_v) const;

    std::vector<std::size_t> topological_order() const;

    bool operator==(const Dag& other) const;

private:
    std::vector<std::string> nodes_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::size_t edge_count_ = 0;
};

// Copy of `dag` with u -> v added; throws like Dag::add_edge.
Dag with_edge(Dag dag, std::string_view u, std::string_view v);

// Union of node and edge sets (nodes in first-seen order). Throws CycleError
// naming the contributing graphs if the union is cyclic.
Dag graph_union(std::span<const Dag> dags);

// Kahn-style check over an explicit edge list.
bool is_acyclic(std::size_t node_count, std::span<const IndexEdge> edges);

}  // namespace ranbn
