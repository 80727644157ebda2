#include "ranbn/bn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ranbn/counts.hpp"
#include "ranbn/errors.hpp"

namespace ranbn {

std::size_t Cpd::rows() const {
    std::size_t q = 1;
    for (int c : parent_cards) q *= static_cast<std::size_t>(c);
    return q;
}

std::size_t Cpd::row_index(std::span<const int> parent_states) const {
    std::size_t r = 0;
    for (std::size_t j = 0; j < parent_cards.size(); ++j)
        r = r * static_cast<std::size_t>(parent_cards[j]) + static_cast<std::size_t>(parent_states[j]);
    return r;
}

void Cpd::validate() const {
    if (child_card <= 0) fail(ErrorKind::Schema, "cpd of " + child + " has no states");
    if (parents.size() != parent_cards.size()) fail(ErrorKind::Schema, "cpd of " + child + " parent shape mismatch");
    if (table.size() != rows() * static_cast<std::size_t>(child_card))
        fail(ErrorKind::Schema, "cpd of " + child + " has " + std::to_string(table.size()) + " entries, expected " +
                                    std::to_string(rows() * static_cast<std::size_t>(child_card)));
    for (std::size_t r = 0; r < rows(); ++r) {
        double sum = 0.0;
        for (double p : row(r)) {
            if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::Schema, "cpd of " + child + " has entry outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            fail(ErrorKind::Schema, "cpd of " + child + " row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
}

BayesianNetwork::BayesianNetwork(std::vector<VariableSpec> specs, Dag dag, std::vector<Cpd> cpds)
    : specs_(std::move(specs)), dag_(std::move(dag)) {
    if (specs_.size() != dag_.size()) fail(ErrorKind::Schema, "specs and dag disagree on node count");
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name != dag_.nodes()[i]) fail(ErrorKind::Schema, "spec order differs from dag node order");
    if (cpds.size() != specs_.size()) fail(ErrorKind::Schema, "expected exactly one cpd per node");

    cpds_.resize(specs_.size());
    std::vector<char> filled(specs_.size(), 0);
    for (auto& cpd : cpds) {
        auto node = dag_.index_of(cpd.child);
        if (filled[node]) fail(ErrorKind::Schema, "duplicate cpd for " + cpd.child);
        filled[node] = 1;
        const auto& pa = dag_.parents(node);
        if (cpd.parents.size() != pa.size())
            fail(ErrorKind::Schema, "cpd parents of " + cpd.child + " differ from dag parents");
        for (std::size_t j = 0; j < pa.size(); ++j) {
            if (cpd.parents[j] != dag_.nodes()[pa[j]])
                fail(ErrorKind::Schema, "cpd parents of " + cpd.child + " differ from dag parents");
            if (cpd.parent_cards[j] != cardinality(pa[j]))
                fail(ErrorKind::Schema, "cpd of " + cpd.child + " has wrong parent cardinality");
        }
        if (cpd.child_card != cardinality(node)) fail(ErrorKind::Schema, "cpd of " + cpd.child + " has wrong cardinality");
        cpd.validate();
        cpds_[node] = std::move(cpd);
    }
}

double BayesianNetwork::conditional(std::size_t node, std::span<const int> assignment) const {
    const auto& cpd = cpds_[node];
    const auto& pa = dag_.parents(node);
    std::size_t r = 0;
    for (std::size_t j = 0; j < pa.size(); ++j)
        r = r * static_cast<std::size_t>(cpd.parent_cards[j]) + static_cast<std::size_t>(assignment[pa[j]]);
    return cpd.table[r * static_cast<std::size_t>(cpd.child_card) + static_cast<std::size_t>(assignment[node])];
}

BayesianNetwork BayesianNetwork::with_cpd(Cpd cpd) const {
    auto cpds = cpds_;
    auto node = dag_.index_of(cpd.child);
    if (cpds[node].parents != cpd.parents || cpds[node].parent_cards != cpd.parent_cards ||
        cpds[node].child_card != cpd.child_card)
        fail(ErrorKind::Schema, "replacement cpd for " + cpd.child + " changes its shape");
    cpds[node] = std::move(cpd);
    return BayesianNetwork(specs_, dag_, std::move(cpds));
}

namespace {

void check_assignment(const BayesianNetwork& bn, std::span<const int> assignment) {
    if (assignment.size() != bn.size())
        fail(ErrorKind::Parameter, "assignment covers " + std::to_string(assignment.size()) + " of " +
                                       std::to_string(bn.size()) + " nodes");
    for (std::size_t i = 0; i < bn.size(); ++i)
        if (assignment[i] < 0 || assignment[i] >= bn.cardinality(i))
            fail(ErrorKind::Parameter, "invalid state for " + bn.specs()[i].name);
}

}  // namespace

double log_factorized_joint(const BayesianNetwork& bn, std::span<const int> assignment) {
    check_assignment(bn, assignment);
    double lp = 0.0;
    for (std::size_t i = 0; i < bn.size(); ++i) {
        const double p = bn.conditional(i, assignment);
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        lp += std::log(p);
    }
    return lp;
}

double factorized_joint(const BayesianNetwork& bn, std::span<const int> assignment) {
    return std::exp(log_factorized_joint(bn, assignment));
}

Cpd uniform_cpd(std::string child, std::vector<std::string> parents, int child_card, std::vector<int> parent_cards) {
    Cpd cpd{std::move(child), std::move(parents), child_card, std::move(parent_cards), {}};
    cpd.table.assign(cpd.rows() * static_cast<std::size_t>(child_card), 1.0 / child_card);
    return cpd;
}

std::vector<double> estimate_table(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents,
                                   double alpha) {
    auto counts = count_family(data, child, parents);
    const std::size_t r = counts.child_states;
    std::vector<double> table(counts.counts.size());
    for (std::size_t q = 0; q < counts.parent_configs; ++q) {
        const double total = static_cast<double>(counts.config_total(q)) + alpha * static_cast<double>(r);
        for (std::size_t s = 0; s < r; ++s)
            table[q * r + s] = total > 0.0 ? (static_cast<double>(counts.at(q, s)) + alpha) / total
                                           : 1.0 / static_cast<double>(r);
    }
    return table;
}

BayesianNetwork estimate_cpds(const Dag& dag, const DiscreteDataset& data, double alpha) {
    if (alpha < 0.0) fail(ErrorKind::Parameter, "pseudo-count must be non-negative");

    // Re-index the graph in dataset column order so parent order is canonical.
    std::vector<std::pair<std::size_t, std::string>> order;
    for (const auto& n : dag.nodes()) order.emplace_back(data.index_of(n), n);
    std::sort(order.begin(), order.end());
    std::vector<std::string> names;
    for (auto& [_, n] : order) names.push_back(n);
    Dag canon(names);
    for (const auto& [u, v] : dag.named_edges()) canon.add_edge(u, v);

    std::vector<VariableSpec> specs;
    std::vector<Cpd> cpds;
    for (std::size_t node = 0; node < canon.size(); ++node) {
        const auto child_col = data.index_of(canon.nodes()[node]);
        specs.push_back(data.specs()[child_col]);
        std::vector<std::size_t> parent_cols;
        Cpd cpd;
        cpd.child = canon.nodes()[node];
        cpd.child_card = data.cardinality(child_col);
        for (auto p : canon.parents(node)) {
            parent_cols.push_back(data.index_of(canon.nodes()[p]));
            cpd.parents.push_back(canon.nodes()[p]);
            cpd.parent_cards.push_back(data.cardinality(parent_cols.back()));
        }
        cpd.table = estimate_table(data, child_col, parent_cols, alpha);
        cpds.push_back(std::move(cpd));
    }
    return BayesianNetwork(std::move(specs), std::move(canon), std::move(cpds));
}

nlohmann::json model_to_json(const BayesianNetwork& bn) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& s : bn.specs()) vars.push_back(to_json(s));
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [u, v] : bn.dag().named_edges()) edges.push_back({u, v});
    nlohmann::json cpds = nlohmann::json::array();
    for (const auto& c : bn.cpds()) cpds.push_back({{"child", c.child}, {"parents", c.parents}, {"table", c.table}});
    return {{"schema_version", kModelSchemaVersion}, {"variables", vars}, {"edges", edges}, {"cpds", cpds}};
}

BayesianNetwork model_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion)
            fail(ErrorKind::FormatVersion, "model schema version " + std::to_string(version) + " is not supported (expected " +
                                               std::to_string(kModelSchemaVersion) + ")");
        std::vector<VariableSpec> specs;
        std::vector<std::string> names;
        for (const auto& v : j.at("variables")) {
            specs.push_back(variable_spec_from_json(v));
            names.push_back(specs.back().name);
        }
        Dag dag(names);
        for (const auto& e : j.at("edges")) dag.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        std::vector<Cpd> cpds;
        for (const auto& c : j.at("cpds")) {
            Cpd cpd;
            cpd.child = c.at("child").get<std::string>();
            cpd.parents = c.at("parents").get<std::vector<std::string>>();
            cpd.child_card = static_cast<int>(specs.at(dag.index_of(cpd.child)).states.size());
            for (const auto& p : cpd.parents)
                cpd.parent_cards.push_back(static_cast<int>(specs.at(dag.index_of(p)).states.size()));
            cpd.table = c.at("table").get<std::vector<double>>();
            cpds.push_back(std::move(cpd));
        }
        return BayesianNetwork(std::move(specs), std::move(dag), std::move(cpds));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model: ") + e.what());
    }
}

std::string save_model(const BayesianNetwork& bn) { return model_to_json(bn).dump(2); }

BayesianNetwork load_model(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, bytes.size()); ++i)
            if (bytes[i] == '\n') ++line;
        throw ParseError(std::string("model is not valid JSON: ") + e.what(), line);
    }
    return model_from_json(j);
}

}  // namespace ranbn
