#include <algorithm>
#include <cmath>
#include <functional>

#include "ranbn/errors.hpp"
#include "ranbn/sim.hpp"

namespace ranbn {

namespace {

using MeanFn = std::function<double(std::span<const int>)>;

VariableSpec config_var(std::string name, std::vector<std::string> states) {
    return {std::move(name), Role::Config, Kind::Discrete, std::move(states), Direction::Neutral, 0};
}

VariableSpec graded_var(std::string name, Role role, Direction direction = Direction::Neutral) {
    return {std::move(name), role, Kind::Continuous, bin_labels(3), direction, 0};
}

// P(s | parents) proportional to exp(-(s - mu)^2 / (2 sigma^2)), mu a function
// of the parent states.
Cpd graded_cpd(const std::vector<VariableSpec>& specs, const Dag& dag, const std::string& child, double sigma,
               const MeanFn& mean) {
    const auto node = dag.index_of(child);
    Cpd cpd;
    cpd.child = child;
    cpd.child_card = static_cast<int>(specs[node].cardinality());
    for (auto p : dag.parents(node)) {
        cpd.parents.push_back(dag.nodes()[p]);
        cpd.parent_cards.push_back(static_cast<int>(specs[p].cardinality()));
    }
    std::vector<int> digits(cpd.parents.size(), 0);
    for (std::size_t r = 0; r < cpd.rows(); ++r) {
        std::size_t rem = r;
        for (std::size_t k = digits.size(); k-- > 0;) {
            digits[k] = static_cast<int>(rem % static_cast<std::size_t>(cpd.parent_cards[k]));
            rem /= static_cast<std::size_t>(cpd.parent_cards[k]);
        }
        const double mu = mean(digits);
        double z = 0.0;
        std::vector<double> row(static_cast<std::size_t>(cpd.child_card));
        for (std::size_t s = 0; s < row.size(); ++s) {
            const double d = static_cast<double>(s) - mu;
            row[s] = std::exp(-d * d / (2.0 * sigma * sigma));
            z += row[s];
        }
        for (double p : row) cpd.table.push_back(p / z);
    }
    return cpd;
}

Cpd explicit_cpd(const std::vector<VariableSpec>& specs, const Dag& dag, const std::string& child,
                 std::vector<double> table) {
    const auto node = dag.index_of(child);
    Cpd cpd;
    cpd.child = child;
    cpd.child_card = static_cast<int>(specs[node].cardinality());
    for (auto p : dag.parents(node)) {
        cpd.parents.push_back(dag.nodes()[p]);
        cpd.parent_cards.push_back(static_cast<int>(specs[p].cardinality()));
    }
    cpd.table = std::move(table);
    return cpd;
}

constexpr const char* kP0 = "p0_nominal";
constexpr const char* kGamma = "pusch_TargetSNRx10";

// Target SNR grade implied by the configured target index.
double target_grade(int gamma) { return 0.2 + 0.6 * gamma; }

}  // namespace

GroundTruthSpec default_world() {
    std::vector<VariableSpec> specs = {
        config_var(kP0, {"-106", "-102", "-96", "-90", "-84"}),
        config_var(kGamma, {"12", "15", "20", "28"}),
        graded_var("RSRP", Role::Measurement),
        graded_var("UL_TxPower", Role::Measurement),
        graded_var("PHR", Role::Measurement),
        graded_var("SNR", Role::Measurement),
        graded_var("UL_MCS", Role::Measurement),
        graded_var("UL_BLER", Role::Kpi, Direction::Cost),
        graded_var("UL_Mbps", Role::Kpi, Direction::Benefit),
        graded_var("UL_Retx", Role::Kpi, Direction::Neutral),
    };
    std::vector<std::string> names;
    for (const auto& s : specs) names.push_back(s.name);
    Dag dag(names);
    for (auto [u, v] : std::vector<std::pair<const char*, const char*>>{
             {kP0, "RSRP"},         {kP0, "UL_TxPower"},   {kGamma, "UL_TxPower"}, {"UL_TxPower", "PHR"},
             {"RSRP", "SNR"},       {kGamma, "SNR"},       {"RSRP", "UL_MCS"},     {"SNR", "UL_MCS"},
             {"SNR", "UL_BLER"},    {kGamma, "UL_BLER"},   {"UL_MCS", "UL_BLER"},  {"UL_MCS", "UL_Mbps"},
             {"UL_BLER", "UL_Mbps"}, {"UL_BLER", "UL_Retx"}})
        dag.add_edge(u, v);

    // Parent digits follow dag parent order (node index order).
    auto rsrp_center = [](std::span<const int> p) { return 0.5 + 0.35 * p[0]; };
    auto rsrp_edge = [](std::span<const int> p) { return -0.4 + 0.3 * p[0]; };
    std::vector<Cpd> cpds;
    cpds.push_back(explicit_cpd(specs, dag, kP0, std::vector<double>(5, 0.2)));
    cpds.push_back(explicit_cpd(specs, dag, kGamma, std::vector<double>(4, 0.25)));
    cpds.push_back(graded_cpd(specs, dag, "RSRP", 0.6, rsrp_center));
    cpds.push_back(graded_cpd(specs, dag, "UL_TxPower", 0.55,
                              [](std::span<const int> p) { return 0.25 * p[0] + 0.3 * p[1] - 0.2; }));
    cpds.push_back(graded_cpd(specs, dag, "PHR", 0.5, [](std::span<const int> p) { return 2.0 - p[0]; }));
    // SNR: parents (gamma, RSRP). The target is reachable only with enough received power.
    cpds.push_back(graded_cpd(specs, dag, "SNR", 0.5, [](std::span<const int> p) {
        return std::min(0.9 * p[1] + 0.3, target_grade(p[0]));
    }));
    // UL_MCS: parents (RSRP, SNR).
    cpds.push_back(graded_cpd(specs, dag, "UL_MCS", 0.45, [](std::span<const int> p) { return 0.2 * p[0] + 0.8 * p[1]; }));
    // UL_BLER: parents (gamma, SNR, UL_MCS). Errors grow with the unmet target and with MCS above SNR.
    cpds.push_back(graded_cpd(specs, dag, "UL_BLER", 0.5, [](std::span<const int> p) {
        return 0.3 + 0.8 * std::max(0.0, target_grade(p[0]) - p[1]) + 0.45 * std::max(0, p[2] - p[1]);
    }));
    // UL_Mbps: parents (UL_MCS, UL_BLER).
    cpds.push_back(graded_cpd(specs, dag, "UL_Mbps", 0.5, [](std::span<const int> p) { return 0.2 + 0.9 * p[0] - 0.55 * p[1]; }));
    cpds.push_back(graded_cpd(specs, dag, "UL_Retx", 0.45, [](std::span<const int> p) { return 1.0 * p[0]; }));

    GroundTruthSpec world;
    world.world = BayesianNetwork(specs, dag, cpds);
    world.contexts.push_back({"cell_center", "users near the cell center: strong received power",
                              {graded_cpd(specs, dag, "RSRP", 0.6, rsrp_center)}});
    world.contexts.push_back({"cell_edge", "users at the cell edge: weak received power",
                              {graded_cpd(specs, dag, "RSRP", 0.6, rsrp_edge)}});
    world.validate();
    return world;
}

RuleSet default_rules(const BayesianNetwork& world) {
    RuleSet rs;
    rs.config_variables = {kP0, kGamma};
    rs.cardinalities = {world.cardinality(world.index_of(kP0)), world.cardinality(world.index_of(kGamma))};
    rs.default_config = {3, 0};  // -90 dBm, 12 dB
    rs.rules = {
        {"RSRP", ThresholdRule::Op::Eq, 0, kP0, +1},
        {"UL_BLER", ThresholdRule::Op::Eq, 2, kGamma, -1},
        {"PHR", ThresholdRule::Op::Eq, 0, kP0, -1},
    };
    rs.validate();
    return rs;
}

ConstraintSet default_partial_constraints() {
    ConstraintSet set;
    set.mandatory = {{kP0, "RSRP"},      {kP0, "UL_TxPower"},     {kGamma, "SNR"},
                     {"SNR", "UL_BLER"}, {"UL_MCS", "UL_Mbps"}, {"UL_BLER", "UL_Retx"}};
    // Configuration parameters are set by the operator, never caused by measurements.
    set.prohibited = {{"RSRP", kP0}, {"UL_TxPower", kP0}, {"SNR", kGamma}, {"UL_BLER", kGamma}};
    for (const auto& [u, v] : set.mandatory) set.provenance.push_back({ConstraintKind::Mandatory, u, v, "", 1});
    for (const auto& [u, v] : set.prohibited) set.provenance.push_back({ConstraintKind::Prohibited, u, v, "", 1});
    return set;
}

GroundTruthSpec variance_trap_world() {
    std::vector<VariableSpec> specs = {
        config_var(kP0, {"-96", "-90", "-84"}),
        graded_var("SNR", Role::Measurement),
        graded_var("UL_BLER", Role::Kpi, Direction::Cost),
        graded_var("UL_Mbps", Role::Kpi, Direction::Benefit),
    };
    Dag dag({kP0, "SNR", "UL_BLER", "UL_Mbps"});
    dag.add_edge(kP0, "SNR");
    dag.add_edge(kP0, "UL_BLER");
    dag.add_edge(kP0, "UL_Mbps");
    // -96: weak on both KPIs. -90: steady. -84: highest mean throughput, bimodal, error-prone.
    std::vector<Cpd> cpds = {
        explicit_cpd(specs, dag, kP0, {1.0 / 3, 1.0 / 3, 1.0 / 3}),
        explicit_cpd(specs, dag, "SNR", {0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.3, 0.6}),
        explicit_cpd(specs, dag, "UL_BLER", {0.5, 0.3, 0.2, 0.7, 0.25, 0.05, 0.3, 0.3, 0.4}),
        explicit_cpd(specs, dag, "UL_Mbps", {0.5, 0.4, 0.1, 0.1, 0.6, 0.3, 0.35, 0.02, 0.63}),
    };
    GroundTruthSpec world;
    world.world = BayesianNetwork(specs, dag, cpds);
    return world;
}

RuleSet variance_trap_rules(const BayesianNetwork& world) {
    RuleSet rs;
    rs.config_variables = {kP0};
    rs.cardinalities = {world.cardinality(world.index_of(kP0))};
    rs.default_config = {0};
    rs.rules = {{"SNR", ThresholdRule::Op::Eq, 0, kP0, +1}, {"UL_BLER", ThresholdRule::Op::Eq, 2, kP0, -1}};
    rs.validate();
    return rs;
}

GroundTruthSpec random_world(const RandomWorldParams& params, std::uint64_t seed) {
    if (params.nodes < 2 || params.config_nodes == 0 || params.config_nodes >= params.nodes)
        fail(ErrorKind::Parameter, "random world needs at least one config node and one other node");
    if (params.min_states < 2 || params.max_states < params.min_states)
        fail(ErrorKind::Parameter, "random world state range is invalid");
    std::mt19937_64 rng(seed);
    auto draw_int = [&](int lo, int hi) {
        auto v = lo + static_cast<int>(unit_uniform(rng) * static_cast<double>(hi - lo + 1));
        return std::min(v, hi);
    };

    const std::size_t kpi_count = std::max<std::size_t>(1, (params.nodes - params.config_nodes) / 4);
    std::vector<VariableSpec> specs;
    std::size_t omega = 1;
    for (std::size_t i = 0; i < params.nodes; ++i) {
        VariableSpec s;
        int card = draw_int(params.min_states, params.max_states);
        if (i < params.config_nodes) {
            s.name = "C" + std::to_string(i);
            s.role = Role::Config;
            s.kind = Kind::Discrete;
            if (params.max_omega > 0) {
                const auto others = params.config_nodes - i - 1;
                auto room = params.max_omega / omega;
                for (std::size_t k = 0; k < others; ++k) room /= static_cast<std::size_t>(params.min_states);
                card = std::clamp(card, 2, static_cast<int>(std::max<std::size_t>(2, room)));
            }
            omega *= static_cast<std::size_t>(card);
            for (int k = 0; k < card; ++k) s.states.push_back(std::to_string(k));
        } else {
            const bool kpi = i >= params.nodes - kpi_count;
            s.name = (kpi ? "K" : "M") + std::to_string(i);
            s.role = kpi ? Role::Kpi : Role::Measurement;
            s.kind = Kind::Continuous;
            s.direction = kpi ? ((i % 2) ? Direction::Cost : Direction::Benefit) : Direction::Neutral;
            s.states = bin_labels(static_cast<std::size_t>(card));
        }
        specs.push_back(std::move(s));
    }
    if (params.max_omega > 0 && omega > params.max_omega)
        fail(ErrorKind::Parameter, "random world cannot fit its configuration grid under max_omega");

    std::vector<std::string> names;
    for (const auto& s : specs) names.push_back(s.name);
    Dag dag(names);
    for (std::size_t v = params.config_nodes; v < params.nodes; ++v) {
        std::vector<std::size_t> candidates;
        for (std::size_t u = 0; u < v; ++u)
            if (unit_uniform(rng) < params.edge_probability) candidates.push_back(u);
        if (candidates.empty()) candidates.push_back(static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(v)));
        while (candidates.size() > params.max_parents) {
            const auto drop = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(candidates.size()));
            candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(std::min(drop, candidates.size() - 1)));
        }
        for (auto u : candidates) dag.add_edge(u, v);
    }

    std::vector<Cpd> cpds;
    for (std::size_t v = 0; v < params.nodes; ++v) {
        Cpd cpd;
        cpd.child = names[v];
        cpd.child_card = static_cast<int>(specs[v].cardinality());
        for (auto p : dag.parents(v)) {
            cpd.parents.push_back(names[p]);
            cpd.parent_cards.push_back(static_cast<int>(specs[p].cardinality()));
        }
        for (std::size_t r = 0; r < cpd.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(cpd.child_card));
            double z = 0.0;
            for (auto& x : row) {
                // Exponential draws normalise to a Dirichlet(1) row.
                x = -std::log1p(-unit_uniform(rng)) + 1e-6;
                z += x;
            }
            for (double x : row) cpd.table.push_back(x / z);
        }
        if (v < params.config_nodes) std::fill(cpd.table.begin(), cpd.table.end(), 1.0 / cpd.child_card);
        cpds.push_back(std::move(cpd));
    }
    GroundTruthSpec world;
    world.world = BayesianNetwork(specs, dag, cpds);
    return world;
}

}  // namespace ranbn
