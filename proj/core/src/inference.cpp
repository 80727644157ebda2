#include "ranbn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <optional>
#include <set>

#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

constexpr double kTieTolerance = 1e-12;

bool scores_tie(double a, double b) { return std::abs(a - b) <= kTieTolerance * std::max(1.0, std::abs(a)); }

// Table over a sorted set of variables, last variable fastest.
struct Factor {
    std::vector<std::size_t> vars;
    std::vector<int> cards;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

std::size_t product(std::span<const int> cards) {
    std::size_t n = 1;
    for (int c : cards) n *= static_cast<std::size_t>(c);
    return n;
}

// Advances a mixed-radix counter (last digit fastest); false on wrap-around.
bool next_assignment(std::vector<int>& digits, std::span<const int> cards) {
    for (std::size_t i = digits.size(); i-- > 0;) {
        if (++digits[i] < cards[i]) return true;
        digits[i] = 0;
    }
    return false;
}

Factor cpd_factor(const BayesianNetwork& bn, std::size_t node) {
    const auto& pa = bn.dag().parents(node);
    Factor f;
    f.vars.assign(pa.begin(), pa.end());
    f.vars.push_back(node);
    std::sort(f.vars.begin(), f.vars.end());
    for (auto v : f.vars) f.cards.push_back(bn.cardinality(v));
    f.values.resize(product(f.cards));
    std::vector<int> full(bn.size(), 0);
    std::vector<int> digits(f.vars.size(), 0);
    std::size_t i = 0;
    do {
        for (std::size_t k = 0; k < f.vars.size(); ++k) full[f.vars[k]] = digits[k];
        f.values[i++] = bn.conditional(node, full);
    } while (next_assignment(digits, f.cards));
    return f;
}

Factor reduce(const Factor& f, std::size_t var, int state) {
    auto pos = static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
    if (pos == f.vars.size()) return f;
    Factor out;
    for (std::size_t k = 0; k < f.vars.size(); ++k)
        if (k != pos) {
            out.vars.push_back(f.vars[k]);
            out.cards.push_back(f.cards[k]);
        }
    out.values.reserve(product(out.cards));
    std::vector<int> digits(f.vars.size(), 0);
    std::size_t i = 0;
    do {
        if (digits[pos] == state) out.values.push_back(f.values[i]);
        ++i;
    } while (next_assignment(digits, f.cards));
    return out;
}

Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
    for (std::size_t k = 0; k < out.vars.size(); ++k) {
        const auto v = out.vars[k];
        auto ia = std::find(a.vars.begin(), a.vars.end(), v);
        auto ib = std::find(b.vars.begin(), b.vars.end(), v);
        out.cards.push_back(ia != a.vars.end() ? a.cards[ia - a.vars.begin()] : b.cards[ib - b.vars.begin()]);
    }
    // Strides of a and b expressed per output digit (0 when absent).
    auto strides_for = [&](const Factor& f) {
        std::vector<std::size_t> s(out.vars.size(), 0);
        std::size_t stride = 1;
        for (std::size_t k = f.vars.size(); k-- > 0;) {
            auto it = std::find(out.vars.begin(), out.vars.end(), f.vars[k]);
            s[static_cast<std::size_t>(it - out.vars.begin())] = stride;
            stride *= static_cast<std::size_t>(f.cards[k]);
        }
        return s;
    };
    const auto sa = strides_for(a);
    const auto sb = strides_for(b);
    out.values.resize(product(out.cards));
    std::vector<int> digits(out.vars.size(), 0);
    std::size_t i = 0;
    do {
        std::size_t ia = 0, ib = 0;
        for (std::size_t k = 0; k < digits.size(); ++k) {
            ia += sa[k] * static_cast<std::size_t>(digits[k]);
            ib += sb[k] * static_cast<std::size_t>(digits[k]);
        }
        out.values[i++] = a.values[ia] * b.values[ib];
    } while (next_assignment(digits, out.cards));
    return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
    auto pos = static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
    Factor out;
    for (std::size_t k = 0; k < f.vars.size(); ++k)
        if (k != pos) {
            out.vars.push_back(f.vars[k]);
            out.cards.push_back(f.cards[k]);
        }
    out.values.assign(product(out.cards), 0.0);
    std::vector<int> digits(f.vars.size(), 0);
    std::size_t i = 0;
    do {
        std::size_t o = 0;
        for (std::size_t k = 0; k < digits.size(); ++k)
            if (k != pos) o = o * static_cast<std::size_t>(f.cards[k]) + static_cast<std::size_t>(digits[k]);
        out.values[o] += f.values[i++];
    } while (next_assignment(digits, f.cards));
    return out;
}

Posterior normalized(std::string name, std::vector<double> weights) {
    const double z = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(z > 0.0)) fail(ErrorKind::ZeroEvidence, "evidence has probability zero");
    for (auto& w : weights) w /= z;
    return {std::move(name), std::move(weights)};
}

Posterior point_mass(const BayesianNetwork& bn, std::size_t node, int state) {
    std::vector<double> p(static_cast<std::size_t>(bn.cardinality(node)), 0.0);
    p[static_cast<std::size_t>(state)] = 1.0;
    return {bn.dag().nodes()[node], std::move(p)};
}

std::vector<std::size_t> ancestral_closure(const Dag& dag, std::vector<std::size_t> seeds) {
    std::vector<char> seen(dag.size(), 0);
    std::vector<std::size_t> stack = std::move(seeds);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = 1;
        for (auto p : dag.parents(v)) stack.push_back(p);
    }
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < dag.size(); ++v)
        if (seen[v]) out.push_back(v);
    return out;
}

}  // namespace

void validate_evidence(const BayesianNetwork& bn, const Evidence& evidence) {
    for (const auto& [name, state] : evidence) {
        auto node = bn.dag().find(name);
        if (!node) fail(ErrorKind::Parameter, "evidence names unknown variable '" + name + "'");
        if (state < 0 || state >= bn.cardinality(*node))
            fail(ErrorKind::UnknownState, "evidence state " + std::to_string(state) + " out of range for " + name);
    }
}

Posterior enumerate_posterior(const BayesianNetwork& bn, std::string_view query, const Evidence& evidence,
                              std::size_t limit) {
    validate_evidence(bn, evidence);
    const auto q = bn.index_of(query);
    std::vector<int> cards;
    std::size_t joint = 1;
    for (std::size_t v = 0; v < bn.size(); ++v) {
        cards.push_back(bn.cardinality(v));
        joint *= static_cast<std::size_t>(cards.back());
        if (joint > limit)
            fail(ErrorKind::Parameter, "joint state space too large to enumerate (limit " + std::to_string(limit) + ")");
    }
    std::vector<int> fixed(bn.size(), -1);
    for (const auto& [name, state] : evidence) fixed[bn.index_of(name)] = state;

    std::vector<double> weights(static_cast<std::size_t>(cards[q]), 0.0);
    std::vector<int> digits(bn.size(), 0);
    do {
        bool consistent = true;
        for (std::size_t v = 0; v < bn.size() && consistent; ++v)
            consistent = fixed[v] < 0 || fixed[v] == digits[v];
        if (consistent) weights[static_cast<std::size_t>(digits[q])] += factorized_joint(bn, digits);
    } while (next_assignment(digits, cards));
    return normalized(std::string(query), std::move(weights));
}

std::vector<std::size_t> min_fill_order(const BayesianNetwork& bn, std::span<const std::size_t> relevant,
                                        std::span<const std::size_t> hidden) {
    const std::size_t n = bn.size();
    std::vector<std::set<std::size_t>> nb(n);
    std::vector<char> in(n, 0);
    for (auto v : relevant) in[v] = 1;
    // Moral graph of the relevant sub-network.
    for (auto v : relevant) {
        const auto& pa = bn.dag().parents(v);
        for (auto p : pa) {
            nb[v].insert(p);
            nb[p].insert(v);
        }
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = i + 1; j < pa.size(); ++j) {
                nb[pa[i]].insert(pa[j]);
                nb[pa[j]].insert(pa[i]);
            }
    }
    std::set<std::size_t> remaining(hidden.begin(), hidden.end());
    std::vector<std::size_t> order;
    while (!remaining.empty()) {
        std::size_t best = *remaining.begin();
        std::size_t best_fill = std::numeric_limits<std::size_t>::max();
        for (auto v : remaining) {
            std::size_t fill = 0;
            for (auto a = nb[v].begin(); a != nb[v].end(); ++a)
                for (auto b = std::next(a); b != nb[v].end(); ++b)
                    if (!nb[*a].count(*b)) ++fill;
            if (fill < best_fill) {
                best_fill = fill;
                best = v;
            }
        }
        for (auto a : nb[best])
            for (auto b : nb[best])
                if (a != b) nb[a].insert(b);
        for (auto a : nb[best]) nb[a].erase(best);
        nb[best].clear();
        remaining.erase(best);
        order.push_back(best);
    }
    return order;
}

Posterior eliminate(const BayesianNetwork& bn, std::string_view query, const Evidence& evidence) {
    validate_evidence(bn, evidence);
    const auto q = bn.index_of(query);
    if (auto it = evidence.find(std::string(query)); it != evidence.end()) return point_mass(bn, q, it->second);

    std::vector<std::size_t> seeds{q};
    for (const auto& [name, state] : evidence) seeds.push_back(bn.index_of(name));
    // Nodes outside the ancestral set of query and evidence are barren.
    const auto relevant = ancestral_closure(bn.dag(), seeds);

    std::vector<Factor> factors;
    for (auto v : relevant) {
        auto f = cpd_factor(bn, v);
        for (const auto& [name, state] : evidence) f = reduce(f, bn.index_of(name), state);
        factors.push_back(std::move(f));
    }
    std::vector<std::size_t> hidden;
    for (auto v : relevant)
        if (v != q && !evidence.count(bn.dag().nodes()[v])) hidden.push_back(v);

    for (auto var : min_fill_order(bn, relevant, hidden)) {
        std::vector<Factor> keep;
        std::optional<Factor> merged;
        for (auto& f : factors) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), var))
                merged = merged ? multiply(*merged, f) : std::move(f);
            else
                keep.push_back(std::move(f));
        }
        if (merged) keep.push_back(sum_out(*merged, var));
        factors = std::move(keep);
    }
    Factor result{{}, {}, {1.0}};
    for (const auto& f : factors) result = multiply(result, f);
    return normalized(std::string(query), std::move(result.values));
}

void UtilitySpec::validate(const BayesianNetwork& bn) const {
    if (kpis.empty()) fail(ErrorKind::Parameter, "utility spec lists no KPIs");
    bool positive = false;
    std::set<std::string> seen;
    for (const auto& k : kpis) {
        auto node = bn.dag().find(k.kpi);
        if (!node) fail(ErrorKind::Parameter, "utility names unknown KPI '" + k.kpi + "'");
        if (!seen.insert(k.kpi).second) fail(ErrorKind::Parameter, "utility lists KPI '" + k.kpi + "' twice");
        if (!(k.weight >= 0.0) || !std::isfinite(k.weight)) fail(ErrorKind::Parameter, "KPI weights must be finite and >= 0");
        if (k.utility.size() != static_cast<std::size_t>(bn.cardinality(*node)))
            fail(ErrorKind::Parameter, "utility table for '" + k.kpi + "' does not cover its states");
        positive = positive || k.weight > 0.0;
    }
    if (!positive) fail(ErrorKind::Parameter, "at least one KPI weight must be positive");
}

std::vector<double> default_utility_table(const VariableSpec& spec) {
    const auto k = spec.cardinality();
    std::vector<double> f(k, 0.0);
    if (k < 2 || spec.direction == Direction::Neutral) return f;
    const double sign = spec.direction == Direction::Benefit ? 1.0 : -1.0;
    for (std::size_t s = 0; s < k; ++s) f[s] = sign * static_cast<double>(s) / static_cast<double>(k - 1);
    return f;
}

UtilitySpec default_utility(const BayesianNetwork& bn) {
    UtilitySpec u;
    for (const auto& spec : bn.specs())
        if (spec.role == Role::Kpi && spec.direction != Direction::Neutral)
            u.kpis.push_back({spec.name, 1.0, default_utility_table(spec)});
    return u;
}

UtilitySpec utility_from_json(const nlohmann::json& j, const BayesianNetwork& bn) {
    if (!j.is_array()) fail(ErrorKind::Parameter, "utility spec must be an array of {kpi, weight, direction}");
    UtilitySpec u;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("kpi")) fail(ErrorKind::Parameter, "utility entry needs a 'kpi' field");
        KpiUtility k;
        k.kpi = item.at("kpi").get<std::string>();
        k.weight = item.value("weight", 1.0);
        auto node = bn.dag().find(k.kpi);
        if (!node) fail(ErrorKind::Parameter, "utility names unknown KPI '" + k.kpi + "'");
        if (item.contains("utility")) {
            k.utility = item.at("utility").get<std::vector<double>>();
        } else {
            auto spec = bn.specs()[*node];
            if (item.contains("direction")) spec.direction = parse_direction(item.at("direction").get<std::string>());
            k.utility = default_utility_table(spec);
        }
        u.kpis.push_back(std::move(k));
    }
    u.validate(bn);
    return u;
}

double expected_utility(const Posterior& posterior, std::span<const double> utility) {
    if (utility.size() != posterior.probabilities.size())
        fail(ErrorKind::Parameter, "utility table does not cover the states of " + posterior.variable);
    double e = 0.0;
    for (std::size_t s = 0; s < utility.size(); ++s) e += utility[s] * posterior.probabilities[s];
    return e;
}

Uncertainty confidence_entropy(std::span<const Posterior> posteriors) {
    if (posteriors.empty()) fail(ErrorKind::Parameter, "confidence/entropy need at least one posterior");
    Uncertainty u;
    for (const auto& p : posteriors) {
        u.confidence += *std::max_element(p.probabilities.begin(), p.probabilities.end());
        double h = 0.0;
        for (double x : p.probabilities)
            if (x > 0.0) h -= x * std::log(x);
        const auto k = p.probabilities.size();
        if (k > 1) u.entropy += h / std::log(static_cast<double>(k));
    }
    const double n = static_cast<double>(posteriors.size());
    u.confidence = std::clamp(u.confidence / n, 0.0, 1.0);
    u.entropy = std::clamp(u.entropy / n, 0.0, 1.0);
    return u;
}

void ConfigurationSpace::validate(const BayesianNetwork& bn) const {
    if (assignments.empty()) fail(ErrorKind::Parameter, "configuration space is empty");
    if (variables.empty()) fail(ErrorKind::Parameter, "configuration space has no variables");
    std::vector<std::size_t> nodes;
    for (const auto& v : variables) {
        auto node = bn.dag().find(v);
        if (!node) fail(ErrorKind::Parameter, "configuration variable '" + v + "' is not in the model");
        nodes.push_back(*node);
    }
    if (std::set<std::string>(variables.begin(), variables.end()).size() != variables.size())
        fail(ErrorKind::Parameter, "configuration variables repeat");
    std::set<std::vector<int>> seen;
    for (const auto& a : assignments) {
        if (a.size() != variables.size()) fail(ErrorKind::Parameter, "configuration does not assign every variable");
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] < 0 || a[i] >= bn.cardinality(nodes[i]))
                fail(ErrorKind::UnknownState, "configuration state out of range for " + variables[i]);
        if (!seen.insert(a).second) fail(ErrorKind::Parameter, "configuration space contains duplicates");
    }
}

ConfigurationSpace full_grid(const BayesianNetwork& bn, std::span<const std::string> variables) {
    ConfigurationSpace omega;
    omega.variables.assign(variables.begin(), variables.end());
    std::vector<int> cards;
    for (const auto& v : variables) cards.push_back(bn.cardinality(bn.index_of(v)));
    if (cards.empty()) return omega;
    std::vector<int> digits(cards.size(), 0);
    do {
        omega.assignments.push_back(digits);
    } while (next_assignment(digits, cards));
    return omega;
}

ConfigurationSpace full_grid(const BayesianNetwork& bn) {
    std::vector<std::string> configs;
    for (const auto& s : bn.specs())
        if (s.role == Role::Config) configs.push_back(s.name);
    return full_grid(bn, configs);
}

Candidate evaluate_candidate(const BayesianNetwork& bn, const ConfigurationSpace& omega, std::size_t index,
                             const Evidence& measurements, const UtilitySpec& util) {
    Evidence ev = measurements;
    for (std::size_t i = 0; i < omega.variables.size(); ++i) ev[omega.variables[i]] = omega.assignments[index][i];
    Candidate c;
    c.config = omega.assignments[index];
    std::vector<Posterior> posts;
    for (const auto& k : util.kpis) {
        KpiOutcome o{k.kpi, eliminate(bn, k.kpi, ev), 0.0};
        o.expected_utility = expected_utility(o.posterior, k.utility);
        c.score += k.weight * o.expected_utility;
        posts.push_back(o.posterior);
        c.per_kpi.push_back(std::move(o));
    }
    c.uncertainty = confidence_entropy(posts);
    return c;
}

Recommendation recommend(const BayesianNetwork& bn, const ConfigurationSpace& omega, const Evidence& measurements,
                         const UtilitySpec& util) {
    omega.validate(bn);
    util.validate(bn);
    validate_evidence(bn, measurements);
    for (const auto& v : omega.variables)
        if (measurements.count(v)) fail(ErrorKind::Parameter, "measurement evidence assigns configuration variable " + v);

    std::vector<Candidate> all;
    all.reserve(omega.assignments.size());
    for (std::size_t i = 0; i < omega.assignments.size(); ++i)
        all.push_back(evaluate_candidate(bn, omega, i, measurements, util));

    std::size_t best = 0;
    for (std::size_t i = 1; i < all.size(); ++i) {
        if (scores_tie(all[i].score, all[best].score)) {
            if (all[i].config < all[best].config) best = i;
        } else if (all[i].score > all[best].score) {
            best = i;
        }
    }
    Recommendation rec;
    rec.variables = omega.variables;
    rec.best = all[best];
    for (std::size_t i = 0; i < all.size(); ++i)
        if (i != best) rec.runners_up.push_back(std::move(all[i]));
    std::stable_sort(rec.runners_up.begin(), rec.runners_up.end(), [](const Candidate& a, const Candidate& b) {
        if (!scores_tie(a.score, b.score)) return a.score > b.score;
        if (a.uncertainty.entropy != b.uncertainty.entropy) return a.uncertainty.entropy < b.uncertainty.entropy;
        return a.config < b.config;
    });
    return rec;
}

nlohmann::json recommendation_to_json(const BayesianNetwork& bn, const Recommendation& rec) {
    auto config_json = [&](const std::vector<int>& config) {
        nlohmann::json c = nlohmann::json::object();
        for (std::size_t i = 0; i < rec.variables.size(); ++i)
            c[rec.variables[i]] = bn.specs()[bn.index_of(rec.variables[i])].states[static_cast<std::size_t>(config[i])];
        return c;
    };
    nlohmann::json per_kpi = nlohmann::json::array();
    for (const auto& o : rec.best.per_kpi)
        per_kpi.push_back({{"kpi", o.kpi}, {"posterior", o.posterior.probabilities}, {"expected_utility", o.expected_utility}});
    nlohmann::json runners = nlohmann::json::array();
    for (const auto& c : rec.runners_up)
        runners.push_back({{"config", config_json(c.config)},
                           {"score", c.score},
                           {"confidence", c.uncertainty.confidence},
                           {"entropy", c.uncertainty.entropy}});
    return {{"config", config_json(rec.best.config)},
            {"score", rec.best.score},
            {"per_kpi", per_kpi},
            {"confidence", rec.best.uncertainty.confidence},
            {"entropy", rec.best.uncertainty.entropy},
            {"runners_up", runners}};
}

}  // namespace ranbn
