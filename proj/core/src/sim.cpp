#include "ranbn/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return seed ^ (kGolden * (stream + 1)); }

int sample_state(std::span<const double> row, double u) {
    double acc = 0.0;
    for (std::size_t s = 0; s < row.size(); ++s) {
        acc += row[s];
        if (u < acc) return static_cast<int>(s);
    }
    // Rounding left u above the cumulative sum; take the last state with mass.
    for (std::size_t s = row.size(); s-- > 0;)
        if (row[s] > 0.0) return static_cast<int>(s);
    return 0;
}

class Sampler {
public:
    explicit Sampler(const BayesianNetwork& world) : world_(world), order_(world.dag().topological_order()) {}

    void sample(std::span<const int> pinned, std::mt19937_64& rng, std::span<int> out) const {
        for (auto v : order_) {
            if (pinned[v] >= 0) {
                out[v] = pinned[v];
                continue;
            }
            const auto& cpd = world_.cpd(v);
            const auto& pa = world_.dag().parents(v);
            std::size_t r = 0;
            for (std::size_t j = 0; j < pa.size(); ++j)
                r = r * static_cast<std::size_t>(cpd.parent_cards[j]) + static_cast<std::size_t>(out[pa[j]]);
            out[v] = sample_state(cpd.row(r), unit_uniform(rng));
        }
    }

private:
    const BayesianNetwork& world_;
    std::vector<std::size_t> order_;
};

std::vector<int> pinned_vector(const BayesianNetwork& world, const Evidence& pinned) {
    validate_evidence(world, pinned);
    std::vector<int> out(world.size(), -1);
    for (const auto& [name, state] : pinned) {
        auto node = world.index_of(name);
        if (world.specs()[node].role != Role::Config)
            fail(ErrorKind::Parameter, "only configuration variables can be pinned; '" + name + "' is not one");
        out[node] = state;
    }
    return out;
}

Evidence config_evidence(const ConfigurationSpace& omega, const std::vector<int>& config) {
    Evidence e;
    for (std::size_t i = 0; i < omega.variables.size(); ++i) e[omega.variables[i]] = config[i];
    return e;
}

std::optional<double> parse_number(const std::string& text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

ThresholdRule::Op parse_op(const std::string& op) {
    if (op == "<=") return ThresholdRule::Op::Le;
    if (op == ">=") return ThresholdRule::Op::Ge;
    if (op == "==" || op == "=") return ThresholdRule::Op::Eq;
    fail(ErrorKind::Parameter, "unknown rule operator '" + op + "'");
}

const char* op_text(ThresholdRule::Op op) {
    switch (op) {
        case ThresholdRule::Op::Le: return "<=";
        case ThresholdRule::Op::Ge: return ">=";
        case ThresholdRule::Op::Eq: return "==";
    }
    return "==";
}

int state_index(const VariableSpec& spec, const nlohmann::json& j) {
    if (j.is_number_integer()) {
        const int s = j.get<int>();
        if (s < 0 || s >= static_cast<int>(spec.cardinality()))
            fail(ErrorKind::UnknownState, "state " + std::to_string(s) + " out of range for " + spec.name);
        return s;
    }
    const auto label = j.get<std::string>();
    auto it = std::find(spec.states.begin(), spec.states.end(), label);
    if (it == spec.states.end()) fail(ErrorKind::UnknownState, "'" + label + "' is not a state of " + spec.name);
    return static_cast<int>(it - spec.states.begin());
}

std::size_t active_context_index(const std::vector<ContextSwitch>& schedule, std::size_t cycle) {
    std::size_t best = schedule.size();
    for (std::size_t i = 0; i < schedule.size(); ++i)
        if (schedule[i].cycle <= cycle && (best == schedule.size() || schedule[i].cycle >= schedule[best].cycle))
            best = i;
    return best;
}

}  // namespace

void GroundTruthSpec::validate() const {
    for (const auto& ctx : contexts) (void)apply_context(world, ctx);
}

const ContextProfile& GroundTruthSpec::context(std::string_view name) const {
    for (const auto& c : contexts)
        if (c.name == name) return c;
    fail(ErrorKind::Parameter, "unknown context '" + std::string(name) + "'");
}

BayesianNetwork GroundTruthSpec::in_context(std::string_view name) const {
    if (name.empty()) return world;
    return apply_context(world, context(name));
}

BayesianNetwork apply_context(const BayesianNetwork& world, const ContextProfile& context) {
    BayesianNetwork out = world;
    for (const auto& cpd : context.overrides) {
        if (!world.dag().find(cpd.child))
            fail(ErrorKind::Schema, "context '" + context.name + "' overrides unknown node " + cpd.child);
        const auto& base = world.cpd(cpd.child);
        if (cpd.parents != base.parents || cpd.parent_cards != base.parent_cards || cpd.child_card != base.child_card)
            fail(ErrorKind::Schema, "context '" + context.name + "' changes the shape of " + cpd.child);
        cpd.validate();
        out = out.with_cpd(cpd);
    }
    return out;
}

DiscreteDataset forward_sample(const BayesianNetwork& world, const Evidence& pinned, std::size_t n, std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::Parameter, "sample count must be >= 1");
    const auto pins = pinned_vector(world, pinned);
    Sampler sampler(world);
    std::mt19937_64 rng(seed);
    std::vector<int> cells(n * world.size());
    for (std::size_t r = 0; r < n; ++r)
        sampler.sample(pins, rng, std::span<int>(cells.data() + r * world.size(), world.size()));
    return DiscreteDataset(world.specs(), std::move(cells));
}

DiscreteDataset forward_sample_explore(const BayesianNetwork& world, const ConfigurationSpace& omega, std::size_t n,
                                       std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::Parameter, "sample count must be >= 1");
    omega.validate(world);
    std::vector<std::vector<int>> pins;
    for (const auto& a : omega.assignments) pins.push_back(pinned_vector(world, config_evidence(omega, a)));
    Sampler sampler(world);
    std::mt19937_64 rng(seed);
    std::vector<int> cells(n * world.size());
    for (std::size_t r = 0; r < n; ++r) {
        auto pick = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(pins.size()));
        pick = std::min(pick, pins.size() - 1);
        sampler.sample(pins[pick], rng, std::span<int>(cells.data() + r * world.size(), world.size()));
    }
    return DiscreteDataset(world.specs(), std::move(cells));
}

void RuleSet::validate() const {
    if (config_variables.size() != cardinalities.size() || config_variables.size() != default_config.size())
        fail(ErrorKind::Parameter, "rule set configuration shape is inconsistent");
    for (std::size_t i = 0; i < default_config.size(); ++i)
        if (default_config[i] < 0 || default_config[i] >= cardinalities[i])
            fail(ErrorKind::Parameter, "default configuration out of range for " + config_variables[i]);
    for (const auto& r : rules)
        if (std::find(config_variables.begin(), config_variables.end(), r.config) == config_variables.end())
            fail(ErrorKind::Parameter, "rule targets unknown configuration variable " + r.config);
}

RuleSet rules_from_json(const nlohmann::json& j, const BayesianNetwork& bn) {
    try {
        RuleSet rs;
        for (const auto& [name, value] : j.at("default").items()) {
            const auto& spec = bn.specs()[bn.index_of(name)];
            rs.config_variables.push_back(name);
            rs.cardinalities.push_back(static_cast<int>(spec.cardinality()));
            rs.default_config.push_back(state_index(spec, value));
        }
        for (const auto& r : j.at("rules")) {
            ThresholdRule rule;
            rule.measurement = r.at("measurement").get<std::string>();
            rule.op = parse_op(r.value("op", std::string("==")));
            rule.state = state_index(bn.specs()[bn.index_of(rule.measurement)], r.at("state"));
            rule.config = r.at("config").get<std::string>();
            rule.step = r.at("step").get<int>();
            rs.rules.push_back(std::move(rule));
        }
        rs.validate();
        return rs;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed rule file: ") + e.what());
    }
}

nlohmann::json rules_to_json(const RuleSet& rules, const BayesianNetwork& bn) {
    nlohmann::json def = nlohmann::json::object();
    for (std::size_t i = 0; i < rules.config_variables.size(); ++i)
        def[rules.config_variables[i]] =
            bn.specs()[bn.index_of(rules.config_variables[i])].states[static_cast<std::size_t>(rules.default_config[i])];
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : rules.rules)
        list.push_back({{"measurement", r.measurement},
                        {"op", op_text(r.op)},
                        {"state", bn.specs()[bn.index_of(r.measurement)].states[static_cast<std::size_t>(r.state)]},
                        {"config", r.config},
                        {"step", r.step}});
    return {{"default", def}, {"rules", list}};
}

std::vector<int> rule_based_recommend(const Evidence& measurements, const RuleSet& rules,
                                      const std::vector<int>& current) {
    rules.validate();
    if (current.size() != rules.config_variables.size())
        fail(ErrorKind::Parameter, "current configuration does not match the rule set");
    for (const auto& r : rules.rules) {
        auto it = measurements.find(r.measurement);
        if (it == measurements.end()) continue;
        const int s = it->second;
        const bool hit = r.op == ThresholdRule::Op::Le ? s <= r.state
                         : r.op == ThresholdRule::Op::Ge ? s >= r.state
                                                         : s == r.state;
        if (!hit) continue;
        auto out = current;
        const auto i = static_cast<std::size_t>(
            std::find(rules.config_variables.begin(), rules.config_variables.end(), r.config) -
            rules.config_variables.begin());
        out[i] = std::clamp(out[i] + r.step, 0, rules.cardinalities[i] - 1);
        return out;
    }
    return rules.default_config;
}

std::vector<int> greedy_recommend(const DiscreteDataset& history, const std::vector<std::string>& config_variables,
                                  const std::string& target, const std::vector<double>& target_values) {
    if (history.rows() == 0) fail(ErrorKind::Parameter, "greedy baseline needs a non-empty history");
    if (config_variables.empty()) fail(ErrorKind::Parameter, "greedy baseline needs configuration variables");
    std::vector<std::size_t> cols;
    for (const auto& v : config_variables) cols.push_back(history.index_of(v));
    const auto t = history.index_of(target);
    if (!target_values.empty() && target_values.size() != static_cast<std::size_t>(history.cardinality(t)))
        fail(ErrorKind::Parameter, "target values do not cover the states of " + target);

    std::map<std::vector<int>, std::pair<double, std::size_t>> groups;
    std::vector<int> key(cols.size());
    for (std::size_t r = 0; r < history.rows(); ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i) key[i] = history.at(r, cols[i]);
        const int s = history.at(r, t);
        auto& g = groups[key];
        g.first += target_values.empty() ? static_cast<double>(s) : target_values[static_cast<std::size_t>(s)];
        ++g.second;
    }
    const std::vector<int>* best = nullptr;
    double best_mean = 0.0;
    for (const auto& [config, g] : groups) {
        const double mean = g.first / static_cast<double>(g.second);
        if (!best || mean > best_mean + 1e-12 * std::max(1.0, std::abs(best_mean))) {
            best = &config;
            best_mean = mean;
        }
    }
    return *best;
}

std::vector<double> true_utilities(const BayesianNetwork& world, const ConfigurationSpace& omega,
                                   const UtilitySpec& util) {
    omega.validate(world);
    util.validate(world);
    std::vector<double> out;
    for (std::size_t i = 0; i < omega.assignments.size(); ++i)
        out.push_back(evaluate_candidate(world, omega, i, {}, util).score);
    return out;
}

double true_utility(const BayesianNetwork& world, const ConfigurationSpace& omega, const std::vector<int>& config,
                    const UtilitySpec& util) {
    ConfigurationSpace single{omega.variables, {config}};
    single.validate(world);
    return evaluate_candidate(world, single, 0, {}, util).score;
}

std::size_t true_optimum(const BayesianNetwork& world, const ConfigurationSpace& omega, const UtilitySpec& util) {
    const auto rec = recommend(world, omega, {}, util);
    return static_cast<std::size_t>(
        std::find(omega.assignments.begin(), omega.assignments.end(), rec.best.config) - omega.assignments.begin());
}

void LoopSettings::validate() const {
    if (warmup_samples == 0) fail(ErrorKind::Parameter, "warm-up needs at least one sample");
    if (batch_size == 0) fail(ErrorKind::Parameter, "batch size must be >= 1");
    if (!(exploration >= 0.0 && exploration <= 1.0)) fail(ErrorKind::Parameter, "exploration share must lie in [0, 1]");
    update.validate();
    score.validate();
}

LoopLog run_closed_loop(const GroundTruthSpec& world, const std::vector<ContextSwitch>& schedule,
                        const LoopSettings& settings, std::size_t cycles, std::uint64_t seed) {
    if (cycles == 0) fail(ErrorKind::Parameter, "the loop needs at least one cycle");
    settings.validate();
    world.validate();
    for (const auto& s : schedule)
        if (!s.context.empty()) (void)world.context(s.context);

    const auto& base = world.world;
    const auto omega = settings.omega.assignments.empty() ? full_grid(base) : settings.omega;
    omega.validate(base);
    const auto util = settings.utility.kpis.empty() ? default_utility(base) : settings.utility;
    util.validate(base);

    auto context_at = [&](std::size_t cycle) {
        auto i = active_context_index(schedule, cycle);
        return i == schedule.size() ? std::string() : schedule[i].context;
    };
    const std::size_t window = settings.relearn_window > 0 ? settings.relearn_window : settings.warmup_samples;

    LoopLog log;
    log.config_variables = omega.variables;

    auto truth = world.in_context(context_at(0));
    auto all_data = forward_sample_explore(truth, omega, settings.warmup_samples, stream_seed(seed, 0));
    auto model = full_relearn(all_data, settings.delta, settings.score, settings.search, settings.model_alpha);
    std::size_t training_size = all_data.rows();
    std::size_t accumulated = 0;
    std::size_t version = 0;
    auto rec = recommend(model, omega, {}, util);
    log.warmup_recommendation = rec.best.config;
    auto applied = rec.best.config;

    UpdateParams update = settings.update;
    update.alpha = settings.model_alpha;
    const auto n_explore = static_cast<std::size_t>(std::llround(settings.exploration * static_cast<double>(settings.batch_size)));
    const auto n_exploit = settings.batch_size - n_explore;

    for (std::size_t c = 0; c < cycles; ++c) {
        LoopRecord record;
        record.cycle = c;
        record.context = context_at(c);
        record.applied_config = applied;
        truth = world.in_context(record.context);

        DiscreteDataset batch;
        std::optional<DiscreteDataset> exploit;
        if (n_exploit > 0)
            exploit = forward_sample(truth, config_evidence(omega, applied), n_exploit, stream_seed(seed, 2 * c + 1));
        if (n_explore > 0) {
            auto explore = forward_sample_explore(truth, omega, n_explore, stream_seed(seed, 2 * c + 2));
            batch = exploit ? exploit->append(explore) : std::move(explore);
        } else {
            batch = *exploit;
        }
        record.batch_rows = batch.rows();
        if (exploit) {
            for (const auto& k : util.kpis) {
                const auto col = exploit->index_of(k.kpi);
                double sum = 0.0;
                for (std::size_t r = 0; r < exploit->rows(); ++r) sum += exploit->at(r, col);
                record.kpi_means.emplace_back(k.kpi, sum / static_cast<double>(exploit->rows()));
            }
        }

        all_data = all_data.append(batch);
        accumulated += batch.rows();
        if (should_relearn(accumulated, training_size, update)) {
            auto recent = all_data.tail(std::min(window, all_data.rows()));
            model = full_relearn(recent, settings.delta, settings.score, settings.search, settings.model_alpha);
            training_size = recent.rows();
            accumulated = 0;
            record.relearned = true;
        } else {
            model = incremental_update(model, batch, update).model;
        }
        record.model_version = ++version;

        rec = recommend(model, omega, {}, util);
        record.recommendation = rec.best.config;
        record.score = rec.best.score;
        record.uncertainty = rec.best.uncertainty;
        record.applied_true_utility = true_utility(truth, omega, applied, util);
        record.true_optimal_config = omega.assignments[true_optimum(truth, omega, util)];
        log.records.push_back(std::move(record));
        applied = rec.best.config;
    }
    return log;
}

nlohmann::json loop_record_to_json(const LoopLog& log, const LoopRecord& record, const BayesianNetwork& world) {
    auto labels = [&](const std::vector<int>& config) {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t i = 0; i < log.config_variables.size(); ++i)
            j[log.config_variables[i]] =
                world.specs()[world.index_of(log.config_variables[i])].states[static_cast<std::size_t>(config[i])];
        return j;
    };
    nlohmann::json means = nlohmann::json::object();
    for (const auto& [k, v] : record.kpi_means) means[k] = v;
    return {{"cycle", record.cycle},
            {"context", record.context},
            {"applied_config", labels(record.applied_config)},
            {"batch", {{"rows", record.batch_rows}, {"kpi_mean_state", means}}},
            {"model_version", record.model_version},
            {"relearned", record.relearned},
            {"recommendation", labels(record.recommendation)},
            {"score", record.score},
            {"confidence", record.uncertainty.confidence},
            {"entropy", record.uncertainty.entropy},
            {"applied_true_utility", record.applied_true_utility},
            {"true_optimal_config", labels(record.true_optimal_config)}};
}

std::string loop_log_to_jsonl(const LoopLog& log, const BayesianNetwork& world) {
    std::string out;
    for (const auto& r : log.records) out += loop_record_to_json(log, r, world).dump() + "\n";
    return out;
}

nlohmann::json world_to_json(const GroundTruthSpec& world) {
    auto j = model_to_json(world.world);
    nlohmann::json contexts = nlohmann::json::array();
    for (const auto& c : world.contexts) {
        nlohmann::json overrides = nlohmann::json::array();
        for (const auto& cpd : c.overrides)
            overrides.push_back({{"child", cpd.child}, {"parents", cpd.parents}, {"table", cpd.table}});
        contexts.push_back({{"name", c.name}, {"description", c.description}, {"overrides", overrides}});
    }
    j["contexts"] = contexts;
    return j;
}

GroundTruthSpec world_from_json(const nlohmann::json& j) {
    GroundTruthSpec world;
    world.world = model_from_json(j);
    try {
        if (j.contains("contexts")) {
            for (const auto& c : j.at("contexts")) {
                ContextProfile ctx;
                ctx.name = c.at("name").get<std::string>();
                ctx.description = c.value("description", std::string());
                for (const auto& o : c.at("overrides")) {
                    Cpd cpd = world.world.cpd(o.at("child").get<std::string>());
                    cpd.parents = o.at("parents").get<std::vector<std::string>>();
                    cpd.table = o.at("table").get<std::vector<double>>();
                    ctx.overrides.push_back(std::move(cpd));
                }
                world.contexts.push_back(std::move(ctx));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed world contexts: ") + e.what());
    }
    world.validate();
    return world;
}

std::vector<double> state_values(const VariableSpec& spec) {
    std::vector<double> out;
    for (const auto& s : spec.states) {
        auto v = parse_number(s);
        if (!v) {
            out.clear();
            for (std::size_t i = 0; i < spec.states.size(); ++i) out.push_back(static_cast<double>(i));
            return out;
        }
        out.push_back(*v);
    }
    return out;
}

std::vector<VariableSpec> csv_schema(const DiscreteDataset& data) {
    std::vector<VariableSpec> out;
    for (const auto& spec : data.specs()) {
        VariableSpec s = spec;
        s.kind = Kind::Discrete;
        s.bins = 0;
        const auto values = state_values(spec);
        s.states.clear();
        for (double v : values) {
            std::ostringstream os;
            os << v;
            s.states.push_back(os.str());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string dataset_to_csv(const DiscreteDataset& data) {
    std::vector<std::vector<double>> values;
    for (const auto& spec : data.specs()) values.push_back(state_values(spec));
    std::ostringstream out;
    const auto names = data.names();
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c)
            out << (c ? "," : "") << values[c][static_cast<std::size_t>(data.at(r, c))];
        out << '\n';
    }
    return out.str();
}

}  // namespace ranbn
