#include "ranbn_cli/cli.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ranbn/adapt.hpp"
#include "ranbn/bn.hpp"
#include "ranbn/constraints.hpp"
#include "ranbn/eval.hpp"
#include "ranbn/inference.hpp"
#include "ranbn/llm_client.hpp"
#include "ranbn/scoring.hpp"
#include "ranbn/search.hpp"
#include "ranbn/sim.hpp"
#include "ranbn/telemetry.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ranbn::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json read_json(const fs::path& path) {
    const auto text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ParseError(path.string() + " is not valid JSON: " + e.what(), line);
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << content;
}

// Flags shared by every subcommand.
struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    bool profile = false;
    std::string out_dir;
};

// Effective settings: config file values overridden by command-line flags.
struct Context {
    Globals globals;
    json config = json::object();
    std::string command;
    fs::path run_dir;
    json echo = json::object();  // resolved inputs of this invocation

    json header() const {
        return {{"seed", globals.seed},
                {"config_hash", fnv1a_hex(echo.dump())},
                {"schema_version", kModelSchemaVersion},
                {"command", command}};
    }

    // Config section value, if present.
    std::optional<json> section(const std::string& key) const {
        if (config.contains(key)) return std::optional<json>(std::in_place, config.at(key));
        return std::nullopt;
    }

    template <typename T>
    T setting(const std::string& section_key, const std::string& key, T fallback) const {
        if (config.contains(section_key) && config.at(section_key).contains(key))
            return config.at(section_key).at(key).get<T>();
        return fallback;
    }

    std::string path_setting(const std::string& flag_value, const std::string& key) const {
        if (!flag_value.empty()) return flag_value;
        if (config.contains("paths") && config.at("paths").contains(key)) return config.at("paths").at(key).get<std::string>();
        if (config.contains(key) && config.at(key).is_string()) return config.at(key).get<std::string>();
        return {};
    }

    void write_json(const std::string& name, json j, bool with_header = true) const {
        if (with_header && j.is_object()) j["run"] = header();
        write_file(run_dir / name, j.dump(2) + "\n");
    }
};

fs::path make_run_dir(const Globals& g, const std::string& command) {
    fs::path dir;
    if (!g.out_dir.empty()) {
        dir = g.out_dir;
    } else {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::ostringstream name;
        name << command << '-' << std::put_time(&tm, "%Y%m%dT%H%M%S") << "-s" << g.seed;
        dir = fs::path("runs") / name.str();
        for (int i = 1; fs::exists(dir); ++i) dir = fs::path("runs") / (name.str() + "-" + std::to_string(i));
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create run directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::vector<VariableSpec> specs_from_json(const json& j) {
    const json& list = j.is_object() && j.contains("variables") ? j.at("variables") : j;
    if (!list.is_array()) fail(ErrorKind::Schema, "variable schema must be an array or {\"variables\": [...]}");
    std::vector<VariableSpec> specs;
    try {
        for (const auto& v : list) specs.push_back(variable_spec_from_json(v));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed variable schema: ") + e.what());
    }
    if (specs.empty()) fail(ErrorKind::Schema, "variable schema lists no variables");
    return specs;
}

std::vector<VariableSpec> load_specs(const Context& ctx, const std::string& flag) {
    if (!flag.empty()) return specs_from_json(read_json(flag));
    if (ctx.config.contains("variables")) return specs_from_json(ctx.config.at("variables"));
    if (auto p = ctx.path_setting("", "variables_file"); !p.empty()) return specs_from_json(read_json(p));
    fail(ErrorKind::Parameter, "no variable schema: pass --variables or set \"variables\" in the config");
}

ScoreParams score_params(const Context& ctx, const std::string& score_flag, const std::string& mode_flag) {
    ScoreParams p;
    if (auto s = ctx.section("score")) {
        if (s->contains("base")) p.base = parse_base_score(s->at("base").get<std::string>());
        p.bdeu_ess = s->value("ess", p.bdeu_ess);
        if (s->contains("alpha_reward")) p.alpha_reward = s->at("alpha_reward").get<double>();
        if (s->contains("alpha_penalty")) p.alpha_penalty = s->at("alpha_penalty").get<double>();
        if (s->contains("beta_penalty")) p.beta_penalty = s->at("beta_penalty").get<double>();
        if (s->contains("mode")) p.mode = parse_constraint_mode(s->at("mode").get<std::string>());
    }
    if (!score_flag.empty()) p.base = parse_base_score(score_flag);
    if (!mode_flag.empty()) p.mode = parse_constraint_mode(mode_flag);
    p.validate();
    return p;
}

SearchConfig search_config(const Context& ctx, std::optional<std::size_t> restarts) {
    SearchConfig c;
    c.max_in_degree = ctx.setting<std::size_t>("search", "max_in_degree", c.max_in_degree);
    c.max_iterations = ctx.setting<std::size_t>("search", "max_iterations", c.max_iterations);
    c.random_restarts = ctx.setting<std::size_t>("search", "random_restarts", c.random_restarts);
    if (restarts) c.random_restarts = *restarts;
    c.seed = ctx.globals.seed;
    return c;
}

json score_echo(const ScoreParams& p) {
    auto num = [](double v) { return std::isnan(v) ? json("auto") : json(v); };
    return {{"base", to_string(p.base)},
            {"ess", p.bdeu_ess},
            {"alpha_reward", num(p.alpha_reward)},
            {"alpha_penalty", num(p.alpha_penalty)},
            {"beta_penalty", num(p.beta_penalty)},
            {"mode", to_string(p.mode)}};
}

json search_echo(const SearchConfig& c) {
    return {{"max_in_degree", c.max_in_degree},
            {"max_iterations", c.max_iterations},
            {"random_restarts", c.random_restarts},
            {"seed", c.seed}};
}

ConstraintSet load_optional_constraints(const std::string& path, std::span<const VariableSpec> specs) {
    if (path.empty()) return {};
    auto set = load_constraints(path);
    return validate_constraints(std::move(set), specs);
}

// A graph from a model/world file or a bare {"edges": [[u, v], ...]} file.
Dag load_dag(const fs::path& path) {
    const auto j = read_json(path);
    try {
        std::vector<std::string> names;
        if (j.contains("variables"))
            for (const auto& v : j.at("variables")) names.push_back(v.is_string() ? v.get<std::string>() : v.at("name").get<std::string>());
        const json& edges = j.is_array() ? j : j.at("edges");
        for (const auto& e : edges)
            for (int k = 0; k < 2; ++k) {
                const auto n = e.at(k).get<std::string>();
                if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
            }
        Dag dag(names);
        for (const auto& e : edges) dag.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        return dag;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": malformed graph file: " + e.what());
    }
}

BayesianNetwork load_model_file(const fs::path& path) { return load_model(read_file(path)); }

UtilitySpec utility_for(const Context& ctx, const std::string& flag, const BayesianNetwork& bn) {
    if (!flag.empty()) return utility_from_json(read_json(flag), bn);
    if (auto u = ctx.section("utility")) return utility_from_json(*u, bn);
    auto u = default_utility(bn);
    u.validate(bn);
    return u;
}

int state_by_label(const BayesianNetwork& bn, const std::string& name, const std::string& label) {
    const auto& spec = bn.specs()[bn.index_of(name)];
    auto it = std::find(spec.states.begin(), spec.states.end(), label);
    if (it == spec.states.end()) fail(ErrorKind::UnknownState, "'" + label + "' is not a state of " + name);
    return static_cast<int>(it - spec.states.begin());
}

Evidence parse_assignments(const BayesianNetwork& bn, const std::vector<std::string>& items) {
    Evidence e;
    for (const auto& item : items) {
        auto eq = item.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Parameter, "expected name=state, got '" + item + "'");
        const auto name = item.substr(0, eq);
        if (!bn.dag().find(name)) fail(ErrorKind::Parameter, "unknown variable '" + name + "'");
        if (e.count(name)) fail(ErrorKind::Parameter, "variable '" + name + "' assigned twice");
        e[name] = state_by_label(bn, name, item.substr(eq + 1));
    }
    return e;
}

Evidence evidence_from_json(const BayesianNetwork& bn, const json& j) {
    Evidence e;
    for (const auto& [name, value] : j.items()) {
        if (!bn.dag().find(name)) fail(ErrorKind::Parameter, "unknown variable '" + name + "'");
        e[name] = value.is_number_integer() ? value.get<int>() : state_by_label(bn, name, value.get<std::string>());
    }
    validate_evidence(bn, e);
    return e;
}

ConfigurationSpace omega_from_json(const BayesianNetwork& bn, const json& j) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::Parameter, "omega file must be a non-empty array of {variable: state}");
    ConfigurationSpace omega;
    for (const auto& [name, _] : j.front().items()) omega.variables.push_back(name);
    for (const auto& entry : j) {
        std::vector<int> a;
        if (entry.size() != omega.variables.size()) fail(ErrorKind::Parameter, "omega entries must assign the same variables");
        for (const auto& v : omega.variables) {
            if (!entry.contains(v)) fail(ErrorKind::Parameter, "omega entry lacks " + v);
            a.push_back(state_by_label(bn, v, entry.at(v).is_string() ? entry.at(v).get<std::string>() : entry.at(v).dump()));
        }
        omega.assignments.push_back(std::move(a));
    }
    omega.validate(bn);
    return omega;
}

GroundTruthSpec world_for(const std::string& name, const Context& ctx, const RandomWorldParams& random) {
    if (name.empty() || name == "default") return default_world();
    if (name == "variance-trap") return variance_trap_world();
    if (name == "random") return random_world(random, ctx.globals.seed);
    return world_from_json(read_json(name));
}

json dag_json(const Dag& dag) {
    json edges = json::array();
    for (const auto& [u, v] : dag.named_edges()) edges.push_back({u, v});
    return {{"variables", dag.nodes()}, {"edges", edges}};
}

// ---- extract -------------------------------------------------------------

struct ExtractOptions {
    std::string variables;
    std::string fixtures;
    std::string endpoint;
    std::string model;
    std::string auth_env;
    std::optional<std::size_t> runs;
    std::optional<double> threshold;
};

int cmd_extract(Context& ctx, const ExtractOptions& o, std::ostream& out) {
    const auto specs = load_specs(ctx, o.variables);
    EndpointConfig endpoint;
    if (auto llm = ctx.section("llm")) {
        endpoint.base_url = llm->value("base_url", endpoint.base_url);
        endpoint.path = llm->value("path", endpoint.path);
        endpoint.model = llm->value("model", endpoint.model);
        endpoint.auth_env = llm->value("auth_env", endpoint.auth_env);
        endpoint.temperature = llm->value("temperature", endpoint.temperature);
        endpoint.max_retries = llm->value("max_retries", endpoint.max_retries);
        endpoint.backoff_ms = llm->value("backoff_ms", endpoint.backoff_ms);
        endpoint.timeout_s = llm->value("timeout_s", endpoint.timeout_s);
        endpoint.fixture_dir = llm->value("fixture_dir", std::string());
    }
    if (!o.fixtures.empty()) endpoint.fixture_dir = o.fixtures;
    if (!o.endpoint.empty()) endpoint.base_url = o.endpoint;
    if (!o.model.empty()) endpoint.model = o.model;
    if (!o.auth_env.empty()) endpoint.auth_env = o.auth_env;

    EnsembleParams ensemble;
    ensemble.n_runs = ctx.setting<std::size_t>("llm", "n_runs", ensemble.n_runs);
    ensemble.vote_threshold = ctx.setting<double>("llm", "vote_threshold", ensemble.vote_threshold);
    if (o.runs) ensemble.n_runs = *o.runs;
    if (o.threshold) ensemble.vote_threshold = *o.threshold;
    if (ensemble.n_runs == 0) fail(ErrorKind::Parameter, "--runs must be >= 1");

    ctx.echo["variables"] = json::array();
    for (const auto& s : specs) ctx.echo["variables"].push_back(to_json(s));
    ctx.echo["llm"] = {{"base_url", endpoint.base_url},
                       {"model", endpoint.model},
                       {"fixture_dir", endpoint.fixture_dir.string()},
                       {"n_runs", ensemble.n_runs},
                       {"vote_threshold", ensemble.vote_threshold}};
    ctx.write_json("inputs.json", ctx.echo);

    auto provider = make_provider(endpoint);
    const auto t0 = Clock::now();
    auto result = elicit_constraints(specs, *provider, ensemble, ctx.run_dir / "transcripts");
    const double elapsed = seconds_since(t0);

    write_file(ctx.run_dir / "constraints.json", save_constraints(result.constraints) + "\n");
    json summary = {{"mandatory", result.constraints.mandatory.size()},
                    {"prohibited", result.constraints.prohibited.size()},
                    {"runs", ensemble.n_runs},
                    {"failed_parses", result.failed_parses},
                    {"warnings", result.constraints.warnings}};
    if (ctx.globals.profile) summary["constraint_s"] = elapsed;
    ctx.write_json("summary.json", summary);
    out << "constraints: " << result.constraints.mandatory.size() << " mandatory, "
        << result.constraints.prohibited.size() << " prohibited -> " << (ctx.run_dir / "constraints.json").string()
        << '\n';
    for (const auto& w : result.constraints.warnings) out << "warning: " << w << '\n';
    return kOk;
}

// ---- learn ---------------------------------------------------------------

struct LearnOptions {
    std::string data;
    std::string variables;
    std::string constraints;
    std::string truth;
    std::string score;
    std::string mode;
    std::optional<std::size_t> bins;
    std::optional<std::size_t> restarts;
    std::optional<double> alpha;
};

int cmd_learn(Context& ctx, const LearnOptions& o, std::ostream& out) {
    const auto specs = load_specs(ctx, o.variables);
    const auto data_path = ctx.path_setting(o.data, "data");
    if (data_path.empty()) fail(ErrorKind::Parameter, "learn needs --data or paths.data");
    const std::size_t k = o.bins.value_or(ctx.setting<std::size_t>("discretization", "k", kDefaultBinCount));
    const auto score = score_params(ctx, o.score, o.mode);
    const auto search = search_config(ctx, o.restarts);
    const double alpha = o.alpha.value_or(ctx.setting<double>("model", "alpha", 1.0));
    const auto constraints_path = ctx.path_setting(o.constraints, "constraints");

    ctx.echo["data"] = data_path;
    ctx.echo["constraints"] = constraints_path;
    ctx.echo["bins"] = k;
    ctx.echo["score"] = score_echo(score);
    ctx.echo["search"] = search_echo(search);
    ctx.echo["alpha"] = alpha;
    ctx.write_json("inputs.json", ctx.echo);

    const auto raw = load_telemetry(data_path, specs);
    if (raw.row_count == 0) fail(ErrorKind::EmptyData, "no usable rows in " + data_path);
    auto disc = discretize(raw, k, specs);

    auto t0 = Clock::now();
    const auto delta = load_optional_constraints(constraints_path, disc.data.specs());
    const double constraint_s = seconds_since(t0);

    t0 = Clock::now();
    auto learned = hill_climb(disc.data, delta, score, search);
    const auto bn = estimate_cpds(learned.dag, disc.data, alpha);
    const double structure_s = seconds_since(t0);

    double inference_s = 0.0;
    std::optional<Recommendation> rec;
    const auto omega = full_grid(bn);
    const auto util = default_utility(bn);
    if (ctx.globals.profile && !omega.assignments.empty() && !util.kpis.empty()) {
        t0 = Clock::now();
        rec = recommend(bn, omega, {}, util);
        inference_s = seconds_since(t0);
    }

    auto model = model_to_json(bn);
    model["run"] = ctx.header();
    write_file(ctx.run_dir / "model.json", model.dump(2) + "\n");
    ctx.write_json("discretization.json", disc.map.to_json(), false);
    write_file(ctx.run_dir / "trace.jsonl", [&] {
        std::string s;
        for (const auto& line : trace_to_json_lines(learned.trace, learned.dag)) s += line.dump() + "\n";
        return s;
    }());
    if (!delta.empty()) write_file(ctx.run_dir / "constraints_used.json", save_constraints(delta) + "\n");

    out << "learned " << bn.dag().edge_count() << " edges over " << bn.size() << " variables from " << raw.row_count
        << " rows (" << raw.dropped_count << " dropped); score " << learned.trace.final_score << '\n';
    for (const auto& w : disc.warnings) out << "warning: " << w << '\n';

    if (!o.truth.empty()) {
        const auto truth = load_dag(o.truth);
        const auto m = compare_structures(bn.dag(), truth);
        ctx.write_json("metrics.json", metrics_to_json(m));
        out << metrics_table({{"learned", m}});
    }
    if (ctx.globals.profile) {
        json profile = {{"variables", bn.size()},
                        {"edges", bn.dag().edge_count()},
                        {"constraint_s", constraint_s},
                        {"structure_s", structure_s},
                        {"inference_s", inference_s}};
        ctx.write_json("profile.json", profile);
        out << "profile: structure " << structure_s << " s, inference " << inference_s << " s\n";
    }
    out << "model -> " << (ctx.run_dir / "model.json").string() << '\n';
    return kOk;
}

// ---- recommend -----------------------------------------------------------

struct RecommendOptions {
    std::string model;
    std::vector<std::string> evidence;
    std::string evidence_file;
    std::string utility;
    std::string omega;
};

int cmd_recommend(Context& ctx, const RecommendOptions& o, std::ostream& out) {
    const auto model_path = ctx.path_setting(o.model, "model");
    if (model_path.empty()) fail(ErrorKind::Parameter, "recommend needs --model or paths.model");
    const auto bn = load_model_file(model_path);
    Evidence evidence = o.evidence_file.empty() ? Evidence{} : evidence_from_json(bn, read_json(o.evidence_file));
    for (const auto& [k, v] : parse_assignments(bn, o.evidence)) evidence[k] = v;
    const auto util = utility_for(ctx, o.utility, bn);
    const auto omega = o.omega.empty() ? full_grid(bn) : omega_from_json(bn, read_json(o.omega));

    ctx.echo["model"] = model_path;
    ctx.echo["evidence"] = evidence;
    json u = json::array();
    for (const auto& k : util.kpis) u.push_back({{"kpi", k.kpi}, {"weight", k.weight}, {"utility", k.utility}});
    ctx.echo["utility"] = u;
    ctx.echo["omega_size"] = omega.assignments.size();
    ctx.write_json("inputs.json", ctx.echo);

    const auto t0 = Clock::now();
    const auto rec = recommend(bn, omega, evidence, util);
    const double inference_s = seconds_since(t0);
    auto j = recommendation_to_json(bn, rec);
    if (ctx.globals.profile) j["inference_s"] = inference_s;
    ctx.write_json("recommendation.json", j);
    j["run"] = ctx.header();
    out << j.dump(2) << '\n';
    return kOk;
}

// ---- update --------------------------------------------------------------

struct UpdateOptions {
    std::string model;
    std::string data;
    std::string discretization;
    std::string constraints;
    std::optional<double> gamma;
    bool relearn = false;
};

int cmd_update(Context& ctx, const UpdateOptions& o, std::ostream& out) {
    const auto model_path = ctx.path_setting(o.model, "model");
    const auto data_path = ctx.path_setting(o.data, "data");
    if (model_path.empty() || data_path.empty()) fail(ErrorKind::Parameter, "update needs --model and --data");
    auto map_path = ctx.path_setting(o.discretization, "discretization");
    if (map_path.empty()) map_path = (fs::path(model_path).parent_path() / "discretization.json").string();
    const auto bn = load_model_file(model_path);
    const auto map = DiscretizationMap::from_json(read_json(map_path));

    UpdateParams params;
    params.learning_rate = ctx.setting<double>("update", "learning_rate", params.learning_rate);
    params.alpha = ctx.setting<double>("update", "alpha", params.alpha);
    if (o.gamma) params.learning_rate = *o.gamma;
    params.validate();

    ctx.echo["model"] = model_path;
    ctx.echo["data"] = data_path;
    ctx.echo["discretization"] = map_path;
    ctx.echo["learning_rate"] = params.learning_rate;
    ctx.echo["relearn"] = o.relearn;
    ctx.write_json("inputs.json", ctx.echo);

    const auto raw = load_telemetry(data_path, bn.specs());
    if (raw.row_count == 0) fail(ErrorKind::EmptyData, "no usable rows in " + data_path);
    const auto data = apply_discretization(raw, map, bn.specs());

    BayesianNetwork next;
    json report;
    if (o.relearn) {
        const auto delta = load_optional_constraints(ctx.path_setting(o.constraints, "constraints"), bn.specs());
        next = full_relearn(data, delta, score_params(ctx, "", ""), search_config(ctx, std::nullopt), params.alpha);
        report = {{"relearned", true}, {"edges", next.dag().edge_count()}};
    } else {
        auto result = incremental_update(bn, data, params);
        next = std::move(result.model);
        report = update_report_to_json(result);
        report["relearned"] = false;
    }
    auto model = model_to_json(next);
    model["run"] = ctx.header();
    write_file(ctx.run_dir / "model.json", model.dump(2) + "\n");
    ctx.write_json("discretization.json", map.to_json(), false);
    ctx.write_json("update_report.json", report);
    out << report.dump(2) << '\n';
    return kOk;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateOptions {
    std::string learned;
    std::string truth;
    std::string kpi;
    std::string baseline;
};

int cmd_evaluate(Context& ctx, const EvaluateOptions& o, std::ostream& out) {
    ctx.echo["learned"] = o.learned;
    ctx.echo["truth"] = o.truth;
    ctx.echo["kpi"] = o.kpi;
    ctx.echo["baseline"] = o.baseline;
    ctx.write_json("inputs.json", ctx.echo);
    bool did = false;
    if (!o.learned.empty() || !o.truth.empty()) {
        if (o.learned.empty() || o.truth.empty()) fail(ErrorKind::Parameter, "structure evaluation needs --learned and --truth");
        const auto m = compare_structures(load_dag(o.learned), load_dag(o.truth));
        ctx.write_json("metrics.json", metrics_to_json(m));
        out << metrics_table({{"learned", m}});
        did = true;
    }
    if (!o.kpi.empty()) {
        const auto j = read_json(o.kpi);
        std::vector<RunSamples> runs;
        try {
            for (const auto& r : j) {
                RunSamples rs{r.at("label").get<std::string>(), {}};
                for (const auto& k : r.at("kpis"))
                    rs.kpis.push_back({k.at("kpi").get<std::string>(), k.at("values").get<std::vector<double>>()});
                runs.push_back(std::move(rs));
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed KPI run file: ") + e.what());
        }
        const auto baseline = o.baseline.empty() && !runs.empty() ? runs.front().label : o.baseline;
        const auto report = kpi_report(runs, baseline);
        ctx.write_json("kpi_report.json", report_to_json(report));
        write_file(ctx.run_dir / "kpi_report.csv", report_to_csv(report));
        for (const auto& r : report.runs)
            for (const auto& k : r.kpis)
                out << r.label << ' ' << k.kpi << " mean " << k.mean << " (" << std::showpos << k.improvement_pct
                    << std::noshowpos << "% vs " << baseline << ")\n";
        did = true;
    }
    if (!did) fail(ErrorKind::Parameter, "evaluate needs --learned/--truth or --kpi");
    return kOk;
}

// ---- simulate ------------------------------------------------------------

struct SimulateOptions {
    std::string world;
    std::string context;
    std::size_t samples = 10000;
    std::vector<std::string> pins;
    bool explore = false;
    RandomWorldParams random;
};

int cmd_simulate(Context& ctx, const SimulateOptions& o, std::ostream& out) {
    const auto world = world_for(o.world, ctx, o.random);
    const auto bn = world.in_context(o.context);
    const auto pins = parse_assignments(bn, o.pins);

    ctx.echo["world"] = o.world.empty() ? "default" : o.world;
    ctx.echo["context"] = o.context;
    ctx.echo["samples"] = o.samples;
    ctx.echo["pins"] = o.pins;
    ctx.echo["explore"] = o.explore;
    if (o.world == "random")
        ctx.echo["random"] = {{"nodes", o.random.nodes}, {"config_nodes", o.random.config_nodes}, {"max_omega", o.random.max_omega}};
    ctx.write_json("inputs.json", ctx.echo);

    DiscreteDataset data;
    if (o.explore) {
        if (!pins.empty()) fail(ErrorKind::Parameter, "--explore and --pin are mutually exclusive");
        data = forward_sample_explore(bn, full_grid(bn), o.samples, ctx.globals.seed);
    } else {
        data = forward_sample(bn, pins, o.samples, ctx.globals.seed);
    }
    write_file(ctx.run_dir / "data.csv", dataset_to_csv(data));
    json schema = json::array();
    for (const auto& s : csv_schema(data)) schema.push_back(to_json(s));
    ctx.write_json("schema.json", {{"variables", schema}});
    ctx.write_json("world.json", world_to_json(world));
    ctx.write_json("truth.json", dag_json(bn.dag()));
    out << "sampled " << data.rows() << " rows over " << data.cols() << " variables -> "
        << (ctx.run_dir / "data.csv").string() << '\n';
    return kOk;
}

// ---- loop ----------------------------------------------------------------

struct LoopOptions {
    std::string world;
    std::vector<std::string> switches;
    std::size_t cycles = 10;
    std::string constraints;
    bool no_constraints = false;
    std::optional<std::size_t> batch;
    std::optional<std::size_t> warmup;
    std::optional<double> exploration;
    std::optional<double> gamma;
    RandomWorldParams random;
};

int cmd_loop(Context& ctx, const LoopOptions& o, std::ostream& out) {
    const auto world = world_for(o.world, ctx, o.random);
    const bool is_default = o.world.empty() || o.world == "default";

    std::vector<ContextSwitch> schedule;
    for (const auto& s : o.switches) {
        auto colon = s.find(':');
        if (colon == std::string::npos) fail(ErrorKind::Parameter, "--switch expects cycle:context, got '" + s + "'");
        std::size_t cycle = 0;
        try {
            cycle = std::stoul(s.substr(0, colon));
        } catch (const std::exception&) {
            fail(ErrorKind::Parameter, "--switch expects cycle:context, got '" + s + "'");
        }
        schedule.push_back({cycle, s.substr(colon + 1)});
    }
    if (schedule.empty() && !world.contexts.empty()) schedule.push_back({0, world.contexts.front().name});

    LoopSettings settings;
    settings.warmup_samples = o.warmup.value_or(ctx.setting<std::size_t>("loop", "warmup_samples", settings.warmup_samples));
    settings.batch_size = o.batch.value_or(ctx.setting<std::size_t>("loop", "batch_size", settings.batch_size));
    settings.exploration = o.exploration.value_or(ctx.setting<double>("loop", "exploration", settings.exploration));
    settings.relearn_window = ctx.setting<std::size_t>("loop", "relearn_window", settings.relearn_window);
    settings.update.learning_rate = o.gamma.value_or(ctx.setting<double>("update", "learning_rate", settings.update.learning_rate));
    settings.score = score_params(ctx, "", "");
    settings.search = search_config(ctx, std::nullopt);
    const auto constraints_path = ctx.path_setting(o.constraints, "constraints");
    if (!o.no_constraints) {
        if (!constraints_path.empty())
            settings.delta = load_optional_constraints(constraints_path, world.world.specs());
        else if (is_default)
            settings.delta = default_partial_constraints();
    }
    if (auto u = ctx.section("utility")) settings.utility = utility_from_json(*u, world.world);

    ctx.echo["world"] = is_default ? "default" : o.world;
    ctx.echo["cycles"] = o.cycles;
    ctx.echo["schedule"] = json::array();
    for (const auto& s : schedule) ctx.echo["schedule"].push_back({{"cycle", s.cycle}, {"context", s.context}});
    ctx.echo["loop"] = {{"warmup_samples", settings.warmup_samples},
                        {"batch_size", settings.batch_size},
                        {"exploration", settings.exploration},
                        {"relearn_window", settings.relearn_window},
                        {"learning_rate", settings.update.learning_rate}};
    ctx.echo["constraints"] = constraints_to_json(settings.delta);
    ctx.echo["score"] = score_echo(settings.score);
    ctx.write_json("inputs.json", ctx.echo);

    const auto log = run_closed_loop(world, schedule, settings, o.cycles, ctx.globals.seed);
    write_file(ctx.run_dir / "loop.jsonl", loop_log_to_jsonl(log, world.world));
    ctx.write_json("world.json", world_to_json(world));
    for (const auto& r : log.records) {
        out << "cycle " << r.cycle << " [" << (r.context.empty() ? "base" : r.context) << "] applied";
        for (std::size_t i = 0; i < log.config_variables.size(); ++i)
            out << ' ' << log.config_variables[i] << '='
                << world.world.specs()[world.world.index_of(log.config_variables[i])].states[static_cast<std::size_t>(r.applied_config[i])];
        out << " true_utility " << r.applied_true_utility << (r.relearned ? " (relearned)" : "") << '\n';
    }
    out << "log -> " << (ctx.run_dir / "loop.jsonl").string() << '\n';
    return kOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parameter: return kUsage;
        case ErrorKind::Unsatisfiable:
        case ErrorKind::Feasibility:
        case ErrorKind::Cycle: return kInfeasible;
        case ErrorKind::Io:
        case ErrorKind::Provider: return kProvider;
        case ErrorKind::Schema:
        case ErrorKind::EmptyData:
        case ErrorKind::UnknownState:
        case ErrorKind::Parse:
        case ErrorKind::FormatVersion:
        case ErrorKind::ZeroEvidence: return kData;
    }
    return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Constraint-guided Bayesian network learning and configuration recommendation", "ranbn"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    app.add_option("--seed", g.seed, "Random seed (recorded in every output)");
    app.add_flag("--profile", g.profile, "Emit stage timings");
    app.add_option("--out", g.out_dir, "Run directory (default runs/<command>-<time>)");

    ExtractOptions ex;
    auto* extract = app.add_subcommand("extract", "Elicit edge constraints from a language model");
    extract->add_option("--variables", ex.variables, "Variable schema JSON");
    extract->add_option("--fixtures", ex.fixtures, "Replay recorded responses from this directory");
    extract->add_option("--endpoint", ex.endpoint, "OpenAI-compatible base URL");
    extract->add_option("--model", ex.model, "Model name sent to the endpoint");
    extract->add_option("--auth-env", ex.auth_env, "Environment variable holding the bearer token");
    extract->add_option("--runs", ex.runs, "Ensemble size");
    extract->add_option("--threshold", ex.threshold, "Vote share an edge must exceed");

    LearnOptions le;
    auto* learn = app.add_subcommand("learn", "Learn structure and parameters from telemetry");
    learn->add_option("--data", le.data, "Telemetry CSV");
    learn->add_option("--variables", le.variables, "Variable schema JSON");
    learn->add_option("--constraints", le.constraints, "Constraint file");
    learn->add_option("--truth", le.truth, "Ground-truth graph for structure metrics");
    learn->add_option("--score", le.score, "bic | k2 | bdeu");
    learn->add_option("--mode", le.mode, "hard | soft constraint handling");
    learn->add_option("--bins", le.bins, "Default bin count for continuous variables");
    learn->add_option("--restarts", le.restarts, "Random restarts");
    learn->add_option("--alpha", le.alpha, "CPD pseudo-count");

    RecommendOptions re;
    auto* rec = app.add_subcommand("recommend", "Recommend a configuration");
    rec->add_option("--model", re.model, "Model file");
    rec->add_option("--evidence", re.evidence, "Measurement evidence name=state (repeatable)");
    rec->add_option("--evidence-file", re.evidence_file, "JSON object of name: state");
    rec->add_option("--utility", re.utility, "Utility spec JSON");
    rec->add_option("--omega", re.omega, "Candidate configurations JSON");

    UpdateOptions up;
    auto* update = app.add_subcommand("update", "Adapt a model to new telemetry");
    update->add_option("--model", up.model, "Model file");
    update->add_option("--data", up.data, "New telemetry CSV");
    update->add_option("--discretization", up.discretization, "Discretization map (default: next to the model)");
    update->add_option("--constraints", up.constraints, "Constraint file for --relearn");
    update->add_option("--gamma", up.gamma, "Learning rate in [0, 1]");
    update->add_flag("--relearn", up.relearn, "Relearn structure and parameters from the data");

    EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "Structure metrics and KPI reports");
    evaluate->add_option("--learned", ev.learned, "Learned graph or model");
    evaluate->add_option("--truth", ev.truth, "Ground-truth graph or model");
    evaluate->add_option("--kpi", ev.kpi, "KPI runs JSON");
    evaluate->add_option("--baseline", ev.baseline, "Baseline run label");

    SimulateOptions si;
    auto* simulate = app.add_subcommand("simulate", "Sample telemetry from a ground-truth world");
    simulate->add_option("--world", si.world, "default | variance-trap | random | world JSON");
    simulate->add_option("--context", si.context, "Context to apply");
    simulate->add_option("--samples", si.samples, "Row count");
    simulate->add_option("--pin", si.pins, "Pin a configuration variable name=state (repeatable)");
    simulate->add_flag("--explore", si.explore, "Draw a random configuration per row");
    simulate->add_option("--nodes", si.random.nodes, "Random world: node count");
    simulate->add_option("--config-nodes", si.random.config_nodes, "Random world: configuration nodes");
    simulate->add_option("--max-omega", si.random.max_omega, "Random world: configuration grid cap");
    simulate->add_option("--edge-probability", si.random.edge_probability, "Random world: edge probability");

    LoopOptions lo;
    auto* loop = app.add_subcommand("loop", "Run the closed adaptation loop against a world");
    loop->add_option("--world", lo.world, "default | variance-trap | random | world JSON");
    loop->add_option("--switch", lo.switches, "Context switch cycle:context (repeatable)");
    loop->add_option("--cycles", lo.cycles, "Cycle count");
    loop->add_option("--constraints", lo.constraints, "Constraint file");
    loop->add_flag("--no-constraints", lo.no_constraints, "Learn without constraints");
    loop->add_option("--batch", lo.batch, "Samples per cycle");
    loop->add_option("--warmup", lo.warmup, "Warm-up samples");
    loop->add_option("--exploration", lo.exploration, "Share of each batch under random configurations");
    loop->add_option("--gamma", lo.gamma, "Learning rate in [0, 1]");
    loop->add_option("--nodes", lo.random.nodes, "Random world: node count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return kUsage;
    }

    Context ctx;
    ctx.globals = g;
    ctx.command = app.get_subcommands().front()->get_name();
    try {
        if (!g.config_path.empty()) {
            ctx.config = read_json(g.config_path);
            if (!ctx.config.is_object()) fail(ErrorKind::Parameter, "config file must hold a JSON object");
            if (ctx.config.contains("seed") && app.count("--seed") == 0) ctx.globals.seed = ctx.config.at("seed").get<std::uint64_t>();
            if (ctx.config.contains("profile")) ctx.globals.profile = ctx.globals.profile || ctx.config.at("profile").get<bool>();
        }
        ctx.echo["command"] = ctx.command;
        ctx.echo["seed"] = ctx.globals.seed;
        ctx.echo["config_file"] = g.config_path;
        ctx.run_dir = make_run_dir(ctx.globals, ctx.command);
        ctx.write_json("run.json", ctx.header(), false);

        int code = kOk;
        if (ctx.command == "extract") code = cmd_extract(ctx, ex, out);
        else if (ctx.command == "learn") code = cmd_learn(ctx, le, out);
        else if (ctx.command == "recommend") code = cmd_recommend(ctx, re, out);
        else if (ctx.command == "update") code = cmd_update(ctx, up, out);
        else if (ctx.command == "evaluate") code = cmd_evaluate(ctx, ev, out);
        else if (ctx.command == "simulate") code = cmd_simulate(ctx, si, out);
        else if (ctx.command == "loop") code = cmd_loop(ctx, lo, out);
        // run.json is rewritten so the config hash covers the resolved inputs.
        ctx.write_json("run.json", ctx.header(), false);
        return code;
    } catch (const CycleError& e) {
        err << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace ranbn::cli
