#include "ranbn/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view field) {
    if (field.empty()) return std::nullopt;
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Legal values of a discrete spec, parsed from its state labels.
std::vector<double> discrete_values(const VariableSpec& spec) {
    std::vector<double> values;
    values.reserve(spec.states.size());
    for (const auto& s : spec.states) {
        auto v = parse_number(trim(s));
        if (!v) fail(ErrorKind::Schema, "discrete state '" + s + "' of " + spec.name + " is not numeric");
        values.push_back(*v);
    }
    return values;
}

std::string format_value(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

const char* to_string(Role role) {
    switch (role) {
        case Role::Config: return "config";
        case Role::Measurement: return "measurement";
        case Role::Kpi: return "kpi";
    }
    return "kpi";
}

const char* to_string(Kind kind) { return kind == Kind::Continuous ? "continuous" : "discrete"; }

const char* to_string(Direction direction) {
    switch (direction) {
        case Direction::Benefit: return "benefit";
        case Direction::Cost: return "cost";
        case Direction::Neutral: return "neutral";
    }
    return "neutral";
}

Role parse_role(std::string_view text) {
    auto t = lower(text);
    if (t == "config" || t == "configuration") return Role::Config;
    if (t == "measurement") return Role::Measurement;
    if (t == "kpi") return Role::Kpi;
    fail(ErrorKind::Schema, "unknown role '" + std::string(text) + "'");
}

Kind parse_kind(std::string_view text) {
    auto t = lower(text);
    if (t == "continuous") return Kind::Continuous;
    if (t == "discrete") return Kind::Discrete;
    fail(ErrorKind::Schema, "unknown kind '" + std::string(text) + "'");
}

Direction parse_direction(std::string_view text) {
    auto t = lower(text);
    if (t == "benefit") return Direction::Benefit;
    if (t == "cost") return Direction::Cost;
    if (t == "neutral") return Direction::Neutral;
    fail(ErrorKind::Schema, "unknown direction '" + std::string(text) + "'");
}

nlohmann::json to_json(const VariableSpec& spec) {
    nlohmann::json j{{"name", spec.name},
                     {"role", to_string(spec.role)},
                     {"kind", to_string(spec.kind)},
                     {"states", spec.states},
                     {"direction", to_string(spec.direction)}};
    if (spec.bins != 0) j["bins"] = spec.bins;
    return j;
}

VariableSpec variable_spec_from_json(const nlohmann::json& j) {
    VariableSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.role = parse_role(j.value("role", "kpi"));
    spec.kind = parse_kind(j.value("kind", spec.role == Role::Config ? "discrete" : "continuous"));
    if (j.contains("states")) {
        for (const auto& s : j.at("states")) {
            spec.states.push_back(s.is_string() ? s.get<std::string>() : format_value(s.get<double>()));
        }
    }
    spec.direction = parse_direction(j.value("direction", "neutral"));
    spec.bins = j.value("bins", std::size_t{0});
    return spec;
}

const std::vector<double>& RawDataset::column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) fail(ErrorKind::Schema, "missing column " + name);
    return it->second;
}

RawDataset parse_telemetry(std::string_view text, std::span<const VariableSpec> schema) {
    // Strip a UTF-8 byte order mark.
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
        text.remove_prefix(3);
    }
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        while (pos < text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
            if (!trim(line).empty()) return true;
        }
        return false;
    };

    std::string_view header_line;
    if (!next_line(header_line)) fail(ErrorKind::EmptyData, "telemetry file has no header");
    auto header = split_csv_line(header_line);

    std::vector<std::size_t> field_of;
    RawDataset raw;
    for (const auto& spec : schema) {
        auto it = std::find(header.begin(), header.end(), spec.name);
        if (it == header.end()) fail(ErrorKind::Schema, "telemetry is missing column '" + spec.name + "'");
        field_of.push_back(static_cast<std::size_t>(it - header.begin()));
        raw.names.push_back(spec.name);
        raw.columns[spec.name];
    }

    std::vector<double> row(schema.size());
    std::string_view line;
    while (next_line(line)) {
        auto fields = split_csv_line(line);
        bool ok = true;
        for (std::size_t i = 0; i < schema.size() && ok; ++i) {
            if (field_of[i] >= fields.size()) {
                ok = false;
                break;
            }
            auto v = parse_number(fields[field_of[i]]);
            if (!v) ok = false;
            else row[i] = *v;
        }
        if (!ok) {
            ++raw.dropped_count;
            continue;
        }
        for (std::size_t i = 0; i < schema.size(); ++i) raw.columns[schema[i].name].push_back(row[i]);
        ++raw.row_count;
    }
    if (raw.row_count == 0) fail(ErrorKind::EmptyData, "no usable telemetry rows");
    return raw;
}

RawDataset load_telemetry(const std::filesystem::path& path, std::span<const VariableSpec> schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open telemetry file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_telemetry(buffer.str(), schema);
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) fail(ErrorKind::Parameter, "quantile of empty data");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> quantile_bins(std::span<const double> values, std::size_t k) {
    if (k < 2) fail(ErrorKind::Parameter, "bin count must be at least 2");
    if (values.empty()) fail(ErrorKind::Parameter, "cannot bin an empty column");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (std::size_t i = 1; i < k; ++i) {
        const double q = quantile_sorted(sorted, static_cast<double>(i) / static_cast<double>(k));
        if (q >= sorted.back()) continue;  // would leave the top bin empty
        if (!edges.empty() && q <= edges.back()) continue;
        edges.push_back(q);
    }
    return edges;
}

std::vector<std::string> bin_labels(std::size_t bin_count) {
    switch (bin_count) {
        case 1: return {"all"};
        case 2: return {"low", "high"};
        case 3: return {"low", "medium", "high"};
        default: break;
    }
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < bin_count; ++i) labels.push_back("b" + std::to_string(i));
    return labels;
}

int VariableBinning::state_of(double value) const {
    if (kind == Kind::Continuous) {
        return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i] - value) <= 1e-9 * std::max(1.0, std::abs(value))) return static_cast<int>(i);
    }
    fail(ErrorKind::UnknownState, "value " + format_value(value) + " is not a legal state of " + name);
}

DiscretizationMap::DiscretizationMap(std::vector<VariableBinning> variables) : variables_(std::move(variables)) {}

const VariableBinning& DiscretizationMap::at(std::string_view name) const {
    for (const auto& v : variables_)
        if (v.name == name) return v;
    fail(ErrorKind::Schema, "discretization map has no variable '" + std::string(name) + "'");
}

bool DiscretizationMap::contains(std::string_view name) const {
    return std::any_of(variables_.begin(), variables_.end(), [&](const auto& v) { return v.name == name; });
}

nlohmann::json DiscretizationMap::to_json() const {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : variables_) {
        vars.push_back({{"name", v.name},
                        {"kind", ranbn::to_string(v.kind)},
                        {"edges", v.edges},
                        {"labels", v.labels},
                        {"values", v.values}});
    }
    return {{"schema_version", 1}, {"variables", vars}};
}

DiscretizationMap DiscretizationMap::from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != 1) fail(ErrorKind::FormatVersion, "unsupported discretization schema");
    std::vector<VariableBinning> vars;
    for (const auto& v : j.at("variables")) {
        VariableBinning b;
        b.name = v.at("name").get<std::string>();
        b.kind = parse_kind(v.at("kind").get<std::string>());
        b.edges = v.at("edges").get<std::vector<double>>();
        b.labels = v.at("labels").get<std::vector<std::string>>();
        b.values = v.at("values").get<std::vector<double>>();
        vars.push_back(std::move(b));
    }
    return DiscretizationMap(std::move(vars));
}

DiscreteDataset::DiscreteDataset(std::vector<VariableSpec> specs, std::vector<int> cells)
    : specs_(std::move(specs)), cells_(std::move(cells)) {
    if (specs_.empty()) {
        if (!cells_.empty()) fail(ErrorKind::Schema, "cells without columns");
        return;
    }
    std::set<std::string> seen;
    for (const auto& s : specs_) {
        if (s.states.empty()) fail(ErrorKind::Schema, "variable " + s.name + " has no states");
        if (!seen.insert(s.name).second) fail(ErrorKind::Schema, "duplicate variable " + s.name);
    }
    if (cells_.size() % specs_.size() != 0) fail(ErrorKind::Schema, "ragged discrete dataset");
    const std::size_t n_cols = specs_.size();
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto c = i % n_cols;
        if (cells_[i] < 0 || cells_[i] >= static_cast<int>(specs_[c].states.size())) {
            fail(ErrorKind::UnknownState, "state index out of range in column " + specs_[c].name);
        }
    }
}

std::optional<std::size_t> DiscreteDataset::find(std::string_view name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return i;
    return std::nullopt;
}

std::size_t DiscreteDataset::index_of(std::string_view name) const {
    auto idx = find(name);
    if (!idx) fail(ErrorKind::Schema, "dataset has no variable '" + std::string(name) + "'");
    return *idx;
}

std::vector<std::string> DiscreteDataset::names() const {
    std::vector<std::string> out;
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

DiscreteDataset DiscreteDataset::append(const DiscreteDataset& other) const {
    if (specs_.empty()) return other;
    if (other.specs_.empty()) return *this;
    if (other.specs_ != specs_) fail(ErrorKind::Schema, "cannot append datasets with different schemas");
    auto cells = cells_;
    cells.insert(cells.end(), other.cells_.begin(), other.cells_.end());
    DiscreteDataset out;
    out.specs_ = specs_;
    out.cells_ = std::move(cells);
    return out;
}

DiscreteDataset DiscreteDataset::tail(std::size_t count) const {
    if (count >= rows()) return *this;
    DiscreteDataset out;
    out.specs_ = specs_;
    out.cells_.assign(cells_.end() - static_cast<std::ptrdiff_t>(count * cols()), cells_.end());
    return out;
}

Discretized discretize(const RawDataset& raw, std::size_t k, std::span<const VariableSpec> specs) {
    Discretized out;
    std::vector<VariableSpec> out_specs;
    std::vector<VariableBinning> binnings;
    std::vector<std::vector<int>> columns;

    for (const auto& spec : specs) {
        const auto& col = raw.column(spec.name);
        VariableBinning b;
        b.name = spec.name;
        b.kind = spec.kind;
        VariableSpec s = spec;

        if (spec.kind == Kind::Continuous) {
            if (spec.role == Role::Config) {
                fail(ErrorKind::Schema, "configuration variable " + spec.name + " must be discrete");
            }
            const std::size_t bins = spec.bins != 0 ? spec.bins : k;
            b.edges = quantile_bins(col, bins);
            if (b.edges.size() + 1 < bins) {
                out.warnings.push_back(spec.name + ": duplicate quantile edges collapsed, " +
                                       std::to_string(b.edges.size() + 1) + " of " + std::to_string(bins) +
                                       " bins remain");
            }
            b.labels = bin_labels(b.edges.size() + 1);
            std::vector<double> sums(b.labels.size(), 0.0);
            std::vector<std::size_t> counts(b.labels.size(), 0);
            for (double v : col) {
                auto st = b.state_of(v);
                sums[st] += v;
                ++counts[st];
            }
            for (std::size_t i = 0; i < sums.size(); ++i)
                b.values.push_back(counts[i] ? sums[i] / static_cast<double>(counts[i]) : 0.0);
            s.states = b.labels;
        } else {
            if (spec.states.empty()) {
                std::set<double> distinct(col.begin(), col.end());
                b.values.assign(distinct.begin(), distinct.end());
                for (double v : b.values) s.states.push_back(format_value(v));
            } else {
                b.values = discrete_values(spec);
            }
            b.labels = s.states;
        }

        std::vector<int> states;
        states.reserve(col.size());
        for (double v : col) states.push_back(b.state_of(v));
        columns.push_back(std::move(states));
        out_specs.push_back(std::move(s));
        binnings.push_back(std::move(b));
    }

    std::vector<int> cells(raw.row_count * specs.size());
    for (std::size_t c = 0; c < columns.size(); ++c)
        for (std::size_t r = 0; r < raw.row_count; ++r) cells[r * specs.size() + c] = columns[c][r];

    out.data = DiscreteDataset(std::move(out_specs), std::move(cells));
    out.map = DiscretizationMap(std::move(binnings));
    return out;
}

DiscreteDataset apply_discretization(const RawDataset& raw, const DiscretizationMap& map,
                                     std::span<const VariableSpec> specs) {
    std::vector<VariableSpec> out_specs;
    std::vector<int> cells(raw.row_count * specs.size());
    for (std::size_t c = 0; c < specs.size(); ++c) {
        const auto& b = map.at(specs[c].name);
        VariableSpec s = specs[c];
        s.states = b.labels;
        out_specs.push_back(std::move(s));
        const auto& col = raw.column(specs[c].name);
        for (std::size_t r = 0; r < raw.row_count; ++r) cells[r * specs.size() + c] = b.state_of(col[r]);
    }
    return DiscreteDataset(std::move(out_specs), std::move(cells));
}

VariablePartition partition_variables(std::span<const VariableSpec> specs) {
    VariablePartition p;
    for (const auto& s : specs) {
        switch (s.role) {
            case Role::Config: p.configs.push_back(s.name); break;
            case Role::Measurement: p.measurements.push_back(s.name); break;
            case Role::Kpi: p.kpis.push_back(s.name); break;
        }
    }
    return p;
}

}  // namespace ranbn
