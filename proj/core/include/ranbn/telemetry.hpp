#pragma once

// Telemetry ingestion and discretization.
//
// Raw KPI logs arrive as CSV with one numeric column per variable. Continuous
// columns are binned at empirical quantiles so that every state carries a
// comparable share of the data; configuration columns keep their legal values
// as states. The resulting DiscreteDataset is what structure learning, CPD
// estimation and adaptation consume.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ranbn {

enum class Role { Config, Measurement, Kpi };
enum class Kind { Continuous, Discrete };
enum class Direction { Benefit, Cost, Neutral };

const char* to_string(Role role);
const char* to_string(Kind kind);
const char* to_string(Direction direction);
Role parse_role(std::string_view text);
Kind parse_kind(std::string_view text);
Direction parse_direction(std::string_view text);

inline constexpr std::size_t kDefaultBinCount = 3;

struct VariableSpec {
    std::string name;
    Role role = Role::Kpi;
    Kind kind = Kind::Continuous;
    // Discrete: the legal raw values, in ordinal order. Continuous: filled with
    // bin labels by discretize().
    std::vector<std::string> states;
    Direction direction = Direction::Neutral;
    // Per-variable bin count override for continuous columns; 0 = use default.
    std::size_t bins = 0;

    std::size_t cardinality() const { return states.size(); }
    bool operator==(const VariableSpec&) const = default;
};

nlohmann::json to_json(const VariableSpec& spec);
VariableSpec variable_spec_from_json(const nlohmann::json& j);

struct RawDataset {
    std::vector<std::string> names;  // schema order
    std::map<std::string, std::vector<double>> columns;
    std::size_t row_count = 0;
    std::size_t dropped_count = 0;  // rows rejected for missing/unparseable cells

    const std::vector<double>& column(const std::string& name) const;
};

// Reads a header-first CSV, keeping only the schema columns. Rows with any
// missing, unparseable or non-finite value in a schema column are dropped.
RawDataset load_telemetry(const std::filesystem::path& path, std::span<const VariableSpec> schema);
RawDataset parse_telemetry(std::string_view csv_text, std::span<const VariableSpec> schema);

// Quantile cut points at i/k (linear interpolation between order statistics).
// Duplicate cut points collapse and a cut equal to the maximum is dropped, so
// every returned bin is non-empty on `values`.
std::vector<double> quantile_bins(std::span<const double> values, std::size_t k);

// Linear-interpolation quantile of already sorted data, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

// Ordinal labels for a bin count: low/high, low/medium/high, else b0..b{k-1}.
std::vector<std::string> bin_labels(std::size_t bin_count);

struct VariableBinning {
    std::string name;
    Kind kind = Kind::Continuous;
    // Continuous: state i covers (edges[i-1], edges[i]].
    std::vector<double> edges;
    std::vector<std::string> labels;
    // Representative numeric value per state: bin sample mean for continuous,
    // the legal value itself for discrete.
    std::vector<double> values;

    std::size_t state_count() const { return labels.size(); }
    // Throws UnknownState for a discrete value outside the legal set.
    int state_of(double value) const;
};

class DiscretizationMap {
public:
    DiscretizationMap() = default;
    explicit DiscretizationMap(std::vector<VariableBinning> variables);

    const std::vector<VariableBinning>& variables() const { return variables_; }
    const VariableBinning& at(std::string_view name) const;
    bool contains(std::string_view name) const;

    nlohmann::json to_json() const;
    static DiscretizationMap from_json(const nlohmann::json& j);

private:
    std::vector<VariableBinning> variables_;
};

// Row-major matrix of state indices. Column order matches `specs`.
class DiscreteDataset {
public:
    DiscreteDataset() = default;
    // Validates every cell against its column's state count.
    DiscreteDataset(std::vector<VariableSpec> specs, std::vector<int> cells);

    const std::vector<VariableSpec>& specs() const { return specs_; }
    std::size_t rows() const { return specs_.empty() ? 0 : cells_.size() / specs_.size(); }
    std::size_t cols() const { return specs_.size(); }
    int at(std::size_t row, std::size_t col) const { return cells_[row * specs_.size() + col]; }
    std::span<const int> row(std::size_t r) const {
        return {cells_.data() + r * specs_.size(), specs_.size()};
    }
    const std::vector<int>& cells() const { return cells_; }
    int cardinality(std::size_t col) const { return static_cast<int>(specs_[col].states.size()); }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;
    std::vector<std::string> names() const;

    // Row-wise concatenation; specs must match exactly.
    DiscreteDataset append(const DiscreteDataset& other) const;
    DiscreteDataset tail(std::size_t count) const;

private:
    std::vector<VariableSpec> specs_;
    std::vector<int> cells_;
};

struct Discretized {
    DiscreteDataset data;
    DiscretizationMap map;
    std::vector<std::string> warnings;
};

// Continuous columns are quantile-binned (spec.bins or `k` bins); discrete
// columns map by value identity onto their declared states (or, if none are
// declared, onto their sorted distinct values).
Discretized discretize(const RawDataset& raw, std::size_t k, std::span<const VariableSpec> specs);

// Re-applies a stored map, keeping state sets fixed across batches.
DiscreteDataset apply_discretization(const RawDataset& raw, const DiscretizationMap& map,
                                     std::span<const VariableSpec> specs);

struct VariablePartition {
    std::vector<std::string> configs;
    std::vector<std::string> measurements;
    std::vector<std::string> kpis;
};

VariablePartition partition_variables(std::span<const VariableSpec> specs);

}  // namespace ranbn
