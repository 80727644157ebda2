#pragma once

// Mandatory / prohibited edge constraints.
//
// Constraints come either from an ensemble of LLM responses (aggregated by
// strict majority vote) or from a JSON constraint file. Whatever the source,
// a validated ConstraintSet guarantees that no edge is both mandatory and
// prohibited and that the mandatory edges alone form a DAG.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/dag.hpp"
#include "ranbn/telemetry.hpp"

namespace ranbn {

enum class ConstraintKind { Mandatory, Prohibited };

const char* to_string(ConstraintKind kind);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view text);

struct EdgeConstraint {
    ConstraintKind kind = ConstraintKind::Mandatory;
    std::string source;
    std::string target;
    std::string reasoning;
    int votes = 1;

    bool operator==(const EdgeConstraint&) const = default;
};

// Value range reported for a variable by the elicitation. Stored for audit;
// not consumed by learning.
struct VariableRange {
    std::string variable;
    std::string range;
};

struct ConstraintSet {
    std::set<NamedEdge> mandatory;
    std::set<NamedEdge> prohibited;
    std::vector<EdgeConstraint> provenance;
    std::vector<VariableRange> ranges;
    std::vector<std::string> warnings;

    bool empty() const { return mandatory.empty() && prohibited.empty(); }
    bool same_edges(const ConstraintSet& other) const {
        return mandatory == other.mandatory && prohibited == other.prohibited;
    }
};

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    std::vector<std::string> stages;  // five reasoning stages, fixed order
    std::string output_schema;
};

struct EnsembleParams {
    std::size_t n_runs = 5;
    // An edge/kind pair survives when it appears in strictly more than this
    // fraction of the runs.
    double vote_threshold = 0.5;
};

PromptBundle build_prompt(std::span<const VariableSpec> specs);

struct ParsedConstraints {
    std::vector<EdgeConstraint> records;
    std::vector<VariableRange> ranges;
    std::size_t malformed_count = 0;
};

// Accepts fenced JSON (an array of records, or an object with "constraints"
// and optional "ranges"), bare JSON, or a pipe-delimited table. Throws
// ParseError when no record can be extracted.
ParsedConstraints parse_constraints(std::string_view text);

ConstraintSet aggregate_votes(std::span<const std::vector<EdgeConstraint>> runs, const EnsembleParams& params);

// Drops self-loops and (when specs are given) constraints on unknown
// variables, removes mandatory/prohibited conflicts from both sets, and
// throws Error{Unsatisfiable} if the mandatory edges contain a cycle.
ConstraintSet validate_constraints(ConstraintSet set, std::optional<std::span<const VariableSpec>> specs = std::nullopt);

ConstraintSet parse_constraint_file(std::string_view json_text);
ConstraintSet load_constraints(const std::filesystem::path& path);

nlohmann::json constraints_to_json(const ConstraintSet& set);
std::string save_constraints(const ConstraintSet& set);

}  // namespace ranbn
