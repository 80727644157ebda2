#include "ranbn/constraints.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

std::string upper(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

std::string clean_name(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '`' || c == '*' || c == '"') continue;
        if (c == '\\' && i + 1 < text.size() && text[i + 1] == '_') continue;
        out.push_back(c);
    }
    auto b = out.find_first_not_of(" \t\r");
    auto e = out.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : out.substr(b, e - b + 1);
}

std::string excerpt(std::string_view text) {
    constexpr std::size_t kMax = 240;
    return std::string(text.substr(0, kMax)) + (text.size() > kMax ? "..." : "");
}

// Interprets one JSON value as a record; returns false if malformed.
bool record_from_json(const nlohmann::json& j, EdgeConstraint& out) {
    if (!j.is_object()) return false;
    const auto type_key = j.contains("type") ? "type" : "kind";
    if (!j.contains(type_key) || !j[type_key].is_string()) return false;
    if (!j.contains("source") || !j.contains("target")) return false;
    if (!j["source"].is_string() || !j["target"].is_string()) return false;
    auto kind = parse_constraint_kind(j[type_key].get<std::string>());
    if (!kind) return false;
    out.kind = *kind;
    out.source = clean_name(j["source"].get<std::string>());
    out.target = clean_name(j["target"].get<std::string>());
    out.reasoning = j.contains("reasoning") && j["reasoning"].is_string() ? j["reasoning"].get<std::string>() : "";
    out.votes = j.contains("votes") && j["votes"].is_number_integer() ? j["votes"].get<int>() : 1;
    if (out.votes < 0) return false;
    return !out.source.empty() && !out.target.empty() && out.source != out.target;
}

void collect_json(const nlohmann::json& j, ParsedConstraints& out) {
    const nlohmann::json* records = &j;
    if (j.is_object()) {
        if (j.contains("ranges") && j["ranges"].is_array()) {
            for (const auto& r : j["ranges"]) {
                if (!r.is_object() || !r.contains("variable")) continue;
                VariableRange vr;
                vr.variable = r["variable"].is_string() ? r["variable"].get<std::string>() : r["variable"].dump();
                if (r.contains("range")) vr.range = r["range"].is_string() ? r["range"].get<std::string>() : r["range"].dump();
                else vr.range = r.dump();
                out.ranges.push_back(std::move(vr));
            }
        }
        if (!j.contains("constraints")) return;
        records = &j["constraints"];
    }
    if (!records->is_array()) return;
    for (const auto& item : *records) {
        EdgeConstraint c;
        if (record_from_json(item, c)) out.records.push_back(std::move(c));
        else ++out.malformed_count;
    }
}

std::vector<std::string> fenced_blocks(std::string_view text) {
    std::vector<std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        auto body = text.find('\n', open);
        if (body == std::string_view::npos) break;
        auto close = text.find("```", body);
        if (close == std::string_view::npos) break;
        blocks.emplace_back(text.substr(body + 1, close - body - 1));
        pos = close + 3;
    }
    return blocks;
}

void collect_table(std::string_view text, ParsedConstraints& out) {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] != '|') continue;
        std::vector<std::string> cells;
        std::size_t start = first + 1;
        while (start <= line.size()) {
            auto bar = line.find('|', start);
            if (bar == std::string::npos) {
                auto rest = clean_name(line.substr(start));
                if (!rest.empty()) cells.push_back(rest);
                break;
            }
            cells.push_back(clean_name(line.substr(start, bar - start)));
            start = bar + 1;
        }
        if (cells.size() < 3) continue;
        const auto head = upper(cells[0]);
        if (head == "TYPE" || head.find("---") != std::string::npos || head.empty()) continue;
        auto kind = parse_constraint_kind(cells[0]);
        if (!kind || cells[1].empty() || cells[2].empty() || cells[1] == cells[2]) {
            ++out.malformed_count;
            continue;
        }
        out.records.push_back({*kind, cells[1], cells[2], cells.size() > 3 ? cells[3] : "", 1});
    }
}

using Key = std::tuple<ConstraintKind, std::string, std::string>;

const EdgeConstraint* find_provenance(const ConstraintSet& set, ConstraintKind kind, const NamedEdge& e) {
    for (const auto& p : set.provenance)
        if (p.kind == kind && p.source == e.first && p.target == e.second) return &p;
    return nullptr;
}

void drop_conflicts(ConstraintSet& set) {
    std::vector<NamedEdge> both;
    std::set_intersection(set.mandatory.begin(), set.mandatory.end(), set.prohibited.begin(), set.prohibited.end(),
                          std::back_inserter(both));
    for (const auto& e : both) {
        set.mandatory.erase(e);
        set.prohibited.erase(e);
        set.warnings.push_back("conflict: " + e.first + "->" + e.second +
                               " is both mandatory and prohibited; dropped from both sets");
    }
}

}  // namespace

const char* to_string(ConstraintKind kind) { return kind == ConstraintKind::Mandatory ? "MANDATORY" : "PROHIBITED"; }

std::optional<ConstraintKind> parse_constraint_kind(std::string_view text) {
    const auto t = upper(clean_name(text));
    if (t == "MANDATORY") return ConstraintKind::Mandatory;
    if (t == "PROHIBITED") return ConstraintKind::Prohibited;
    return std::nullopt;
}

PromptBundle build_prompt(std::span<const VariableSpec> specs) {
    if (specs.empty()) fail(ErrorKind::Parameter, "cannot build a prompt without variables");

    PromptBundle b;
    b.stages = {
        "Step 1 - Parameter classification: classify every variable as a control parameter, a measurement, or a "
        "performance metric.",
        "Step 2 - Causality tracing: for every pair of variables decide whether one directly influences the other, "
        "state the mechanism, and list the resulting candidate directed edges.",
        "Step 3 - Impossibility check: identify relationships that would violate temporal ordering, physics, or "
        "protocol behaviour (for example an effect driving its cause).",
        "Step 4 - Ranges: report the operating range of each variable.",
        "Step 5 - Verification: confirm each causal relationship against 3GPP specifications, explain the direction "
        "of causality and the mechanism involved, and discard anything you cannot justify.",
    };
    b.output_schema =
        "A single fenced ```json block containing an object {\"constraints\": [...], \"ranges\": [...]} where each "
        "constraint is {\"type\": \"MANDATORY\" | \"PROHIBITED\", \"source\": <variable>, \"target\": <variable>, "
        "\"reasoning\": <justification citing the 3GPP mechanism>} and each range is {\"variable\": <variable>, "
        "\"range\": <text>}. MANDATORY edges are causal relationships that must exist because of physical "
        "mechanisms, temporal ordering, or protocol specifications. PROHIBITED edges are relationships that would "
        "violate causality: effect-to-cause ordering, physically impossible mechanisms, or protocol violations. Use "
        "variable names exactly as listed.";

    std::ostringstream sys;
    sys << "You are a 5G radio access network expert analysing the causal structure between base-station "
           "configuration parameters, radio measurements, and key performance indicators.\n"
           "Operational context: telemetry is logged by a gNB while configuration parameters are swept; an edge "
           "A -> B means that actively changing A produces a measurable change in B.\n"
           "Classification guide: control parameters are set by the operator; measurements describe the radio "
           "channel; performance metrics are outcomes of the configuration and the channel.\n"
           "Reasoning approach: work through the steps in order, each building on the previous one, as a domain "
           "expert would when analysing parameter relationships from first principles. Every relation must be "
           "grounded in 3GPP specification behaviour.";
    b.system_text = sys.str();

    std::ostringstream user;
    user << "Variables (" << specs.size() << "):\n";
    for (const auto& s : specs) {
        const char* hint = s.role == Role::Config        ? "control parameter"
                           : s.role == Role::Measurement ? "measurement"
                                                         : "performance metric";
        user << "- " << s.name << " (" << hint;
        if (s.role == Role::Kpi && s.direction != Direction::Neutral)
            user << ", " << (s.direction == Direction::Benefit ? "higher is better" : "lower is better");
        user << ")\n";
    }
    if (specs.size() < 2) user << "Only one variable is listed, so there are no pairs to trace.\n";
    user << "\nReasoning and verification:\n";
    for (const auto& st : b.stages) user << st << "\n";
    user << "\nStructured output:\n" << b.output_schema << "\n";
    user << "\nConsistency check: before answering, make sure no edge is listed as both MANDATORY and PROHIBITED "
            "and that the MANDATORY edges contain no directed cycle.\n";
    b.user_text = user.str();
    return b;
}

ParsedConstraints parse_constraints(std::string_view text) {
    ParsedConstraints out;
    bool saw_json = false;
    for (const auto& block : fenced_blocks(text)) {
        try {
            auto j = nlohmann::json::parse(block);
            saw_json = true;
            collect_json(j, out);
        } catch (const nlohmann::json::parse_error&) {
            collect_table(block, out);
        }
    }
    if (!saw_json && out.records.empty()) {
        try {
            auto j = nlohmann::json::parse(text);
            saw_json = true;
            collect_json(j, out);
        } catch (const nlohmann::json::parse_error&) {
        }
    }
    if (!saw_json && out.records.empty()) collect_table(text, out);
    if (out.records.empty()) throw ParseError("no constraint records found in response: " + excerpt(text));
    return out;
}

ConstraintSet aggregate_votes(std::span<const std::vector<EdgeConstraint>> runs, const EnsembleParams& params) {
    const std::size_t n = std::max(params.n_runs, runs.size());
    std::map<Key, int> votes;
    std::map<Key, std::string> reasoning;
    for (const auto& run : runs) {
        std::set<Key> seen;
        for (const auto& c : run) {
            Key k{c.kind, c.source, c.target};
            if (c.source == c.target || !seen.insert(k).second) continue;
            ++votes[k];
            reasoning.emplace(k, c.reasoning);
        }
    }
    ConstraintSet set;
    for (const auto& [k, count] : votes) {
        if (static_cast<double>(count) <= params.vote_threshold * static_cast<double>(n)) continue;
        const auto& [kind, src, tgt] = k;
        (kind == ConstraintKind::Mandatory ? set.mandatory : set.prohibited).insert({src, tgt});
        set.provenance.push_back({kind, src, tgt, reasoning[k], count});
    }
    drop_conflicts(set);
    return set;
}

ConstraintSet validate_constraints(ConstraintSet set, std::optional<std::span<const VariableSpec>> specs) {
    auto known = [&](const std::string& name) {
        if (!specs) return true;
        return std::any_of(specs->begin(), specs->end(), [&](const auto& s) { return s.name == name; });
    };
    for (auto* edges : {&set.mandatory, &set.prohibited}) {
        for (auto it = edges->begin(); it != edges->end();) {
            if (it->first == it->second) {
                set.warnings.push_back("dropped self-loop constraint on " + it->first);
                it = edges->erase(it);
            } else if (!known(it->first) || !known(it->second)) {
                set.warnings.push_back("dropped constraint " + it->first + "->" + it->second +
                                       " referencing an unknown variable");
                it = edges->erase(it);
            } else {
                ++it;
            }
        }
    }
    drop_conflicts(set);

    std::vector<std::string> names;
    for (const auto& [u, v] : set.mandatory)
        for (const auto& n : {u, v})
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    Dag dag(names);
    for (const auto& [u, v] : set.mandatory) {
        try {
            dag.add_edge(u, v);
        } catch (const CycleError& e) {
            std::string cycle;
            for (std::size_t i = 0; i < e.path().size(); ++i) cycle += (i ? "->" : "") + e.path()[i];
            fail(ErrorKind::Unsatisfiable, "mandatory edges form a directed cycle: " + cycle);
        }
    }
    return set;
}

ConstraintSet parse_constraint_file(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, json_text.size()); ++i)
            if (json_text[i] == '\n') ++line;
        throw ParseError(std::string("constraint file is not valid JSON: ") + e.what(), line);
    }
    if (!j.is_array()) throw ParseError("constraint file must be a JSON array", 1);

    ConstraintSet set;
    std::map<Key, std::size_t> index;
    for (std::size_t i = 0; i < j.size(); ++i) {
        EdgeConstraint c;
        if (!record_from_json(j[i], c))
            throw ParseError("constraint record " + std::to_string(i) + " is malformed: " + j[i].dump());
        Key k{c.kind, c.source, c.target};
        if (auto it = index.find(k); it != index.end()) {
            set.provenance[it->second].votes += c.votes;
            continue;
        }
        index.emplace(k, set.provenance.size());
        (c.kind == ConstraintKind::Mandatory ? set.mandatory : set.prohibited).insert({c.source, c.target});
        set.provenance.push_back(std::move(c));
    }
    return validate_constraints(std::move(set));
}

ConstraintSet load_constraints(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open constraint file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_constraint_file(buffer.str());
}

nlohmann::json constraints_to_json(const ConstraintSet& set) {
    nlohmann::json out = nlohmann::json::array();
    for (auto kind : {ConstraintKind::Mandatory, ConstraintKind::Prohibited}) {
        const auto& edges = kind == ConstraintKind::Mandatory ? set.mandatory : set.prohibited;
        for (const auto& e : edges) {
            const auto* p = find_provenance(set, kind, e);
            out.push_back({{"type", to_string(kind)},
                           {"source", e.first},
                           {"target", e.second},
                           {"reasoning", p ? p->reasoning : ""},
                           {"votes", p ? p->votes : 1}});
        }
    }
    return out;
}

std::string save_constraints(const ConstraintSet& set) { return constraints_to_json(set).dump(2); }

}  // namespace ranbn
