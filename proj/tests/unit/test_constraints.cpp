#include <gtest/gtest.h>

#include <fstream>

#include "ranbn/constraints.hpp"
#include "ranbn/errors.hpp"
#include "ranbn/llm_client.hpp"
#include "test_support.hpp"

using namespace ranbn;

namespace {

std::vector<VariableSpec> nomenclature() {
    std::ifstream in(ranbn::testing::fixture_path("variables.json"));
    const auto j = nlohmann::json::parse(in);
    std::vector<VariableSpec> specs;
    for (const auto& v : j.at("variables")) specs.push_back(variable_spec_from_json(v));
    return specs;
}

EdgeConstraint mandatory(std::string s, std::string t) { return {ConstraintKind::Mandatory, std::move(s), std::move(t), "", 1}; }
EdgeConstraint prohibited(std::string s, std::string t) { return {ConstraintKind::Prohibited, std::move(s), std::move(t), "", 1}; }

}  // namespace

TEST(Prompt, EnumeratesEveryVariableWithRoleHints) {
    const auto specs = nomenclature();
    const auto b = build_prompt(specs);
    for (const auto& s : specs) EXPECT_NE(b.user_text.find(s.name), std::string::npos) << s.name;
    EXPECT_NE(b.user_text.find("p0_nominal (control parameter)"), std::string::npos);
    EXPECT_NE(b.user_text.find("UL_Mbps (performance metric, higher is better)"), std::string::npos);
    EXPECT_NE((b.system_text + b.user_text + b.output_schema).find("MANDATORY"), std::string::npos);
    EXPECT_NE((b.system_text + b.user_text + b.output_schema).find("PROHIBITED"), std::string::npos);
    EXPECT_EQ(b.stages.size(), 5u);
}

TEST(Prompt, SingleVariableStillBuilds) {
    const auto specs = nomenclature();
    const auto b = build_prompt(std::span(specs).first(1));
    EXPECT_NE(b.user_text.find("p0_nominal"), std::string::npos);
    EXPECT_EQ(b.stages.size(), 5u);
}

TEST(Prompt, Deterministic) {
    const auto specs = nomenclature();
    const auto a = build_prompt(specs), b = build_prompt(specs);
    EXPECT_EQ(a.system_text, b.system_text);
    EXPECT_EQ(a.user_text, b.user_text);
    EXPECT_EQ(prompt_hash(a), prompt_hash(b));
}

TEST(Parse, FencedJsonRecords) {
    const auto p = parse_constraints(
        "Reasoning...\n```json\n[{\"type\": \"MANDATORY\", \"source\": \"p0_nominal\", \"target\": \"RSRP\", "
        "\"reasoning\": \"power\"},\n {\"type\": \"PROHIBITED\", \"source\": \"UL_Mbps\", \"target\": \"p0_nominal\", "
        "\"reasoning\": \"outcome\"}]\n```\n");
    ASSERT_EQ(p.records.size(), 2u);
    EXPECT_EQ(p.records[0].kind, ConstraintKind::Mandatory);
    EXPECT_EQ(p.records[0].source, "p0_nominal");
    EXPECT_EQ(p.records[0].target, "RSRP");
    EXPECT_EQ(p.records[1].kind, ConstraintKind::Prohibited);
    EXPECT_EQ(p.records[1].source, "UL_Mbps");
}

TEST(Parse, SelfLoopIsMalformed) {
    const auto p = parse_constraints(
        "[{\"type\": \"MANDATORY\", \"source\": \"SNR\", \"target\": \"SNR\"}, "
        "{\"type\": \"MANDATORY\", \"source\": \"RSRP\", \"target\": \"SNR\"}]");
    EXPECT_EQ(p.records.size(), 1u);
    EXPECT_EQ(p.malformed_count, 1u);
}

TEST(Parse, PipeTable) {
    const auto p = parse_constraints("| TYPE | SOURCE | TARGET |\n|---|---|---|\n| PROHIBITED | UL\\_BLER | p0\\_nominal |\n");
    ASSERT_EQ(p.records.size(), 1u);
    EXPECT_EQ(p.records[0].source, "UL_BLER");
}

TEST(Parse, RangesAreKept) {
    const auto p = parse_constraints(
        "```json\n{\"constraints\": [{\"type\": \"MANDATORY\", \"source\": \"a\", \"target\": \"b\"}], "
        "\"ranges\": [{\"variable\": \"a\", \"range\": \"0..1\"}]}\n```");
    ASSERT_EQ(p.ranges.size(), 1u);
    EXPECT_EQ(p.ranges[0].range, "0..1");
}

TEST(Parse, NoRecordsIsParseError) {
    try {
        parse_constraints("I could not decide.");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}

TEST(Aggregate, ThreeOfFiveIsRetainedWithVotes) {
    std::vector<std::vector<EdgeConstraint>> runs(5);
    for (int i = 0; i < 3; ++i) runs[static_cast<std::size_t>(i)].push_back(mandatory("A", "B"));
    const auto set = aggregate_votes(runs, {5, 0.5});
    EXPECT_EQ(set.mandatory, (std::set<NamedEdge>{{"A", "B"}}));
    ASSERT_EQ(set.provenance.size(), 1u);
    EXPECT_EQ(set.provenance[0].votes, 3);
}

TEST(Aggregate, TwoOfFourIsNotAStrictMajority) {
    std::vector<std::vector<EdgeConstraint>> runs(4);
    runs[0].push_back(mandatory("A", "B"));
    runs[1].push_back(mandatory("A", "B"));
    EXPECT_TRUE(aggregate_votes(runs, {4, 0.5}).mandatory.empty());
}

TEST(Aggregate, DuplicateWithinOneRunCountsOnce) {
    std::vector<std::vector<EdgeConstraint>> runs(3);
    runs[0] = {mandatory("A", "B"), mandatory("A", "B")};
    EXPECT_TRUE(aggregate_votes(runs, {3, 0.5}).mandatory.empty());
}

TEST(Aggregate, MandatoryProhibitedConflictDropsBoth) {
    std::vector<std::vector<EdgeConstraint>> runs(5);
    for (std::size_t i = 0; i < 3; ++i) runs[i] = {mandatory("A", "B"), prohibited("A", "B")};
    const auto set = aggregate_votes(runs, {5, 0.5});
    EXPECT_TRUE(set.mandatory.empty());
    EXPECT_TRUE(set.prohibited.empty());
    EXPECT_FALSE(set.warnings.empty());
}

TEST(Validate, AcyclicMandatorySetUnchanged) {
    ConstraintSet s;
    s.mandatory = {{"A", "B"}, {"B", "C"}};
    EXPECT_EQ(validate_constraints(s).mandatory, s.mandatory);
}

TEST(Validate, TwoCycleIsUnsatisfiable) {
    ConstraintSet s;
    s.mandatory = {{"A", "B"}, {"B", "A"}};
    try {
        validate_constraints(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Unsatisfiable);
    }
}

TEST(Validate, UnknownVariableDroppedWithWarning) {
    const auto specs = nomenclature();
    ConstraintSet s;
    s.mandatory = {{"CQI2", "SNR"}, {"RSRP", "SNR"}};
    const auto v = validate_constraints(s, std::span<const VariableSpec>(specs));
    EXPECT_EQ(v.mandatory, (std::set<NamedEdge>{{"RSRP", "SNR"}}));
    ASSERT_EQ(v.warnings.size(), 1u);
    EXPECT_NE(v.warnings[0].find("CQI2"), std::string::npos);
}

TEST(ConstraintFile, FourTableRows) {
    const auto s = load_constraints(ranbn::testing::fixture_path("table1_constraints.json"));
    EXPECT_EQ(s.mandatory.size(), 2u);
    EXPECT_EQ(s.prohibited.size(), 2u);
    EXPECT_TRUE(s.mandatory.count({"p0_nominal", "RSRP"}));
    EXPECT_TRUE(s.prohibited.count({"UL_Mbps", "p0_nominal"}));
}

TEST(ConstraintFile, EmptyArray) { EXPECT_TRUE(parse_constraint_file("[]").empty()); }

TEST(ConstraintFile, DuplicatesMergeAndSumVotes) {
    const auto s = parse_constraint_file(
        R"([{"type":"MANDATORY","source":"A","target":"B","votes":2},{"type":"MANDATORY","source":"A","target":"B","votes":3}])");
    EXPECT_EQ(s.mandatory.size(), 1u);
    ASSERT_EQ(s.provenance.size(), 1u);
    EXPECT_EQ(s.provenance[0].votes, 5);
}

TEST(ConstraintFile, RoundTrip) {
    const auto s = load_constraints(ranbn::testing::fixture_path("table1_constraints.json"));
    const auto back = parse_constraint_file(save_constraints(s));
    EXPECT_TRUE(back.same_edges(s));
}

TEST(ConstraintFile, MalformedRecordIsParseError) {
    try {
        parse_constraint_file(R"([{"type":"MAYBE","source":"A","target":"B"}])");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}

TEST(Elicit, FixtureEnsembleKeepsStrictMajority) {
    const auto specs = nomenclature();
    FixtureProvider provider(ranbn::testing::fixture_path("llm_table1"));
    const auto result = elicit_constraints(specs, provider, {5, 0.5});
    EXPECT_EQ(result.constraints.mandatory, (std::set<NamedEdge>{{"p0_nominal", "RSRP"}, {"RSRP", "SNR"}}));
    EXPECT_EQ(result.constraints.prohibited, (std::set<NamedEdge>{{"UL_Mbps", "p0_nominal"}}));
    EXPECT_EQ(result.failed_parses, 0u);
}

TEST(Elicit, CyclicMajorityIsUnsatisfiable) {
    const auto specs = nomenclature();
    FixtureProvider provider(ranbn::testing::fixture_path("llm_cycle"));
    try {
        elicit_constraints(specs, provider, {5, 0.5});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Unsatisfiable);
        EXPECT_NE(std::string(e.what()).find("p0_nominal"), std::string::npos);
    }
}
