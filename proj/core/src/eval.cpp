#include "ranbn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ranbn/errors.hpp"

namespace ranbn {

StructureMetrics metrics_from_counts(std::size_t correct, std::size_t reversed, std::size_t missed, std::size_t extra) {
    StructureMetrics m;
    m.correct = correct;
    m.reversed = reversed;
    m.missed = missed;
    m.extra = extra;
    m.truth_edges = correct + reversed + missed;
    m.directional_accuracy =
        correct + reversed == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(correct + reversed);
    m.recall = m.truth_edges == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m.truth_edges);
    return m;
}

StructureMetrics compare_structures(const Dag& learned, const Dag& truth) {
    const auto learned_edges = learned.named_edges();
    const std::set<NamedEdge> found(learned_edges.begin(), learned_edges.end());
    const auto truth_edges = truth.named_edges();
    const std::set<NamedEdge> expected(truth_edges.begin(), truth_edges.end());

    std::size_t correct = 0, reversed = 0, missed = 0, extra = 0;
    for (const auto& [u, v] : expected) {
        if (found.count({u, v}))
            ++correct;
        else if (found.count({v, u}))
            ++reversed;
        else
            ++missed;
    }
    for (const auto& [u, v] : found)
        if (!expected.count({u, v}) && !expected.count({v, u})) ++extra;
    return metrics_from_counts(correct, reversed, missed, extra);
}

nlohmann::json metrics_to_json(const StructureMetrics& m) {
    return {{"correct", m.correct},   {"missed", m.missed},
            {"reversed", m.reversed}, {"extra", m.extra},
            {"truth_edges", m.truth_edges}, {"directional_accuracy", m.directional_accuracy},
            {"recall", m.recall}};
}

std::string metrics_table(const std::vector<std::pair<std::string, StructureMetrics>>& rows) {
    std::size_t width = 5;
    for (const auto& [label, _] : rows) width = std::max(width, label.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Run" << std::right << std::setw(9) << "Correct"
        << std::setw(6) << "Miss" << std::setw(6) << "Rev." << std::setw(7) << "Dir." << std::setw(8) << "Recall"
        << '\n';
    out << std::fixed << std::setprecision(2);
    for (const auto& [label, m] : rows)
        out << std::left << std::setw(static_cast<int>(width)) << label << std::right << std::setw(9) << m.correct
            << std::setw(6) << m.missed << std::setw(6) << m.reversed << std::setw(7) << m.directional_accuracy
            << std::setw(8) << m.recall << '\n';
    return out.str();
}

double improvement_percent(double baseline_mean, double candidate_mean) {
    if (baseline_mean == 0.0) return candidate_mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), candidate_mean);
    return 100.0 * (candidate_mean - baseline_mean) / std::abs(baseline_mean);
}

namespace {

KpiSummary summarize(const KpiSamples& s) {
    if (s.values.empty()) fail(ErrorKind::Parameter, "KPI '" + s.kpi + "' has no samples");
    KpiSummary k;
    k.kpi = s.kpi;
    const double n = static_cast<double>(s.values.size());
    for (double v : s.values) k.mean += v;
    k.mean /= n;
    for (double v : s.values) k.variance += (v - k.mean) * (v - k.mean);
    k.variance /= n;
    auto sorted = s.values;
    std::sort(sorted.begin(), sorted.end());
    k.min = sorted.front();
    k.max = sorted.back();
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i])
            k.cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    return k;
}

}  // namespace

KpiReport kpi_report(const std::vector<RunSamples>& runs, const std::string& baseline) {
    auto base = std::find_if(runs.begin(), runs.end(), [&](const RunSamples& r) { return r.label == baseline; });
    if (base == runs.end()) fail(ErrorKind::Parameter, "unknown baseline label '" + baseline + "'");
    KpiReport report;
    report.baseline = baseline;
    std::map<std::string, double> base_means;
    for (const auto& k : base->kpis) base_means[k.kpi] = summarize(k).mean;
    for (const auto& run : runs) {
        if (run.kpis.empty()) fail(ErrorKind::Parameter, "run '" + run.label + "' has no KPI samples");
        RunSummary rs{run.label, {}};
        for (const auto& k : run.kpis) {
            auto s = summarize(k);
            if (auto it = base_means.find(k.kpi); it != base_means.end())
                s.improvement_pct = improvement_percent(it->second, s.mean);
            rs.kpis.push_back(std::move(s));
        }
        report.runs.push_back(std::move(rs));
    }
    return report;
}

nlohmann::json report_to_json(const KpiReport& report) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.runs) {
        nlohmann::json kpis = nlohmann::json::array();
        for (const auto& k : r.kpis) {
            nlohmann::json cdf = nlohmann::json::array();
            for (const auto& [x, y] : k.cdf) cdf.push_back({x, y});
            kpis.push_back({{"kpi", k.kpi},
                            {"mean", k.mean},
                            {"variance", k.variance},
                            {"min", k.min},
                            {"max", k.max},
                            {"improvement_pct", k.improvement_pct},
                            {"cdf", cdf}});
        }
        runs.push_back({{"label", r.label}, {"kpis", kpis}});
    }
    return {{"baseline", report.baseline}, {"runs", runs}};
}

std::string report_to_csv(const KpiReport& report) {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "label,kpi,stat,x,y\n";
    for (const auto& r : report.runs)
        for (const auto& k : r.kpis) {
            out << r.label << ',' << k.kpi << ",mean," << k.mean << ",\n";
            out << r.label << ',' << k.kpi << ",variance," << k.variance << ",\n";
            out << r.label << ',' << k.kpi << ",min," << k.min << ",\n";
            out << r.label << ',' << k.kpi << ",max," << k.max << ",\n";
            out << r.label << ',' << k.kpi << ",improvement_pct," << k.improvement_pct << ",\n";
            for (const auto& [x, y] : k.cdf) out << r.label << ',' << k.kpi << ",cdf," << x << ',' << y << '\n';
        }
    return out.str();
}

}  // namespace ranbn
