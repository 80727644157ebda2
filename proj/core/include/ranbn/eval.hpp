#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranbn/dag.hpp"

namespace ranbn {

struct StructureMetrics {
    std::size_t correct = 0;
    std::size_t missed = 0;
    std::size_t reversed = 0;
    std::size_t extra = 0;
    std::size_t truth_edges = 0;
    double directional_accuracy = 0.0;  // correct / (correct + reversed), 0 if empty
    double recall = 0.0;                // correct / truth_edges, 0 if empty
};

// Edges are matched by node name, so the graphs may have different node sets.
StructureMetrics compare_structures(const Dag& learned, const Dag& truth);
StructureMetrics metrics_from_counts(std::size_t correct, std::size_t reversed, std::size_t missed, std::size_t extra = 0);

nlohmann::json metrics_to_json(const StructureMetrics& m);
// "Correct Miss Rev. Dir. Recall" table, one row per labelled run.
std::string metrics_table(const std::vector<std::pair<std::string, StructureMetrics>>& rows);

struct KpiSamples {
    std::string kpi;
    std::vector<double> values;
};

struct RunSamples {
    std::string label;
    std::vector<KpiSamples> kpis;
};

struct KpiSummary {
    std::string kpi;
    double mean = 0.0;
    double variance = 0.0;  // population variance
    double min = 0.0;
    double max = 0.0;
    // Empirical CDF steps: (value, fraction of samples <= value), distinct values ascending.
    std::vector<std::pair<double, double>> cdf;
    double improvement_pct = 0.0;  // mean vs the baseline run's mean for this KPI
};

struct RunSummary {
    std::string label;
    std::vector<KpiSummary> kpis;
};

struct KpiReport {
    std::string baseline;
    std::vector<RunSummary> runs;
};

double improvement_percent(double baseline_mean, double candidate_mean);

// Throws Parameter for an unknown baseline label or an empty sample vector.
KpiReport kpi_report(const std::vector<RunSamples>& runs, const std::string& baseline);
nlohmann::json report_to_json(const KpiReport& report);
// Long-format CSV: label,kpi,stat,x,y (summary rows and cdf rows).
std::string report_to_csv(const KpiReport& report);

}  // namespace ranbn
