#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "semsteer/metrics.hpp"
#include "semsteer/runner.hpp"

namespace semsteer {

struct ReportOptions {
  std::string baseline = "IC";
  std::vector<std::string> condition_order;  // conditions listed even without records
  std::string dataset_name;
};

// One MetricsReport per (model, condition), models in first-seen order,
// conditions in `condition_order` then first-seen order. Unjudged and
// failed records count toward the unjudged tallies only.
std::vector<MetricsReport> aggregate(const std::vector<ResultRecord>& records, const ReportOptions& options);

std::string render_markdown(const std::vector<MetricsReport>& reports, const ReportOptions& options);
std::string render_csv(const std::vector<MetricsReport>& reports);
std::string render_delta_csv(const std::vector<MetricsReport>& reports, const ReportOptions& options);
nlohmann::json metrics_json(const std::vector<MetricsReport>& reports);

// Writes report.md, report.csv, deltas.csv and metrics.json; returns the
// written paths.
std::vector<std::filesystem::path> emit_report(const std::vector<ResultRecord>& records,
                                               const std::filesystem::path& out_dir,
                                               const ReportOptions& options = {});

}  // namespace semsteer
