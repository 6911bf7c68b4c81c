#include "semsteer/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "semsteer/errors.hpp"

namespace semsteer {

using nlohmann::json;

std::vector<MetricsReport> aggregate(const std::vector<ResultRecord>& records, const ReportOptions& options) {
  std::vector<std::string> models;
  std::vector<std::string> conditions = options.condition_order;
  std::map<std::pair<std::string, std::string>, LabelCounts> counts;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.key()).second) throw AggregationError("duplicate result for " + r.key());
    if (std::find(models.begin(), models.end(), r.model_name) == models.end()) models.push_back(r.model_name);
    if (std::find(conditions.begin(), conditions.end(), r.condition_name) == conditions.end()) {
      conditions.push_back(r.condition_name);
    }
    ContextCounts& c = counts[{r.model_name, r.condition_name}].of(r.context);
    if (r.judge && !r.error) {
      ++c[r.judge->label];
    } else {
      ++c.unjudged;
    }
  }
  if (models.empty()) models.emplace_back();
  std::vector<MetricsReport> out;
  for (const auto& m : models) {
    for (const auto& cond : conditions) {
      out.push_back(compute_metrics(counts[{m, cond}], cond, m, options.dataset_name));
    }
  }
  return out;
}

namespace {

std::string or_na(const std::string& s) { return s.empty() ? "n/a" : s; }

std::vector<std::string> model_order(const std::vector<MetricsReport>& reports) {
  std::vector<std::string> models;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.model_name) == models.end()) models.push_back(r.model_name);
  }
  return models;
}

const MetricsReport* find_report(const std::vector<MetricsReport>& reports, const std::string& model,
                                 const std::string& condition) {
  for (const auto& r : reports) {
    if (r.model_name == model && r.condition_name == condition) return &r;
  }
  return nullptr;
}

std::string fraction(const Rate& r) {
  if (!r) return "n/a";
  return std::to_string(r->numerator()) + "/" + std::to_string(r->denominator());
}

}  // namespace

std::string render_markdown(const std::vector<MetricsReport>& reports, const ReportOptions& options) {
  std::ostringstream os;
  os << "# Evaluation report\n\n";
  if (!options.dataset_name.empty()) os << "Dataset: " << options.dataset_name << "\n\n";
  const auto models = model_order(reports);
  if (reports.empty()) {
    os << "| condition | BRA | GSA | FRR | SSA | N_u | N_s | unjudged |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    os << "| n/a | n/a | n/a | n/a | n/a | 0 | 0 | 0 |\n";
    return os.str();
  }
  for (const auto& m : models) {
    os << "## Model: " << or_na(m) << "\n\n";
    os << "| condition | BRA | GSA | FRR | SSA | N_u | N_s | unjudged |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
      if (r.model_name != m) continue;
      os << "| " << or_na(r.condition_name) << " | " << render_percent(r.bra) << " | " << render_percent(r.gsa)
         << " | " << render_percent(r.frr) << " | " << render_percent(r.ssa) << " | " << r.counts.n_unsafe()
         << " | " << r.counts.n_safe() << " | " << r.counts.safe.unjudged + r.counts.unsafe.unjudged << " |\n";
    }
    os << "\n";
    const MetricsReport* base = find_report(reports, m, options.baseline);
    os << "### Change vs " << options.baseline << " (percentage points)\n\n";
    if (!base) {
      os << "Baseline condition '" << options.baseline << "' has no results.\n\n";
      continue;
    }
    os << "| condition | dBRA | dGSA | dFRR |\n|---|---|---|---|\n";
    for (const auto& r : reports) {
      if (r.model_name != m || r.condition_name == options.baseline) continue;
      const DeltaReport d = compute_condition_delta(r, *base);
      os << "| " << r.condition_name << " | " << render_delta(d.bra) << " | " << render_delta(d.gsa) << " | "
         << render_delta(d.frr) << " |\n";
    }
    os << "\n";
  }
  return os.str();
}

std::string render_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "model,condition,dataset,BRA,GSA,FRR,SSA,N_u,N_s,unjudged";
  for (const char* ctx : {"u", "s"}) {
    for (JudgeLabel l : kAllLabels) os << "," << to_string(l) << "_" << ctx;
  }
  os << "\n";
  for (const auto& r : reports) {
    os << r.model_name << "," << r.condition_name << "," << r.dataset_name << "," << render_percent(r.bra) << ","
       << render_percent(r.gsa) << "," << render_percent(r.frr) << "," << render_percent(r.ssa) << ","
       << r.counts.n_unsafe() << "," << r.counts.n_safe() << ","
       << r.counts.safe.unjudged + r.counts.unsafe.unjudged;
    for (const ContextCounts* c : {&r.counts.unsafe, &r.counts.safe}) {
      for (JudgeLabel l : kAllLabels) os << "," << (*c)[l];
    }
    os << "\n";
  }
  return os.str();
}

std::string render_delta_csv(const std::vector<MetricsReport>& reports, const ReportOptions& options) {
  std::ostringstream os;
  os << "model,condition,baseline,dBRA,dGSA,dFRR\n";
  for (const auto& m : model_order(reports)) {
    const MetricsReport* base = find_report(reports, m, options.baseline);
    if (!base) continue;
    for (const auto& r : reports) {
      if (r.model_name != m || r.condition_name == options.baseline) continue;
      const DeltaReport d = compute_condition_delta(r, *base);
      os << m << "," << r.condition_name << "," << options.baseline << "," << render_delta(d.bra) << ","
         << render_delta(d.gsa) << "," << render_delta(d.frr) << "\n";
    }
  }
  return os.str();
}

json metrics_json(const std::vector<MetricsReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json counts;
    for (auto [name, c] : {std::pair{"unsafe", &r.counts.unsafe}, std::pair{"safe", &r.counts.safe}}) {
      json jc;
      for (JudgeLabel l : kAllLabels) jc[std::string(to_string(l))] = (*c)[l];
      jc["unjudged"] = c->unjudged;
      counts[name] = jc;
    }
    arr.push_back({{"model", r.model_name},
                   {"condition", r.condition_name},
                   {"dataset", r.dataset_name},
                   {"BRA", render_percent(r.bra)},
                   {"GSA", render_percent(r.gsa)},
                   {"FRR", render_percent(r.frr)},
                   {"SSA", render_percent(r.ssa)},
                   {"exact", {{"BRA", fraction(r.bra)}, {"GSA", fraction(r.gsa)}, {"FRR", fraction(r.frr)},
                              {"SSA", fraction(r.ssa)}}},
                   {"counts", counts}});
  }
  return arr;
}

std::vector<std::filesystem::path> emit_report(const std::vector<ResultRecord>& records,
                                               const std::filesystem::path& out_dir, const ReportOptions& options) {
  std::filesystem::create_directories(out_dir);
  const auto reports = aggregate(records, options);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"report.md", render_markdown(reports, options)},
      {"report.csv", render_csv(reports)},
      {"deltas.csv", render_delta_csv(reports, options)},
      {"metrics.json", metrics_json(reports).dump(2) + "\n"},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << text;
    written.push_back(path);
  }
  return written;
}

}  // namespace semsteer
