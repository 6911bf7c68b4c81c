// semsteer command-line front end.
//
// Exit codes: 0 success, 1 some cells failed or went unjudged, 2 config or
// dataset error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "semsteer/config.hpp"
#include "semsteer/dataset.hpp"
#include "semsteer/errors.hpp"
#include "semsteer/raster.hpp"
#include "semsteer/report.hpp"
#include "semsteer/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semsteer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCellFailures = 1;
constexpr int kExitFatal = 2;

json provenance_json(const Provenance& p) {
  json j = {{"variant_kind", p.variant_kind}, {"base_sample_id", p.base_sample_id}, {"params", p.params}};
  if (p.seed) j["seed"] = *p.seed;
  return j;
}

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

void write_records(const std::vector<ResultRecord>& records, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + tmp.string());
    for (const auto& r : records) out << to_json(r).dump() << '\n';
  }
  fs::rename(tmp, path);
}

int exit_for(const std::vector<ResultRecord>& records) {
  const auto failed = count_failures(records);
  if (failed) std::cerr << failed << " of " << records.size() << " cells failed or are unjudged\n";
  return failed ? kExitCellFailures : kExitOk;
}

struct OwnedBackends {
  std::unique_ptr<Backend> model, judge, spotter;
  Backends view() const { return {model.get(), judge.get(), spotter.get()}; }
};

OwnedBackends build_backends(const RunConfig& config, bool need_model) {
  OwnedBackends b;
  if (need_model) b.model = make_backend(config.backend);
  if (config.judge.kind == JudgeSpec::Kind::Llm) b.judge = make_backend(*config.judge.backend);
  if (config.spotter) b.spotter = make_backend(*config.spotter);
  return b;
}

ReportOptions report_options(const RunConfig* config, const std::string& baseline) {
  ReportOptions o;
  o.baseline = baseline;
  if (config) {
    if (baseline.empty()) o.baseline = config->baseline;
    for (const auto& c : config->conditions) o.condition_order.push_back(c.name);
  }
  if (o.baseline.empty()) o.baseline = "IC";
  return o;
}

int cmd_dataset_validate(const fs::path& file) {
  const Dataset d = load_dataset(file);
  std::cout << "ok: " << d.scenarios.size() << " scenarios, " << d.sample_count() << " samples\n";
  return kExitOk;
}

int cmd_variants(const fs::path& config_path, const fs::path& out_dir) {
  const RunConfig config = load_run_config(config_path);
  Dataset dataset = load_dataset(config.dataset);
  OwnedBackends owned = build_backends(config, false);
  // derive() never calls the model backend, but the runner requires one.
  MockBackend placeholder(ResponseScript{});
  Backends b = owned.view();
  b.model = &placeholder;
  const Runner runner(config, std::move(dataset), b);

  fs::create_directories(out_dir);
  std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw Error("io", "cannot write manifest in " + out_dir.string());
  std::size_t failures = 0;
  for (const auto& sc : runner.dataset().scenarios) {
    for (Context ctx : {Context::Safe, Context::Unsafe}) {
      for (const auto& cond : config.conditions) {
        json line = {{"scenario_id", sc.id}, {"context", std::string(to_string(ctx))}, {"condition_name", cond.name}};
        try {
          const DerivedInput in = runner.derive(sc, ctx, cond);
          json views = json::array();
          for (std::size_t i = 0; i < in.views.size(); ++i) {
            const auto& v = in.views[i];
            const std::string name = file_safe(sc.id + "_" + std::string(to_string(ctx)) + "_" + cond.name + "_" +
                                               std::string(to_string(v.role))) + ".png";
            write_png(out_dir / name, v.image.image);
            json steps = json::array();
            for (const auto& p : in.steps[i]) steps.push_back(provenance_json(p));
            views.push_back({{"role", std::string(to_string(v.role))},
                             {"file", name},
                             {"digest", image_digest(v.image.image)},
                             {"provenance", steps}});
          }
          line["views"] = views;
          line["prompt_template_version"] = in.prompt.template_version;
          if (!in.warnings.empty()) line["warnings"] = in.warnings;
        } catch (const Error& e) {
          ++failures;
          line["error"] = e.kind() + ": " + e.what();
        }
        manifest << line.dump() << '\n';
      }
    }
  }
  if (failures) std::cerr << failures << " variant cells failed\n";
  return failures ? kExitCellFailures : kExitOk;
}

int cmd_run(const RunConfig& config) {
  const auto records = run_matrix(config);
  const auto paths = emit_report(records, config.output_dir, report_options(&config, config.baseline));
  std::cout << "results: " << (config.output_dir / "results.jsonl").string() << "\n";
  for (const auto& p : paths) std::cout << "report: " << p.string() << "\n";
  return exit_for(records);
}

int cmd_judge(const fs::path& run, const fs::path& config_path, const fs::path& out) {
  const RunConfig config = load_run_config(config_path);
  Dataset dataset = load_dataset(config.dataset);
  OwnedBackends owned = build_backends(config, false);
  MockBackend placeholder(ResponseScript{});
  Backends b = owned.view();
  b.model = &placeholder;
  const Runner runner(config, std::move(dataset), b);
  std::vector<ResultRecord> records;
  for (const auto& r : read_results(run)) records.push_back(runner.rejudge(r));
  write_records(records, out.empty() ? run : out);
  return exit_for(records);
}

int cmd_score(const fs::path& run, const fs::path& out, const std::string& baseline) {
  const auto records = read_results(run);
  const ReportOptions opts = report_options(nullptr, baseline);
  const auto reports = aggregate(records, opts);
  fs::create_directories(out);
  std::ofstream(out / "metrics.json", std::ios::binary) << metrics_json(reports).dump(2) << '\n';
  std::cout << render_markdown(reports, opts);
  return exit_for(records);
}

int cmd_report(const fs::path& run, const fs::path& out, const std::string& baseline) {
  const auto records = read_results(run);
  for (const auto& p : emit_report(records, out, report_options(nullptr, baseline))) {
    std::cout << "report: " << p.string() << "\n";
  }
  return exit_for(records);
}

int cmd_pipeline(const std::string& which, const fs::path& config_path) {
  RunConfig config = load_run_config(config_path);
  PipelineSpec::Kind kind = PipelineSpec::Kind::Guardian;
  if (which == "auditor") kind = PipelineSpec::Kind::Auditor;
  if (which == "attacker") kind = PipelineSpec::Kind::Attacker;

  std::vector<Condition> keep;
  for (const auto& c : config.conditions) {
    if ((c.pipeline && c.pipeline->kind == kind) || c.name == config.baseline) keep.push_back(c);
  }
  const bool has_pipeline =
      std::any_of(keep.begin(), keep.end(), [&](const Condition& c) { return c.pipeline.has_value(); });
  if (!has_pipeline) {
    auto add = [&](const std::string& name, PipelineSpec spec) {
      Condition c;
      c.name = name;
      c.prompt.kind = SteeringMode::Kind::IC;
      spec.kind = kind;
      c.pipeline = spec;
      keep.push_back(c);
    };
    if (kind == PipelineSpec::Kind::Auditor) {
      for (AuditorVariant v : {AuditorVariant::HotRed, AuditorVariant::ColdRed, AuditorVariant::HotWhite}) {
        PipelineSpec s;
        s.auditor_variant = v;
        add("auditor_" + std::string(to_string(v)), s);
      }
    } else {
      add(which, PipelineSpec{});
    }
  }
  config.conditions = std::move(keep);
  validate_run_config(config);
  return cmd_run(config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic steering evaluation harness"};
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
  dataset->require_subcommand(1);
  auto* validate = dataset->add_subcommand("validate", "Validate a dataset file");
  std::string dataset_file;
  validate->add_option("file", dataset_file, "Dataset JSON")->required();

  auto* variants = app.add_subcommand("variants", "Variant images");
  variants->require_subcommand(1);
  auto* generate = variants->add_subcommand("generate", "Write every derived view as PNG plus a manifest");
  std::string config_file, out_dir, run_file, baseline;
  generate->add_option("--config", config_file)->required();
  generate->add_option("--out", out_dir)->required();

  auto* run = app.add_subcommand("run", "Run the condition matrix");
  run->add_option("--config", config_file)->required();

  auto* judge = app.add_subcommand("judge", "Re-judge stored raw responses");
  judge->add_option("--run", run_file, "results.jsonl")->required();
  judge->add_option("--config", config_file)->required();
  judge->add_option("--out", out_dir, "Output JSONL (default: rewrite --run)");

  auto* score = app.add_subcommand("score", "Compute metrics from results");
  score->add_option("--run", run_file)->required();
  score->add_option("--out", out_dir)->required();
  score->add_option("--baseline", baseline, "Baseline condition for deltas (default IC)");

  auto* report = app.add_subcommand("report", "Write Markdown and CSV reports");
  report->add_option("--run", run_file)->required();
  report->add_option("--out", out_dir)->required();
  report->add_option("--baseline", baseline, "Baseline condition for deltas (default IC)");

  auto* pipeline = app.add_subcommand("pipeline", "Run one annotation pipeline");
  std::string which;
  pipeline->add_option("name", which)->required()->check(CLI::IsMember({"guardian", "auditor", "attacker"}));
  pipeline->add_option("--config", config_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_dataset_validate(dataset_file);
    if (generate->parsed()) return cmd_variants(config_file, out_dir);
    if (run->parsed()) return cmd_run(load_run_config(config_file));
    if (judge->parsed()) return cmd_judge(run_file, config_file, out_dir);
    if (score->parsed()) return cmd_score(run_file, out_dir, baseline);
    if (report->parsed()) return cmd_report(run_file, out_dir, baseline);
    if (pipeline->parsed()) return cmd_pipeline(which, config_file);
  } catch (const DatasetValidationError& e) {
    std::cerr << "dataset invalid:\n";
    for (const auto& v : e.report()) std::cerr << "  " << v.scenario_id << ": " << v.field << ": " << v.message << "\n";
    return kExitFatal;
  } catch (const Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
