#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semsteer/backend.hpp"
#include "semsteer/config.hpp"
#include "semsteer/dataset.hpp"
#include "semsteer/judge.hpp"
#include "semsteer/templates.hpp"
#include "semsteer/visual.hpp"

namespace semsteer {

struct ResultRecord {
  std::string scenario_id;
  Context context = Context::Safe;
  std::string condition_name;
  std::string model_name;
  std::string prompt_hash;
  std::vector<std::string> image_digests;
  std::string raw_response;
  std::optional<JudgedSample> judge;  // nullopt serializes as "unjudged"
  std::int64_t timing_ms = 0;
  std::string run_id;
  std::string trigger;
  std::optional<std::string> error;        // derivation or backend failure
  std::optional<std::string> judge_error;  // reply could not be judged
  std::vector<std::string> warnings;

  std::string key() const;  // scenario/context/condition/model
};

nlohmann::json to_json(const ResultRecord& r);
ResultRecord record_from_json(const nlohmann::json& j);

// Reads a results file. A truncated trailing line is ignored; with
// `repair` the file is cut back to the last complete record.
std::vector<ResultRecord> read_results(const std::filesystem::path& path, bool repair = false);

// Lookup key embedded in prompts for the scripted mock backend.
std::string cell_key(const std::string& scenario_id, Context context, const std::string& condition_name);

struct Backends {
  Backend* model = nullptr;
  Backend* judge = nullptr;    // required for llm judging
  Backend* spotter = nullptr;  // required by guardian conditions
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

// Everything sent to the model for one (sample, condition) cell.
struct DerivedInput {
  ViewSet views;
  std::vector<std::vector<Provenance>> steps;  // replay chain per view
  SteeringPrompt prompt;
  std::vector<std::string> warnings;
};

class Runner {
 public:
  Runner(RunConfig config, Dataset dataset, Backends backends);

  const RunConfig& config() const noexcept { return config_; }
  const Dataset& dataset() const noexcept { return dataset_; }

  DerivedInput derive(const Scenario& scenario, Context context, const Condition& condition) const;
  ResultRecord run_cell(const Scenario& scenario, Context context, const Condition& condition) const;

  // Re-judges a stored record with the configured judge.
  ResultRecord rejudge(const ResultRecord& record) const;

  // Runs every (scenario x context x condition) cell, appending to
  // output_dir/results.jsonl in matrix order. Keys already in the file are
  // skipped. Returns all records of the run, including resumed ones.
  std::vector<ResultRecord> run();

  std::filesystem::path results_path() const { return config_.output_dir / "results.jsonl"; }

 private:
  void judge_into(ResultRecord& rec, const Scenario& scenario) const;

  RunConfig config_;
  Dataset dataset_;
  Backends backends_;
  TemplateStore templates_;
};

// Loads the dataset and builds backends from the config, then runs.
std::vector<ResultRecord> run_matrix(const RunConfig& config);

// Records whose cells failed or could not be judged.
std::size_t count_failures(const std::vector<ResultRecord>& records);

}  // namespace semsteer
