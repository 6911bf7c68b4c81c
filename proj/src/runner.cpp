#include "semsteer/runner.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "semsteer/errors.hpp"
#include "semsteer/pipelines.hpp"

namespace semsteer {

using nlohmann::json;

std::string ResultRecord::key() const {
  return scenario_id + "/" + std::string(to_string(context)) + "/" + condition_name + "/" + model_name;
}

std::string cell_key(const std::string& scenario_id, Context context, const std::string& condition_name) {
  return scenario_id + "/" + std::string(to_string(context)) + "/" + condition_name;
}

json to_json(const ResultRecord& r) {
  json j = {{"scenario_id", r.scenario_id},
            {"context", std::string(to_string(r.context))},
            {"condition_name", r.condition_name},
            {"model_name", r.model_name},
            {"prompt_hash", r.prompt_hash},
            {"image_digests", r.image_digests},
            {"raw_response", r.raw_response}};
  if (r.judge) {
    j["judge"] = {{"scenario_id", r.judge->scenario_id},
                  {"context", std::string(to_string(r.judge->context))},
                  {"condition_name", r.judge->condition_name},
                  {"label", std::string(to_string(r.judge->label))},
                  {"rationale", r.judge->rationale},
                  {"judge_kind", std::string(to_string(r.judge->judge_kind))}};
  } else {
    j["judge"] = "unjudged";
  }
  j["timing_ms"] = r.timing_ms;
  j["run_id"] = r.run_id;
  j["trigger"] = r.trigger;
  if (r.error) j["error"] = *r.error;
  if (r.judge_error) j["judge_error"] = *r.judge_error;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

ResultRecord record_from_json(const json& j) {
  try {
    ResultRecord r;
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.context = parse_context(j.at("context").get<std::string>());
    r.condition_name = j.at("condition_name").get<std::string>();
    r.model_name = j.at("model_name").get<std::string>();
    r.prompt_hash = j.value("prompt_hash", "");
    r.image_digests = j.value("image_digests", std::vector<std::string>{});
    r.raw_response = j.value("raw_response", "");
    const json& jd = j.at("judge");
    if (jd.is_object()) {
      JudgedSample s;
      s.scenario_id = jd.at("scenario_id").get<std::string>();
      s.context = parse_context(jd.at("context").get<std::string>());
      s.condition_name = jd.at("condition_name").get<std::string>();
      const auto label = parse_label(jd.at("label").get<std::string>());
      if (!label) throw ParseError("unknown judge label");
      s.label = *label;
      s.rationale = jd.value("rationale", "");
      s.judge_kind = jd.value("judge_kind", "rule") == "llm" ? JudgeKind::Llm : JudgeKind::Rule;
      r.judge = s;
    } else if (!(jd.is_string() && jd.get<std::string>() == "unjudged")) {
      throw ParseError("judge must be an object or \"unjudged\"");
    }
    r.timing_ms = j.value("timing_ms", std::int64_t{0});
    r.run_id = j.value("run_id", "");
    r.trigger = j.value("trigger", "none");
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    if (j.contains("judge_error")) r.judge_error = j["judge_error"].get<std::string>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed result record: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("malformed result record: ") + e.what());
  }
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path, bool repair) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read results file " + path.string());
  std::vector<ResultRecord> out;
  std::string line;
  std::streamoff good_end = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const bool complete = !in.eof();
    if (line.empty()) {
      if (complete) good_end = in.tellg();
      continue;
    }
    const auto j = json::parse(line, nullptr, false);
    if (!complete || j.is_discarded()) {
      if (complete) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON line");
      break;  // truncated tail from an interrupted run
    }
    out.push_back(record_from_json(j));
    good_end = in.tellg();
  }
  if (repair) {
    in.close();
    if (std::filesystem::file_size(path) != static_cast<std::uintmax_t>(good_end)) {
      std::filesystem::resize_file(path, static_cast<std::uintmax_t>(good_end));
    }
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (spec.kind == BackendSpec::Kind::Mock) return std::make_unique<MockBackend>(ResponseScript::load(spec.script));
  return std::make_unique<HttpBackend>(HttpBackend::from_config(spec.endpoint));
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string generate_run_id() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  std::ostringstream os;
  os << "run-" << buf << "-" << std::hex << (std::random_device{}() & 0xFFFFu);
  return os.str();
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind() + ": " + err->what();
  return std::string("error: ") + e.what();
}

}  // namespace

Runner::Runner(RunConfig config, Dataset dataset, Backends backends)
    : config_(std::move(config)),
      dataset_(std::move(dataset)),
      backends_(backends),
      templates_(config_.templates_dir ? TemplateStore::load(*config_.templates_dir) : TemplateStore::defaults()) {
  if (!backends_.model) throw ConfigError("backend", "no model backend supplied");
  if (config_.judge.kind == JudgeSpec::Kind::Llm && !backends_.judge) {
    throw ConfigError("judge.backend", "llm judge selected but no judge backend supplied");
  }
}

DerivedInput Runner::derive(const Scenario& scenario, Context context, const Condition& condition) const {
  const Sample& sample = scenario.sample(context);
  const RgbImage base = load_image(sample);
  DerivedInput out;
  std::vector<Provenance> chain;
  RgbImage painted = base;

  if (condition.pipeline) {
    const PipelineSpec& p = *condition.pipeline;
    VariantImage v;
    switch (p.kind) {
      case PipelineSpec::Kind::Guardian: {
        if (!backends_.spotter) throw ConfigError("spotter", "guardian pipeline needs a spotter backend");
        const Prompt sp = render_spotter_prompt(scenario.instruction, base.width(), base.height(), config_.k, templates_);
        ChatRequest req;
        req.system_text = sp.system_text;
        req.user_text = attach_key(sp.user_text, cell_key(scenario.id, context, "spotter:" + condition.name));
        req.images = {base};
        req.model_name = config_.spotter ? config_.spotter->model_name : std::string();
        const ChatResponse reply = backends_.spotter->complete(req);
        SpotterResult sr = parse_spotter_output(reply.text, base.width(), base.height());
        out.warnings.insert(out.warnings.end(), sr.warnings.begin(), sr.warnings.end());
        if (config_.spotter_use_gt_boxes) substitute_ground_truth_boxes(sr.assessments, sample, out.warnings);
        v = guardian_intervene(sample, base, sr.assessments, config_.k);
        if (config_.spotter_use_gt_boxes) v.provenance.params["gt_boxes"] = "true";
        if (sr.assessments.empty()) out.warnings.push_back("guardian: no_assessments");
        break;
      }
      case PipelineSpec::Kind::Auditor: {
        const auto path = *config_.attention_dir / (scenario.id + "_" + std::string(to_string(context)) + ".json");
        v = auditor_intervene(sample, base, load_attention_map(path), p.auditor_variant, config_.k, p.border_margin);
        break;
      }
      case PipelineSpec::Kind::Attacker: {
        const auto task = sample.objects_with_role(ObjectRole::TaskRelevant);
        if (task.empty()) {
          throw MissingAnnotationError("attacker needs a task_relevant object in " + sample.id);
        }
        std::vector<AnnotatedObject> background;
        for (const auto* o : sample.objects_with_role(ObjectRole::Background)) background.push_back(*o);
        v = attacker_intervene(sample, base, *task.front(), background, p.attacker);
        if (background.empty()) out.warnings.push_back("attacker: no_distractors");
        break;
      }
    }
    painted = v.image;
    chain.push_back(std::move(v.provenance));
  } else if (condition.marker) {
    const auto targets = resolve_targets(sample, condition.marker->target);
    if (targets.size() == 1 && !condition.marker->filled) {
      VariantImage v = derive_color_variant(sample, base, *targets.front(), condition.marker->color);
      painted = std::move(v.image);
      chain.push_back(std::move(v.provenance));
    } else {
      std::vector<MarkerSpec> rings;
      std::string names;
      for (const auto* t : targets) {
        MarkerSpec m = ring_for_bbox(t->bbox, condition.marker->color, base.width(), base.height());
        m.filled = condition.marker->filled;
        rings.push_back(m);
        names += (names.empty() ? "" : ";") + t->name;
      }
      painted = overlay_markers(base, rings);
      Provenance prov{"markers", sample.id, {}, std::nullopt};
      prov.params["color"] = std::string(to_string(condition.marker->color));
      prov.params["objects"] = names;
      prov.params["markers"] = encode_markers(rings);
      chain.push_back(std::move(prov));
    }
  }

  if (condition.distractor) {
    const auto& d = *condition.distractor;
    const std::uint64_t seed = d.seed ^ (config_.seed * 0x9E3779B97F4A7C15ULL) ^ fnv1a(sample.id);
    VariantImage v = apply_distractor(sample, painted, d.kind, d.params, seed);
    painted = std::move(v.image);
    chain.push_back(std::move(v.provenance));
  }

  const AnnotatedObject* view_target = nullptr;
  if (condition.view_mode != ViewMode::Full) view_target = resolve_targets(sample, condition.view_target).front();
  out.views = build_context_views(sample, painted, condition.view_mode, view_target);
  for (const auto& view : out.views) {
    auto steps = chain;
    steps.push_back(view.image.provenance);
    out.steps.push_back(std::move(steps));
  }

  SteeringMode mode{condition.prompt.kind, condition.prompt.color, std::nullopt};
  if (mode.kind == SteeringMode::Kind::Mt) {
    mode.bbox = resolve_targets(sample, condition.prompt.region_target).front()->bbox;
  }
  out.prompt = render_prompt(scenario.instruction, mode, templates_);
  return out;
}

void Runner::judge_into(ResultRecord& rec, const Scenario& scenario) const {
  rec.judge.reset();
  rec.judge_error.reset();
  try {
    JudgedSample js;
    if (config_.judge.kind == JudgeSpec::Kind::Rule) {
      js = rule_judge(scenario.instruction, scenario.hazard_gt, rec.context, rec.raw_response);
    } else {
      js = llm_judge(*backends_.judge, config_.judge.backend->model_name, scenario.instruction, scenario.hazard_gt,
                     rec.context, rec.raw_response, cell_key(rec.scenario_id, rec.context, rec.condition_name),
                     templates_);
    }
    js.scenario_id = rec.scenario_id;
    js.condition_name = rec.condition_name;
    rec.judge = std::move(js);
  } catch (const std::exception& e) {
    rec.judge_error = describe(e);
  }
}

ResultRecord Runner::run_cell(const Scenario& scenario, Context context, const Condition& condition) const {
  ResultRecord rec;
  rec.scenario_id = scenario.id;
  rec.context = context;
  rec.condition_name = condition.name;
  rec.model_name = config_.backend.model_name;
  rec.trigger = condition.trigger_label();
  try {
    DerivedInput in = derive(scenario, context, condition);
    rec.warnings = in.warnings;
    rec.prompt_hash = sha256_hex(in.prompt.system_text + "\n\n" + in.prompt.user_text);
    ChatRequest req;
    req.system_text = in.prompt.system_text;
    req.user_text = attach_key(in.prompt.user_text, cell_key(scenario.id, context, condition.name));
    for (const auto& v : in.views) {
      rec.image_digests.push_back(image_digest(v.image.image));
      req.images.push_back(v.image.image);
    }
    req.model_name = config_.backend.model_name;
    req.max_tokens = config_.backend.endpoint.max_tokens;
    req.temperature = config_.backend.endpoint.temperature;
    const auto start = std::chrono::steady_clock::now();
    const ChatResponse reply = backends_.model->complete(req);
    rec.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    rec.raw_response = reply.text;
  } catch (const std::exception& e) {
    rec.error = describe(e);
    return rec;
  }
  judge_into(rec, scenario);
  return rec;
}

ResultRecord Runner::rejudge(const ResultRecord& record) const {
  ResultRecord rec = record;
  if (rec.error) return rec;
  const Scenario* sc = dataset_.find(rec.scenario_id);
  if (!sc) {
    rec.judge.reset();
    rec.judge_error = "scenario '" + rec.scenario_id + "' not in dataset";
    return rec;
  }
  judge_into(rec, *sc);
  return rec;
}

std::vector<ResultRecord> Runner::run() {
  namespace fs = std::filesystem;
  fs::create_directories(config_.output_dir);
  const auto path = results_path();

  std::vector<ResultRecord> existing;
  if (fs::exists(path)) existing = read_results(path, /*repair=*/true);
  std::set<std::string> done;
  for (const auto& r : existing) done.insert(r.key());
  std::string run_id = config_.run_id;
  if (run_id.empty()) run_id = existing.empty() ? generate_run_id() : existing.front().run_id;

  struct Cell {
    const Scenario* scenario;
    Context context;
    const Condition* condition;
  };
  std::vector<Cell> cells;
  for (const auto& sc : dataset_.scenarios) {
    for (Context ctx : {Context::Safe, Context::Unsafe}) {
      for (const auto& cond : config_.conditions) {
        const std::string key = cell_key(sc.id, ctx, cond.name) + "/" + config_.backend.model_name;
        if (!done.count(key)) cells.push_back({&sc, ctx, &cond});
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("io", "cannot open results file " + path.string());

  std::vector<std::optional<ResultRecord>> slots(cells.size());
  std::size_t next_write = 0;
  std::mutex writer;
  std::atomic<std::size_t> next_cell{0};

  auto worker = [&] {
    for (std::size_t i = next_cell++; i < cells.size(); i = next_cell++) {
      ResultRecord rec = run_cell(*cells[i].scenario, cells[i].context, *cells[i].condition);
      rec.run_id = run_id;
      std::lock_guard lock(writer);
      slots[i] = std::move(rec);
      while (next_write < slots.size() && slots[next_write]) {
        out << to_json(*slots[next_write]).dump() << '\n';
        out.flush();
        ++next_write;
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(config_.max_concurrency), std::max<std::size_t>(1, cells.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<ResultRecord> all = std::move(existing);
  for (auto& s : slots) all.push_back(std::move(*s));
  return all;
}

std::vector<ResultRecord> run_matrix(const RunConfig& config) {
  Dataset dataset = load_dataset(config.dataset);
  auto model = make_backend(config.backend);
  std::unique_ptr<Backend> judge, spotter;
  if (config.judge.kind == JudgeSpec::Kind::Llm) judge = make_backend(*config.judge.backend);
  if (config.spotter) spotter = make_backend(*config.spotter);
  Runner runner(config, std::move(dataset), {model.get(), judge.get(), spotter.get()});
  return runner.run();
}

std::size_t count_failures(const std::vector<ResultRecord>& records) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const ResultRecord& r) { return r.error || !r.judge; }));
}

}  // namespace semsteer
