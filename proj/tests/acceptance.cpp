// Acceptance gate: prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "semsteer/config.hpp"
#include "semsteer/errors.hpp"
#include "semsteer/report.hpp"
#include "semsteer/runner.hpp"
#include "support.hpp"

using namespace semsteer;
using nlohmann::json;
using testsupport::fixture;
namespace fs = std::filesystem;

namespace {

// A check returns an empty string on success, else the first failure.
using Check = std::function<std::string()>;

struct Criterion {
  std::string name;
  double limit_s;  // 0: no runtime limit
  Check check;
};

std::string fail_at(const std::string& what, int trial) { return what + " (trial " + std::to_string(trial) + ")"; }

std::string score_mapping() {
  int last_rank = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double s = i / 1000.0;
    const MarkerColor want = i > 800 ? MarkerColor::Red : i > 400 ? MarkerColor::Orange : MarkerColor::White;
    const MarkerColor got = marker_for_score(s);
    if (got != want) return "s=" + std::to_string(s) + " gave " + std::string(to_string(got));
    if (danger_rank(got) < last_rank) return "danger rank decreases at s=" + std::to_string(s);
    last_rank = danger_rank(got);
  }
  if (marker_for_score(0.8) != MarkerColor::Orange) return "0.8 is not Orange";
  if (marker_for_score(0.4) != MarkerColor::White) return "0.4 is not White";
  return "";
}

std::string metric_oracle() {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<int> size(1, 200), label(0, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<JudgeLabel> unsafe(static_cast<std::size_t>(size(rng))), safe(static_cast<std::size_t>(size(rng)));
    LabelCounts counts;
    for (auto& l : unsafe) ++counts.unsafe[l = kAllLabels[static_cast<std::size_t>(label(rng))]];
    for (auto& l : safe) ++counts.safe[l = kAllLabels[static_cast<std::size_t>(label(rng))]];
    const auto o = testsupport::oracle_rates(unsafe, safe);
    const MetricsReport r = compute_metrics(counts);
    if (!r.bra || !r.gsa || !r.frr || !r.ssa) return fail_at("undefined rate", trial);
    if (*r.bra != Rational(o.bra_num, o.n_u)) return fail_at("bra mismatch", trial);
    if (*r.gsa != Rational(o.gsa_num, o.n_u)) return fail_at("gsa mismatch", trial);
    if (*r.frr != Rational(o.frr_num, o.n_s)) return fail_at("frr mismatch", trial);
    if (*r.ssa != Rational(o.ssa_num, o.n_s)) return fail_at("ssa mismatch", trial);
    if (*r.frr + *r.ssa != Rational(1)) return fail_at("frr + ssa != 1", trial);
    if (*r.gsa > *r.bra) return fail_at("gsa > bra", trial);
  }
  return "";
}

std::string reference_values() {
  const std::string bra = render_percent(Rational(23, 67));
  if (bra != "34.3") return "23/67 rendered " + bra;
  LabelCounts a, b;
  a.unsafe[JudgeLabel::CG] = 50;
  a.unsafe[JudgeLabel::UC] = 17;
  b.unsafe[JudgeLabel::CG] = 37;
  b.unsafe[JudgeLabel::UC] = 30;
  const auto ra = compute_metrics(a, "ICF"), rb = compute_metrics(b, "IC");
  if (render_percent(ra.bra) != "74.6" || render_percent(rb.bra) != "55.2") {
    return "inputs render " + render_percent(ra.bra) + " / " + render_percent(rb.bra);
  }
  const std::string d = render_delta(compute_condition_delta(ra, rb).bra);
  if (d != "+19.4") return "delta rendered " + d;
  return "";
}

std::string overlay_locality() {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = std::uniform_int_distribution<int>(16, 128)(rng);
    const int h = std::uniform_int_distribution<int>(16, 128)(rng);
    const RgbImage base = testsupport::random_image(rng, w, h);
    MarkerSpec m;
    m.stroke_width = std::uniform_int_distribution<int>(1, 8)(rng);
    m.radius = std::uniform_int_distribution<int>(m.stroke_width, std::max(w, h))(rng);
    m.cx = std::uniform_int_distribution<int>(-w / 4, w + w / 4)(rng);
    m.cy = std::uniform_int_distribution<int>(-h / 4, h + h / 4)(rng);
    m.color = kAllMarkerColors[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 4)(rng))];
    m.filled = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    const RgbImage out = overlay_markers(base, {m});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (out.at(x, y) == base.at(x, y)) continue;
        const double d = std::hypot(x - m.cx, y - m.cy);
        const double s = m.stroke_width;
        const bool inside = m.filled ? d <= m.radius + s : std::fabs(d - m.radius) <= s / 2 + s;
        if (!inside) return fail_at("pixel changed outside the predicted footprint", trial);
        if (out.at(x, y) != marker_rgb(m.color)) return fail_at("changed pixel is not the marker color", trial);
      }
    }
  }
  return "";
}

std::string attention_selection() {
  std::mt19937_64 rng(100);
  std::uniform_int_distribution<int> v(0, 19);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 == 0 ? 5 : 8;
    AttentionMap m{n, n, {}, 64, 48};
    for (int i = 0; i < n * n; ++i) m.values.push_back(v(rng) / 19.0);
    for (double margin : {0.0, 0.1, 0.25}) {
      const auto em = suppress_borders(m, margin);
      for (bool hot : {true, false}) {
        const auto sel = select_attention_regions(em, 3, hot ? RegionKind::Hot : RegionKind::Cold);
        if (sel.cells != testsupport::oracle_select(em, 3, hot)) return fail_at("differs from greedy oracle", trial);
        for (std::size_t i = 0; i < sel.cells.size(); ++i) {
          if (testsupport::oracle_in_border(sel.cells[i].row, sel.cells[i].col, n, n, margin)) {
            return fail_at("selected a border cell", trial);
          }
          for (std::size_t j = 0; j < i; ++j) {
            if (chebyshev(sel.cells[i], sel.cells[j]) < 1) return fail_at("cells closer than 1", trial);
          }
        }
      }
    }
  }
  return "";
}

std::string attacker_geometry() {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = std::uniform_int_distribution<int>(64, 200)(rng);
    const int h = std::uniform_int_distribution<int>(64, 200)(rng);
    auto box = [&] {
      const int bw = std::uniform_int_distribution<int>(2, w / 4)(rng);
      const int bh = std::uniform_int_distribution<int>(2, h / 4)(rng);
      const int x = std::uniform_int_distribution<int>(0, w - bw)(rng);
      const int y = std::uniform_int_distribution<int>(0, h - bh)(rng);
      return BBox{x, y, x + bw, y + bh};
    };
    Sample s;
    s.id = "synthetic" + std::to_string(trial) + "/unsafe";
    s.context = Context::Unsafe;
    s.image_width = w;
    s.image_height = h;
    const AnnotatedObject main{"main", box(), ObjectRole::TaskRelevant};
    s.objects.push_back(main);
    std::vector<AnnotatedObject> bg;
    const int n_bg = std::uniform_int_distribution<int>(0, 5)(rng);
    while (static_cast<int>(bg.size()) < n_bg) {
      const BBox b = box();
      if (b.intersects(main.bbox)) continue;
      bg.push_back({"bg" + std::to_string(bg.size()), b, ObjectRole::Background});
      s.objects.push_back(bg.back());
    }
    AttackerOptions opt;
    opt.distractor_count = std::uniform_int_distribution<int>(0, 5)(rng);
    const auto v = attacker_intervene(s, RgbImage(w, h), main, bg, opt);
    const auto ms = decode_markers(v.provenance.params.at("markers"));
    const std::size_t want = std::min(static_cast<std::size_t>(opt.distractor_count), bg.size());
    if (ms.empty() || ms.size() - 1 != want) return fail_at("red ring count", trial);
    if (ms[0].color != MarkerColor::White || !main.bbox.contains(ms[0].cx, ms[0].cy)) {
      return fail_at("white ring not centered in main box", trial);
    }
    for (std::size_t i = 1; i < ms.size(); ++i) {
      if (ms[i].color != MarkerColor::Red || main.bbox.contains(ms[i].cx, ms[i].cy)) {
        return fail_at("red ring centered in main box", trial);
      }
    }
  }
  return "";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string stripped(const fs::path& p) {
  std::ifstream in(p);
  std::string line, out;
  while (std::getline(in, line)) {
    auto j = json::parse(line);
    j.erase("timing_ms");
    j.erase("run_id");
    out += j.dump() + "\n";
  }
  return out;
}

std::string fraction(const Rate& r) {
  return r ? std::to_string(r->numerator()) + "/" + std::to_string(r->denominator()) : "n/a";
}

std::string end_to_end() {
  const json golden = json::parse(read_file(fixture("golden_e2e.json")));
  RunConfig config = load_run_config(fixture("config_e2e.json"));
  const auto a = testsupport::temp_dir("accept_a"), b = testsupport::temp_dir("accept_b");
  config.output_dir = a;
  const auto records = run_matrix(config);
  config.output_dir = b;
  run_matrix(config);
  struct Cleanup {
    fs::path a, b;
    ~Cleanup() {
      fs::remove_all(a);
      fs::remove_all(b);
    }
  } cleanup{a, b};

  if (records.size() != golden["records"].get<std::size_t>()) return std::to_string(records.size()) + " records";
  if (stripped(a / "results.jsonl") != stripped(b / "results.jsonl")) return "runs differ";

  const auto reports = aggregate(records, {});
  if (reports.size() != golden["conditions"].size()) return "unexpected report count";
  const MetricsReport* baseline = nullptr;
  for (const auto& r : reports) {
    if (r.condition_name == golden["baseline"]) baseline = &r;
  }
  if (!baseline) return "baseline missing";
  for (const auto& r : reports) {
    if (r.model_name != golden["model"]) return "model name " + r.model_name;
    if (!golden["conditions"].contains(r.condition_name)) return "unexpected condition " + r.condition_name;
    const json& g = golden["conditions"][r.condition_name];
    for (JudgeLabel l : kAllLabels) {
      const std::string ls(to_string(l));
      if (r.counts.unsafe[l] != g["unsafe"][ls].get<std::int64_t>() ||
          r.counts.safe[l] != g["safe"][ls].get<std::int64_t>()) {
        return r.condition_name + ": count of " + ls;
      }
    }
    const std::pair<const char*, const Rate*> rates[] = {{"BRA", &r.bra}, {"GSA", &r.gsa}, {"FRR", &r.frr},
                                                         {"SSA", &r.ssa}};
    for (const auto& [name, rate] : rates) {
      if (render_percent(*rate) != g[name]) return r.condition_name + ": " + name + " " + render_percent(*rate);
      if (fraction(*rate) != g["exact"][name]) return r.condition_name + ": exact " + name + " " + fraction(*rate);
    }
    if (&r == baseline) continue;
    const DeltaReport d = compute_condition_delta(r, *baseline);
    const json& gd = golden["deltas"][r.condition_name];
    if (render_delta(d.bra) != gd["BRA"] || render_delta(d.gsa) != gd["GSA"] || render_delta(d.frr) != gd["FRR"]) {
      return r.condition_name + ": delta mismatch";
    }
  }
  return "";
}

std::string dataset_round_trip() {
  for (const char* name : {"dataset_small.json", "dataset_e2e.json"}) {
    const Dataset d = load_dataset(fixture(name));
    const auto dir = testsupport::temp_dir("accept_rt");
    fs::create_directory_symlink(fixture("images"), dir / "images");
    write_dataset(d, dir / "copy.json");
    const bool same = load_dataset(dir / "copy.json") == d;
    fs::remove_all(dir);
    if (!same) return std::string(name) + " changed on round trip";
  }
  const json expected = json::parse(read_file(fixture("corrupt_expected.json")));
  for (const auto& [name, list] : expected.items()) {
    std::set<std::pair<std::string, std::string>> want, got;
    for (const auto& e : list) want.insert({e[0].get<std::string>(), e[1].get<std::string>()});
    try {
      load_dataset(fixture("corrupt/" + name + ".json"));
      return name + " loaded without error";
    } catch (const DatasetValidationError& e) {
      for (const auto& v : e.report()) got.insert({v.scenario_id, v.field});
    }
    if (got != want) return name + ": field paths differ";
  }
  return "";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"score-to-marker mapping (0..1 step 0.001, boundaries, monotone)", 1.0, score_mapping},
      {"metric oracle equivalence (1000 random multisets)", 5.0, metric_oracle},
      {"reference-value rendering (34.3, +19.4)", 0.0, reference_values},
      {"overlay locality (50 random markers)", 10.0, overlay_locality},
      {"attention selection oracle (100 grids x 3 margins x hot/cold)", 5.0, attention_selection},
      {"attacker geometry (50 random scenes)", 0.0, attacker_geometry},
      {"end-to-end determinism and golden metrics (6 x 4 matrix)", 30.0, end_to_end},
      {"dataset round-trip and corrupted-fixture field paths", 0.0, dataset_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string why;
    try {
      why = c.check();
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (why.empty() && c.limit_s > 0 && secs >= c.limit_s) why = "over time limit";
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (why.empty() ? "PASS" : "FAIL") << "  " << c.name << "  [" << timing << "]";
    if (!why.empty()) std::cout << "  " << why;
    std::cout << "\n";
    failed += why.empty() ? 0 : 1;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
