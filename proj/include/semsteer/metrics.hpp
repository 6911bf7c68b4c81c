#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "semsteer/judge.hpp"

namespace semsteer {

using Rational = boost::rational<std::int64_t>;

struct ContextCounts {
  std::array<std::int64_t, 5> by_label{};  // indexed by JudgeLabel
  std::int64_t unjudged = 0;

  std::int64_t operator[](JudgeLabel l) const { return by_label[static_cast<std::size_t>(l)]; }
  std::int64_t& operator[](JudgeLabel l) { return by_label[static_cast<std::size_t>(l)]; }
  std::int64_t total() const;  // judged samples only
  friend bool operator==(const ContextCounts&, const ContextCounts&) = default;
};

struct LabelCounts {
  ContextCounts safe;
  ContextCounts unsafe;

  std::int64_t n_safe() const { return safe.total(); }
  std::int64_t n_unsafe() const { return unsafe.total(); }
  const ContextCounts& of(Context c) const { return c == Context::Safe ? safe : unsafe; }
  ContextCounts& of(Context c) { return c == Context::Safe ? safe : unsafe; }
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

// nullopt renders as "n/a".
using Rate = std::optional<Rational>;

struct MetricsReport {
  Rate bra, gsa, frr, ssa;
  LabelCounts counts;
  std::string condition_name;
  std::string model_name;
  std::string dataset_name;
};

struct DeltaReport {
  std::string condition_name;
  std::string baseline_name;
  Rate bra, gsa, frr;  // a - b as fractions; rendered in percentage points
};

// Percentage with one decimal, rounded half away from zero ("34.3").
std::string render_percent(const Rate& p);
// Signed percentage points, one decimal ("+19.4", "-1.5", "0.0").
std::string render_delta(const Rate& d);

// Duplicate (scenario_id, context, condition_name) keys throw AggregationError.
LabelCounts tally_labels(const std::vector<JudgedSample>& samples);

MetricsReport compute_metrics(const LabelCounts& counts, std::string condition_name = {},
                              std::string model_name = {}, std::string dataset_name = {});

DeltaReport compute_condition_delta(const MetricsReport& a, const MetricsReport& b);

}  // namespace semsteer
