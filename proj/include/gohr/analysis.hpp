#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gohr::analysis {

struct EpisodeRecord {
  int trial = 0;
  int episode = 0;  // 0-based
  int errors = 0;   // rejected moves
  bool cleared = false;
  int moves = 0;

  bool operator==(const EpisodeRecord&) const = default;
};

struct LearningCurve {
  int trial = 0;
  std::vector<std::int64_t> cumulative;  // running error total per episode

  std::int64_t tce() const { return cumulative.empty() ? 0 : cumulative.back(); }
  bool operator==(const LearningCurve&) const = default;
};

// Prefix sums of per-episode errors. Records may arrive in any order but must
// cover episodes 0..n-1 exactly once for a single trial; throws
// std::invalid_argument otherwise.
LearningCurve cumulate(std::span<const EpisodeRecord> records);

struct BootstrapOptions {
  int resamples = 50'000;
  double confidence = 0.95;
  std::uint64_t seed = 20220601;
};

struct MedianPoint {
  double median = 0.0;
  double low = 0.0;
  double high = 0.0;

  bool operator==(const MedianPoint&) const = default;
};

// Sample median (mean of the middle pair for even counts).
double median(std::vector<double> values);

// Per-index sample median and percentile-bootstrap interval across series.
// Each resample draws whole series with replacement and evaluates every
// index. Results depend only on the inputs and options. Series must share a
// length; throws std::invalid_argument on empty or ragged input.
std::vector<MedianPoint> median_curve(std::span<const std::vector<double>> series,
                                      const BootstrapOptions& options = {});

std::vector<MedianPoint> median_curve(std::span<const LearningCurve> curves,
                                      const BootstrapOptions& options = {});

// Number of (a_i, b_j) pairs with a_i > b_j, ties counting 0.5.
double u_statistic(std::span<const double> a, std::span<const double> b);

// One-sided P(U >= u_obs) under exchangeability of the pooled values
// (alternative: a stochastically larger than b). Exact, via the permutation
// distribution of midrank sums, so ties are handled.
double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b);

// Same tail by the normal approximation with tie-corrected variance and a
// continuity correction.
double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b);

struct UTest {
  double u = 0.0;
  double p_one_sided = 1.0;  // H1: a stochastically larger than b
  bool exact = false;
};

// Exact tail when either sample has fewer than 8 values, normal otherwise.
// Throws std::invalid_argument on an empty sample.
UTest mann_whitney_u(std::span<const double> a, std::span<const double> b);

inline constexpr int kExactThreshold = 8;

// U(a, b) / (|a| |b|): the fraction of run pairs in which a's TCE exceeds b's.
double ease_ratio(std::span<const double> a, std::span<const double> b);

struct RuleCurves {
  std::string rule;
  std::vector<EpisodeRecord> records;  // all trials of this rule
};

struct ExportOptions {
  BootstrapOptions bootstrap;
  std::string submitter = "gohr-dqn";
};

// Writes the analysis tables into `dir`:
//   curves.csv         rule,trial,episode,errors,cumulated
//   tce.csv            rule,trial,tce
//   median_curves.csv  rule,episode,median,ci_low,ci_high
//   pairwise.csv       rule_a,rule_b,n_a,n_b,u,p_a_harder,ease_ratio,method
//   ease_matrix.csv    ease ratios, row rule against column rule
//   leaderboard.csv    one versioned submission record per rule
//   analysis.json      bootstrap settings
// Throws std::runtime_error naming the file on I/O failure.
void export_tables(std::span<const RuleCurves> rules, const ExportOptions& options,
                   const std::filesystem::path& dir);

// Trial curves of one rule, grouped by trial id in ascending order.
std::vector<LearningCurve> curves_by_trial(std::span<const EpisodeRecord> records);

}  // namespace gohr::analysis
