#include "gohr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "gohr/rng.hpp"

namespace gohr::analysis {

namespace {

// Linear interpolation between order statistics (numpy's default).
double quantile_sorted(std::span<const double> sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Quantile via selection; reorders `values`.
double quantile_select(std::vector<double>& values, double q) {
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double low = values[lo];
  if (lo + 1 >= values.size() || h == static_cast<double>(lo)) return low;
  const double high = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return low + (h - static_cast<double>(lo)) * (high - low);
}

void require_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney test needs two non-empty samples");
}

// Doubled midranks of the pooled sample (a first, then b), so every rank is
// an integer.
std::vector<long long> doubled_midranks(std::span<const double> a, std::span<const double> b,
                                        std::vector<long long>* tie_sizes = nullptr) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<long long> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    // Ranks i+1..j share (i+1+j)/2; doubled that is i+1+j.
    const auto doubled = static_cast<long long>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = doubled;
    if (tie_sizes) tie_sizes->push_back(static_cast<long long>(j - i));
    i = j;
  }
  return ranks;
}

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero in tables
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::ofstream open_table(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_table(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

LearningCurve cumulate(std::span<const EpisodeRecord> records) {
  LearningCurve curve;
  if (records.empty()) return curve;
  std::vector<const EpisodeRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const EpisodeRecord* x, const EpisodeRecord* y) { return x->episode < y->episode; });
  curve.trial = sorted.front()->trial;
  std::int64_t running = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const EpisodeRecord& r = *sorted[i];
    if (r.trial != curve.trial) throw std::invalid_argument("records span more than one trial");
    if (r.episode != static_cast<int>(i)) {
      throw std::invalid_argument("episode indices are not contiguous from 0 (trial " +
                                  std::to_string(curve.trial) + ", expected episode " +
                                  std::to_string(i) + ", found " + std::to_string(r.episode) + ")");
    }
    if (r.errors < 0) throw std::invalid_argument("negative error count");
    running += r.errors;
    curve.cumulative.push_back(running);
  }
  return curve;
}

std::vector<LearningCurve> curves_by_trial(std::span<const EpisodeRecord> records) {
  std::map<int, std::vector<EpisodeRecord>> grouped;
  for (const auto& r : records) grouped[r.trial].push_back(r);
  std::vector<LearningCurve> out;
  for (auto& [trial, recs] : grouped) out.push_back(cumulate(recs));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  return quantile_select(values, 0.5);
}

std::vector<MedianPoint> median_curve(std::span<const std::vector<double>> series,
                                      const BootstrapOptions& options) {
  if (series.empty()) throw std::invalid_argument("median_curve needs at least one series");
  if (options.resamples < 1) throw std::invalid_argument("bootstraps must be at least 1");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1)");
  }
  const std::size_t n = series.size();
  const std::size_t length = series.front().size();
  for (const auto& s : series) {
    if (s.size() != length) throw std::invalid_argument("series have unequal lengths");
  }

  // Per index: series ids ordered by value, and the values in that order.
  std::vector<std::vector<std::uint32_t>> order(length, std::vector<std::uint32_t>(n));
  std::vector<std::vector<double>> sorted(length, std::vector<double>(n));
  std::vector<MedianPoint> out(length);
  for (std::size_t e = 0; e < length; ++e) {
    auto& ord = order[e];
    std::iota(ord.begin(), ord.end(), 0U);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::uint32_t i, std::uint32_t j) { return series[i][e] < series[j][e]; });
    for (std::size_t k = 0; k < n; ++k) sorted[e][k] = series[ord[k]][e];
    out[e].median = quantile_sorted(sorted[e], 0.5);
  }

  // The resampled median is the mean of the order statistics at these
  // 1-based positions (equal when n is odd).
  const std::size_t lower_pos = (n + 1) / 2;
  const std::size_t upper_pos = n / 2 + 1;
  const auto resamples = static_cast<std::size_t>(options.resamples);
  const double alpha = 1.0 - options.confidence;

  // Indices are handled in blocks; each block replays the same resample
  // stream, so results do not depend on the block size.
  constexpr std::size_t kBlock = 64;
  std::vector<std::uint32_t> counts(n);
  std::vector<std::vector<double>> medians;
  for (std::size_t start = 0; start < length; start += kBlock) {
    const std::size_t stop = std::min(length, start + kBlock);
    medians.assign(stop - start, std::vector<double>(resamples));
    Rng rng(options.seed);
    for (std::size_t r = 0; r < resamples; ++r) {
      std::fill(counts.begin(), counts.end(), 0U);
      for (std::size_t k = 0; k < n; ++k) ++counts[rng.below(n)];
      for (std::size_t e = start; e < stop; ++e) {
        const auto& ord = order[e];
        std::size_t cumulative = 0;
        std::size_t k = 0;
        while (cumulative + counts[ord[k]] < lower_pos) cumulative += counts[ord[k++]];
        const double low = sorted[e][k];
        while (cumulative + counts[ord[k]] < upper_pos) cumulative += counts[ord[k++]];
        medians[e - start][r] = 0.5 * (low + sorted[e][k]);
      }
    }
    for (std::size_t e = start; e < stop; ++e) {
      auto& m = medians[e - start];
      out[e].low = quantile_select(m, alpha / 2.0);
      out[e].high = quantile_select(m, 1.0 - alpha / 2.0);
    }
  }
  return out;
}

std::vector<MedianPoint> median_curve(std::span<const LearningCurve> curves,
                                      const BootstrapOptions& options) {
  std::vector<std::vector<double>> series;
  series.reserve(curves.size());
  for (const auto& c : curves) series.emplace_back(c.cumulative.begin(), c.cumulative.end());
  return median_curve(std::span<const std::vector<double>>(series), options);
}

double u_statistic(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  // Sorted b with binary search keeps this O((n_a + n_b) log n_b).
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sb.begin(), sb.end());
  double u = 0.0;
  for (double x : a) {
    const auto lo = std::lower_bound(sb.begin(), sb.end(), x);
    const auto hi = std::upper_bound(lo, sb.end(), x);
    u += static_cast<double>(lo - sb.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return u;
}

double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const std::vector<long long> ranks = doubled_midranks(a, b);
  const std::size_t na = a.size();
  long long observed = 0;
  long long total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    total += ranks[i];
    if (i < na) observed += ranks[i];
  }
  // Count subsets of the smaller group's size by rank sum. When b is the
  // smaller group, S_a >= s  <=>  S_b <= total - s.
  const bool subset_is_a = na <= b.size();
  const std::size_t m = subset_is_a ? na : b.size();
  long long max_sum = 0;
  {
    std::vector<long long> desc(ranks);
    std::sort(desc.rbegin(), desc.rend());
    for (std::size_t i = 0; i < m; ++i) max_sum += desc[i];
  }
  const auto width = static_cast<std::size_t>(max_sum + 1);
  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(width, 0.0));
  ways[0][0] = 1.0;
  std::size_t taken = 0;
  for (long long r : ranks) {
    taken = std::min(taken + 1, m);
    for (std::size_t k = taken; k >= 1; --k) {
      auto& dst = ways[k];
      const auto& src = ways[k - 1];
      for (std::size_t s = width; s-- > static_cast<std::size_t>(r);) {
        if (src[s - static_cast<std::size_t>(r)] != 0.0) dst[s] += src[s - static_cast<std::size_t>(r)];
      }
    }
  }
  double hits = 0.0;
  double all = 0.0;
  for (std::size_t s = 0; s < width; ++s) {
    const double w = ways[m][s];
    if (w == 0.0) continue;
    all += w;
    const auto sum = static_cast<long long>(s);
    if (subset_is_a ? sum >= observed : sum <= total - observed) hits += w;
  }
  return std::min(1.0, hits / all);
}

double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  std::vector<long long> ties;
  doubled_midranks(a, b, &ties);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  const double n = na + nb;
  double tie_term = 0.0;
  for (long long t : ties) tie_term += static_cast<double>(t * t * t - t);
  const double variance =
      n > 1 ? na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0))) : 0.0;
  const double u = u_statistic(a, b);
  const double mean = na * nb / 2.0;
  if (variance <= 0.0) return u >= mean ? 1.0 : 0.0;
  const double z = (u - mean - 0.5) / std::sqrt(variance);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

UTest mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  UTest t;
  t.u = u_statistic(a, b);
  const bool small = std::min(a.size(), b.size()) < static_cast<std::size_t>(kExactThreshold);
  t.exact = small;
  t.p_one_sided = small ? mann_whitney_exact_p(a, b) : mann_whitney_normal_p(a, b);
  return t;
}

double ease_ratio(std::span<const double> a, std::span<const double> b) {
  return u_statistic(a, b) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

void export_tables(std::span<const RuleCurves> rules, const ExportOptions& options,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::vector<LearningCurve>> curves;
  std::vector<std::vector<double>> tces;
  {
    std::set<std::string> names;
    for (const auto& r : rules) {
      if (!names.insert(r.rule).second) throw std::invalid_argument("duplicate rule name " + r.rule);
      curves.push_back(curves_by_trial(r.records));
      if (curves.back().empty()) throw std::invalid_argument("rule " + r.rule + " has no trials");
      std::vector<double> t;
      for (const auto& c : curves.back()) t.push_back(static_cast<double>(c.tce()));
      tces.push_back(std::move(t));
      const std::size_t len = curves.back().front().cumulative.size();
      for (const auto& c : curves.back()) {
        if (c.cumulative.size() != len) {
          throw std::invalid_argument("rule " + r.rule + " has trials with unequal episode counts");
        }
      }
    }
  }

  {
    const auto path = dir / "curves.csv";
    auto out = open_table(path);
    out << "rule,trial,episode,errors,cumulated\n";
    for (std::size_t i = 0; i < rules.size(); ++i) {
      for (const auto& c : curves[i]) {
        for (std::size_t e = 0; e < c.cumulative.size(); ++e) {
          const auto errors = c.cumulative[e] - (e == 0 ? 0 : c.cumulative[e - 1]);
          out << rules[i].rule << ',' << c.trial << ',' << e << ',' << errors << ','
              << c.cumulative[e] << '\n';
        }
      }
    }
    close_table(out, path);
  }
  {
    const auto path = dir / "tce.csv";
    auto out = open_table(path);
    out << "rule,trial,tce\n";
    for (std::size_t i = 0; i < rules.size(); ++i) {
      for (const auto& c : curves[i]) out << rules[i].rule << ',' << c.trial << ',' << c.tce() << '\n';
    }
    close_table(out, path);
  }
  {
    const auto path = dir / "median_curves.csv";
    auto out = open_table(path);
    out << "rule,episode,median,ci_low,ci_high\n";
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto points = median_curve(std::span<const LearningCurve>(curves[i]), options.bootstrap);
      for (std::size_t e = 0; e < points.size(); ++e) {
        out << rules[i].rule << ',' << e << ',' << fmt(points[e].median) << ',' << fmt(points[e].low)
            << ',' << fmt(points[e].high) << '\n';
      }
    }
    close_table(out, path);
  }
  {
    const auto path = dir / "pairwise.csv";
    auto out = open_table(path);
    out << "rule_a,rule_b,n_a,n_b,u,p_a_harder,ease_ratio,method\n";
    for (std::size_t i = 0; i < rules.size(); ++i) {
      for (std::size_t j = 0; j < rules.size(); ++j) {
        if (i == j) continue;
        const UTest t = mann_whitney_u(tces[i], tces[j]);
        out << rules[i].rule << ',' << rules[j].rule << ',' << tces[i].size() << ','
            << tces[j].size() << ',' << fmt(t.u) << ',' << fmt(t.p_one_sided) << ','
            << fmt(ease_ratio(tces[i], tces[j])) << ',' << (t.exact ? "exact" : "normal") << '\n';
      }
    }
    close_table(out, path);
  }
  {
    const auto path = dir / "ease_matrix.csv";
    auto out = open_table(path);
    out << "rule";
    for (const auto& r : rules) out << ',' << r.rule;
    out << '\n';
    for (std::size_t i = 0; i < rules.size(); ++i) {
      out << rules[i].rule;
      for (std::size_t j = 0; j < rules.size(); ++j) out << ',' << fmt(ease_ratio(tces[i], tces[j]));
      out << '\n';
    }
    close_table(out, path);
  }
  {
    const auto path = dir / "leaderboard.csv";
    auto out = open_table(path);
    out << "format,submitter,rule,trials,episodes,tce_min,tce_q1,tce_median,tce_q3,tce_max,tce_mean\n";
    for (std::size_t i = 0; i < rules.size(); ++i) {
      std::vector<double> t = tces[i];
      std::sort(t.begin(), t.end());
      const double mean = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
      out << "gohr-leaderboard-1," << options.submitter << ',' << rules[i].rule << ',' << t.size()
          << ',' << curves[i].front().cumulative.size() << ',' << fmt(t.front()) << ','
          << fmt(quantile_sorted(t, 0.25)) << ',' << fmt(quantile_sorted(t, 0.5)) << ','
          << fmt(quantile_sorted(t, 0.75)) << ',' << fmt(t.back()) << ',' << fmt(mean) << '\n';
    }
    close_table(out, path);
  }
  {
    const auto path = dir / "analysis.json";
    auto out = open_table(path);
    out << "{\"bootstrap_resamples\":" << options.bootstrap.resamples
        << ",\"confidence\":" << fmt(options.bootstrap.confidence)
        << ",\"bootstrap_seed\":" << options.bootstrap.seed
        << ",\"direction\":\"p_a_harder tests TCE(rule_a) stochastically larger than TCE(rule_b)\""
        << "}\n";
    close_table(out, path);
  }
}

}  // namespace gohr::analysis
