#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace specgp {

/// 1-based ranks with average ranks on ties.
inline std::vector<double> rank_average(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// ---------------------------------------------------------------------------
// Chi-square tail via the regularized incomplete gamma function
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_continued_fraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// P(X >= x) for X ~ chi-square with df degrees of freedom.
inline double chi_squared_sf(double x, double df) {
  if (df <= 0.0) throw std::invalid_argument("chi_squared_sf: df must be > 0");
  if (x <= 0.0) return 1.0;
  double a = df / 2.0;
  double half_x = x / 2.0;
  if (half_x < a + 1.0) return 1.0 - detail::gamma_p_series(a, half_x);
  return detail::gamma_q_continued_fraction(a, half_x);
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Friedman test
// ---------------------------------------------------------------------------

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Friedman rank test over an n-experiments x k-methods matrix, with average
/// ranks and tie correction. Fully tied data yields (0, 1).
inline FriedmanResult friedman(const std::vector<std::vector<double>>& rows) {
  std::size_t n = rows.size();
  if (n < 2) throw std::invalid_argument("friedman: need at least 2 experiments");
  std::size_t k = rows.front().size();
  if (k < 2) throw std::invalid_argument("friedman: need at least 2 methods");
  for (const auto& row : rows) {
    if (row.size() != k) throw std::invalid_argument("friedman: ragged matrix");
  }

  std::vector<double> rank_sums(k, 0.0);
  double tie_sum = 0.0;  // sum of t^3 - t over tie groups of every row
  for (const auto& row : rows) {
    std::vector<double> ranks = rank_average(row);
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
    std::vector<double> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      tie_sum += t * t * t - t;
      i = j + 1;
    }
  }

  double nd = static_cast<double>(n);
  double kd = static_cast<double>(k);
  double correction = 1.0 - tie_sum / (kd * (kd * kd - 1.0) * nd);
  if (correction <= 0.0) return {0.0, 1.0};  // every row fully tied

  double ssbn = 0.0;
  for (double r : rank_sums) ssbn += r * r;
  double statistic =
      (12.0 / (kd * nd * (kd + 1.0)) * ssbn - 3.0 * nd * (kd + 1.0)) /
      correction;
  if (statistic < 0.0) statistic = 0.0;
  return {statistic, chi_squared_sf(statistic, kd - 1.0)};
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test (two-sided, paired)
// ---------------------------------------------------------------------------

struct WilcoxonResult {
  double w = 0.0;          // min of the signed-rank sums
  double p_value = 1.0;    // two-sided
  std::size_t n_effective = 0;
  bool all_zero = false;   // every paired difference was zero
  bool exact = false;      // p from full sign enumeration
};

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped;
/// p is exact (full 2^n sign enumeration) when the effective n is small and a
/// tie-corrected normal approximation with continuity correction otherwise.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                           std::span<const double> b,
                                           std::size_t exact_limit = 12) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
  }
  if (a.empty()) {
    throw std::invalid_argument("wilcoxon_signed_rank: empty input");
  }
  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult result;
  result.n_effective = diffs.size();
  if (diffs.empty()) {
    result.all_zero = true;
    result.exact = true;
    result.w = 0.0;
    result.p_value = 1.0;
    return result;
  }

  std::vector<double> abs_diffs(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) abs_diffs[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = rank_average(abs_diffs);

  double total = 0.0;
  double w_plus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    total += ranks[i];
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }
  double w_minus = total - w_plus;
  result.w = std::min(w_plus, w_minus);

  std::size_t n = diffs.size();
  if (n <= exact_limit) {
    result.exact = true;
    std::uint64_t hits = 0;
    std::uint64_t assignments = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < assignments; ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::uint64_t{1} << i)) s += ranks[i];
      }
      if (std::min(s, total - s) <= result.w + 1e-12) ++hits;
    }
    result.p_value = static_cast<double>(hits) / static_cast<double>(assignments);
  } else {
    double nd = static_cast<double>(n);
    double mean = nd * (nd + 1.0) / 4.0;
    double tie_sum = 0.0;
    std::vector<double> sorted = abs_diffs;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      tie_sum += t * t * t - t;
      i = j + 1;
    }
    double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_sum / 48.0;
    double z = (result.w - mean + 0.5) / std::sqrt(var);
    result.p_value = std::min(1.0, 2.0 * normal_cdf(z));
  }
  return result;
}

/// Bonferroni adjustment: p -> min(1, p * m). m defaults to the number of
/// p-values supplied.
inline std::vector<double> bonferroni(std::span<const double> p_values,
                                      std::size_t m = 0) {
  if (m == 0) m = p_values.size();
  if (m < 1) throw std::invalid_argument("bonferroni: m must be >= 1");
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    out.push_back(std::min(1.0, p * static_cast<double>(m)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Method comparison: Friedman gate, pairwise Wilcoxon, Bonferroni, verdicts
// ---------------------------------------------------------------------------

enum class Verdict { superior, inferior, tied };

inline const char* verdict_glyph(Verdict v) {
  switch (v) {
    case Verdict::superior: return "▲";  // filled up triangle
    case Verdict::inferior: return "▼";  // filled down triangle
    case Verdict::tied: return "•";      // bullet
  }
  return "?";
}

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::superior: return "superior";
    case Verdict::inferior: return "inferior";
    case Verdict::tied: return "tied";
  }
  return "?";
}

struct PairComparison {
  WilcoxonResult wilcoxon;
  double p_adjusted = 1.0;
  double mean_difference = 0.0;  // mean(candidate - baseline)
  Verdict verdict = Verdict::tied;
};

struct MethodComparison {
  FriedmanResult friedman;
  std::vector<PairComparison> pairs;  // one per baseline, input order
};

/// Compares the candidate's per-experiment accuracies against each baseline:
/// everything is tied unless the Friedman test over the full matrix rejects;
/// otherwise each pair is decided by the Bonferroni-adjusted Wilcoxon p and
/// the sign of the mean paired difference.
inline MethodComparison verdicts(
    std::span<const double> candidate,
    const std::vector<std::vector<double>>& baselines, double alpha = 0.05) {
  if (baselines.empty()) {
    throw std::invalid_argument("verdicts: need at least one baseline");
  }
  for (const auto& b : baselines) {
    if (b.size() != candidate.size()) {
      throw std::invalid_argument("verdicts: accuracy vectors must be paired");
    }
  }
  std::vector<std::vector<double>> matrix(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    matrix[i].push_back(candidate[i]);
    for (const auto& b : baselines) matrix[i].push_back(b[i]);
  }

  MethodComparison cmp;
  cmp.friedman = friedman(matrix);
  const std::size_t m = baselines.size();
  for (const auto& baseline : baselines) {
    PairComparison pair;
    pair.wilcoxon = wilcoxon_signed_rank(candidate, baseline);
    pair.p_adjusted =
        std::min(1.0, pair.wilcoxon.p_value * static_cast<double>(m));
    double mean_diff = 0.0;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      mean_diff += candidate[i] - baseline[i];
    }
    mean_diff /= static_cast<double>(candidate.size());
    pair.mean_difference = mean_diff;
    if (cmp.friedman.p_value >= alpha || pair.p_adjusted >= alpha ||
        mean_diff == 0.0) {
      pair.verdict = Verdict::tied;
    } else {
      pair.verdict = mean_diff > 0.0 ? Verdict::superior : Verdict::inferior;
    }
    cmp.pairs.push_back(pair);
  }
  return cmp;
}

}  // namespace specgp
