#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "specgp/classify.hpp"
#include "specgp/expr.hpp"
#include "specgp/random.hpp"

namespace specgp {

// Month indices are absolute: year * 12 + (month - 1).

/// Monthly multispectral series with one slot per calendar month; a nullopt
/// slot is a month without observations.
struct GappedBandSeries {
  std::string area_id;
  int label = 0;
  std::vector<int> months;
  std::vector<std::optional<std::vector<double>>> values;

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (const auto& v : values) {
      if (!v) ++n;
    }
    return n;
  }
};

/// Gap-free monthly multispectral series.
struct LabeledBandSeries {
  std::string area_id;
  int label = 0;
  std::vector<int> months;
  std::vector<std::vector<double>> values;
};

/// Gap-free monthly scalar series (a band series projected through an index).
struct LabeledIndexSeries {
  std::string area_id;
  int label = 0;
  std::vector<int> months;
  std::vector<double> values;
};

/// Averages all observations falling in the same calendar month and lays the
/// result out over the full month range; uncovered months are marked missing.
inline GappedBandSeries monthly_composite(
    const std::string& area_id, int label,
    const std::vector<std::pair<int, std::vector<double>>>& observations) {
  if (observations.empty()) {
    throw std::invalid_argument("monthly_composite: no observations for area '" +
                                area_id + "'");
  }
  std::map<int, std::pair<std::vector<double>, std::size_t>> buckets;
  for (const auto& [month, bands] : observations) {
    auto it = buckets.find(month);
    if (it == buckets.end()) {
      buckets.emplace(month, std::make_pair(bands, std::size_t{1}));
    } else {
      auto& [sum, count] = it->second;
      if (sum.size() != bands.size()) {
        throw std::invalid_argument(
            "monthly_composite: inconsistent band arity in area '" + area_id +
            "'");
      }
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += bands[i];
      count += 1;
    }
  }
  int first = buckets.begin()->first;
  int last = buckets.rbegin()->first;
  GappedBandSeries out;
  out.area_id = area_id;
  out.label = label;
  for (int m = first; m <= last; ++m) {
    out.months.push_back(m);
    auto it = buckets.find(m);
    if (it == buckets.end()) {
      out.values.push_back(std::nullopt);
    } else {
      auto [sum, count] = it->second;
      for (auto& v : sum) v /= static_cast<double>(count);
      out.values.push_back(std::move(sum));
    }
  }
  return out;
}

/// Linear interpolation of interior gaps; leading/trailing gaps take the
/// nearest present value. All-missing input is an error.
inline std::vector<double> fill_gaps_linear(
    const std::vector<std::optional<double>>& values) {
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) present.push_back(i);
  }
  if (present.empty()) {
    throw std::invalid_argument("fill_gaps_linear: series has no present values");
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) {
      out[i] = *values[i];
      continue;
    }
    auto right = std::lower_bound(present.begin(), present.end(), i);
    if (right == present.begin()) {
      out[i] = *values[present.front()];
    } else if (right == present.end()) {
      out[i] = *values[present.back()];
    } else {
      std::size_t q = *right;
      std::size_t p = *(right - 1);
      double t = static_cast<double>(i - p) / static_cast<double>(q - p);
      out[i] = *values[p] + (*values[q] - *values[p]) * t;
    }
  }
  return out;
}

/// Completes a gapped series, or rejects it (nullopt) when the missing
/// fraction exceeds the threshold.
inline std::optional<LabeledBandSeries> interpolate_gaps(
    const GappedBandSeries& series, double max_missing_fraction = 0.5) {
  if (series.values.empty()) {
    throw std::invalid_argument("interpolate_gaps: empty series");
  }
  double fraction = static_cast<double>(series.missing_count()) /
                    static_cast<double>(series.values.size());
  if (fraction > max_missing_fraction) return std::nullopt;

  std::size_t arity = 0;
  for (const auto& v : series.values) {
    if (v) {
      arity = v->size();
      break;
    }
  }
  LabeledBandSeries out;
  out.area_id = series.area_id;
  out.label = series.label;
  out.months = series.months;
  out.values.assign(series.values.size(), std::vector<double>(arity));
  std::vector<std::optional<double>> column(series.values.size());
  for (std::size_t b = 0; b < arity; ++b) {
    for (std::size_t i = 0; i < series.values.size(); ++i) {
      column[i] = series.values[i] ? std::optional<double>((*series.values[i])[b])
                                   : std::nullopt;
    }
    std::vector<double> filled = fill_gaps_linear(column);
    for (std::size_t i = 0; i < filled.size(); ++i) out.values[i][b] = filled[i];
  }
  return out;
}

/// Classic dynamic time warping: |x_i - y_j| local cost, unconstrained
/// window, D(i,j) = cost + min(D(i-1,j), D(i,j-1), D(i-1,j-1)).
inline double dtw(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) {
    throw std::invalid_argument("dtw: series must be non-empty");
  }
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  std::vector<double> prev(m), cur(m);
  prev[0] = std::fabs(x[0] - y[0]);
  for (std::size_t j = 1; j < m; ++j) prev[j] = prev[j - 1] + std::fabs(x[0] - y[j]);
  for (std::size_t i = 1; i < n; ++i) {
    cur[0] = prev[0] + std::fabs(x[i] - y[0]);
    for (std::size_t j = 1; j < m; ++j) {
      double best = std::min(prev[j], std::min(cur[j - 1], prev[j - 1]));
      cur[j] = std::fabs(x[i] - y[j]) + best;
    }
    prev.swap(cur);
  }
  return prev[m - 1];
}

/// 1-NN under DTW; distance ties go to the earliest training series.
inline int knn1_dtw(const std::vector<LabeledIndexSeries>& train,
                    std::span<const double> query) {
  if (train.empty()) throw std::invalid_argument("knn1_dtw: empty training set");
  int best_label = train.front().label;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& t : train) {
    double d = dtw(t.values, query);
    if (d < best_dist) {
      best_dist = d;
      best_label = t.label;
    }
  }
  return best_label;
}

// ---------------------------------------------------------------------------
// 5x2 cross-validation
// ---------------------------------------------------------------------------

struct CVSplit {
  int repetition = 1;  // 1..5
  char fold = 'A';     // which half is the training half
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
};

/// Five repetitions of stratified 2-fold splitting with fold swapping: ten
/// (train, test) experiments. Class proportions per fold differ by at most
/// one sample. Deterministic for a given rng state.
inline std::vector<CVSplit> cv_5x2(Rng& rng, std::span<const int> labels,
                                   int repetitions = 5) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw std::invalid_argument("cv_5x2: labels must be 0 or 1");
    }
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      throw std::invalid_argument("cv_5x2: class " + std::to_string(c) +
                                  " needs at least 2 samples");
    }
  }
  std::vector<CVSplit> out;
  out.reserve(static_cast<std::size_t>(repetitions) * 2);
  for (int rep = 1; rep <= repetitions; ++rep) {
    std::vector<std::size_t> half_a, half_b;
    for (int c = 0; c < 2; ++c) {
      std::vector<std::size_t> ids = by_class[c];
      shuffle(rng, ids);
      std::size_t na = ids.size() / 2;
      half_a.insert(half_a.end(), ids.begin(), ids.begin() + na);
      half_b.insert(half_b.end(), ids.begin() + na, ids.end());
    }
    out.push_back({rep, 'A', half_a, half_b});
    out.push_back({rep, 'B', half_b, half_a});
  }
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end time-series experiment
// ---------------------------------------------------------------------------

/// Applies the index to each timestamp independently.
inline LabeledIndexSeries project_series(const ExprTree& index,
                                         const LabeledBandSeries& series) {
  LabeledIndexSeries out;
  out.area_id = series.area_id;
  out.label = series.label;
  out.months = series.months;
  out.values.reserve(series.values.size());
  for (const auto& bands : series.values) {
    out.values.push_back(evaluate(index, bands));
  }
  return out;
}

inline std::vector<ConfusionSummary> run_ts_with_splits(
    const ExprTree& index, const std::vector<LabeledBandSeries>& dataset,
    const std::vector<CVSplit>& splits) {
  std::vector<LabeledIndexSeries> projected;
  projected.reserve(dataset.size());
  for (const auto& s : dataset) projected.push_back(project_series(index, s));

  std::vector<ConfusionSummary> out;
  out.reserve(splits.size());
  for (const auto& split : splits) {
    std::vector<int> predicted, truth;
    predicted.reserve(split.test_ids.size());
    truth.reserve(split.test_ids.size());
    for (std::size_t test_id : split.test_ids) {
      const auto& query = projected[test_id];
      int best_label = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t train_id : split.train_ids) {
        double d = dtw(projected[train_id].values, query.values);
        if (d < best_dist) {
          best_dist = d;
          best_label = projected[train_id].label;
        }
      }
      predicted.push_back(best_label);
      truth.push_back(query.label);
    }
    out.push_back(confusion(predicted, truth));
  }
  return out;
}

/// Projects every series through the index, draws the 5x2 splits from the rng
/// and returns the ten per-experiment summaries.
inline std::vector<ConfusionSummary> run_ts_experiment(
    const ExprTree& index, const std::vector<LabeledBandSeries>& dataset,
    Rng& rng) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& s : dataset) labels.push_back(s.label);
  auto splits = cv_5x2(rng, labels);
  return run_ts_with_splits(index, dataset, splits);
}

/// Per-timestamp per-class mean and population standard deviation of the
/// projected values (the data behind class separation plots).
struct ClassSeriesPoint {
  int month = 0;
  int label = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

inline std::vector<ClassSeriesPoint> class_mean_series(
    const std::vector<LabeledIndexSeries>& series) {
  std::map<std::pair<int, int>, std::vector<double>> groups;  // (month, label)
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.months.size(); ++i) {
      groups[{s.months[i], s.label}].push_back(s.values[i]);
    }
  }
  std::vector<ClassSeriesPoint> out;
  out.reserve(groups.size());
  for (const auto& [key, vals] : groups) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());
    out.push_back({key.first, key.second, mean, std::sqrt(var), vals.size()});
  }
  return out;
}

}  // namespace specgp
