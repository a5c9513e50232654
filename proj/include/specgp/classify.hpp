#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "specgp/engine.hpp"
#include "specgp/expr.hpp"

namespace specgp {

// ---------------------------------------------------------------------------
// Nearest centroid classifier in 1-D index space
// ---------------------------------------------------------------------------

struct NccCentroids {
  std::array<double, 2> centroid{0.0, 0.0};
};

inline NccCentroids ncc_fit_projected(std::span<const double> projections,
                                      std::span<const int> labels) {
  if (projections.size() != labels.size()) {
    throw std::invalid_argument("ncc_fit: projection/label length mismatch");
  }
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < projections.size(); ++i) {
    int c = labels[i];
    if (c != 0 && c != 1) throw std::invalid_argument("ncc_fit: label must be 0 or 1");
    sum[c] += projections[i];
    count[c] += 1;
  }
  if (count[0] == 0 || count[1] == 0) {
    throw std::invalid_argument("ncc_fit: both classes must be present");
  }
  return {{sum[0] / static_cast<double>(count[0]),
           sum[1] / static_cast<double>(count[1])}};
}

inline NccCentroids ncc_fit(const PixelDataset& train, const ExprTree& index) {
  std::vector<double> proj;
  std::vector<int> labels;
  proj.reserve(train.samples.size());
  labels.reserve(train.samples.size());
  for (const auto& s : train.samples) {
    proj.push_back(evaluate(index, s.bands));
    labels.push_back(s.label);
  }
  return ncc_fit_projected(proj, labels);
}

/// Label of the nearest centroid; an exact tie goes to class 0.
inline int ncc_predict_value(const NccCentroids& c, double projection) {
  double d0 = std::fabs(projection - c.centroid[0]);
  double d1 = std::fabs(projection - c.centroid[1]);
  return d0 <= d1 ? 0 : 1;
}

inline std::vector<int> ncc_predict_projected(const NccCentroids& c,
                                              std::span<const double> proj) {
  std::vector<int> out;
  out.reserve(proj.size());
  for (double v : proj) out.push_back(ncc_predict_value(c, v));
  return out;
}

inline std::vector<int> ncc_predict(const NccCentroids& c, const ExprTree& index,
                                    const std::vector<std::vector<double>>& pixels) {
  std::vector<int> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) {
    out.push_back(ncc_predict_value(c, evaluate(index, p)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-feature logistic regression, used only to turn index values into
// confidence scores. Fit by iteratively reweighted least squares; perfect
// separation is tamed by capping |parameters| at 30, flagged in the model.
// ---------------------------------------------------------------------------

struct LogisticModel {
  double intercept = 0.0;
  double slope = 0.0;
  bool capped = false;
  std::size_t iterations = 0;
};

inline constexpr double kLogisticParamCap = 30.0;
inline constexpr std::size_t kLogisticMaxIter = 100;
inline constexpr double kLogisticTolerance = 1e-8;

/// Numerically stable sigmoid.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline LogisticModel fit_logistic(std::span<const double> x,
                                  std::span<const int> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("fit_logistic: length mismatch");
  }
  bool seen[2] = {false, false};
  for (int v : y) {
    if (v != 0 && v != 1) throw std::invalid_argument("fit_logistic: label must be 0 or 1");
    seen[v] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw std::invalid_argument("fit_logistic: both classes must be present");
  }

  LogisticModel m;
  for (std::size_t iter = 1; iter <= kLogisticMaxIter; ++iter) {
    m.iterations = iter;
    // Newton step: H delta = g with H the weighted 2x2 normal matrix.
    double g0 = 0.0, g1 = 0.0;
    double h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double p = sigmoid(m.intercept + m.slope * x[i]);
      double r = static_cast<double>(y[i]) - p;
      double w = p * (1.0 - p);
      g0 += r;
      g1 += r * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    double det = h00 * h11 - h01 * h01;
    if (!(det > 1e-300) || !std::isfinite(det)) break;
    double d0 = (h11 * g0 - h01 * g1) / det;
    double d1 = (h00 * g1 - h01 * g0) / det;
    double new_intercept =
        std::clamp(m.intercept + d0, -kLogisticParamCap, kLogisticParamCap);
    double new_slope =
        std::clamp(m.slope + d1, -kLogisticParamCap, kLogisticParamCap);
    double change = std::max(std::fabs(new_intercept - m.intercept),
                             std::fabs(new_slope - m.slope));
    m.intercept = new_intercept;
    m.slope = new_slope;
    if (change < kLogisticTolerance) break;
  }
  m.capped = std::fabs(m.intercept) >= kLogisticParamCap - 1e-9 ||
             std::fabs(m.slope) >= kLogisticParamCap - 1e-9;
  return m;
}

/// P(class = 1 | x).
inline double logistic_prob(const LogisticModel& m, double x) {
  return sigmoid(m.intercept + m.slope * x);
}

/// Fits on the training projections and returns P(class = 1 | x) for each
/// evaluation point.
inline std::vector<double> confidence_scores(std::span<const double> train_x,
                                             std::span<const int> train_y,
                                             std::span<const double> eval_x) {
  LogisticModel m = fit_logistic(train_x, train_y);
  std::vector<double> out;
  out.reserve(eval_x.size());
  for (double v : eval_x) out.push_back(logistic_prob(m, v));
  return out;
}

/// Confidence of a prediction with class-1 probability p; 0.5 means maximal
/// confusion.
inline double prediction_confidence(double p) { return std::max(p, 1.0 - p); }

// ---------------------------------------------------------------------------
// Accuracy metrics
// ---------------------------------------------------------------------------

struct ConfusionSummary {
  // counts[truth][predicted]
  std::array<std::array<std::size_t, 2>, 2> counts{{{0, 0}, {0, 0}}};
  // producer = recall per class, user = precision per class. Undefined when
  // the class never occurs in truth (producer) or predictions (user).
  std::array<std::optional<double>, 2> producer;
  std::array<std::optional<double>, 2> user;
  double normalized = 0.0;  // mean of the defined producer accuracies

  std::size_t total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
};

inline ConfusionSummary confusion(std::span<const int> predicted,
                                  std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("confusion: length mismatch");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("confusion: empty label vectors");
  }
  ConfusionSummary s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) ||
        (predicted[i] != 0 && predicted[i] != 1)) {
      throw std::invalid_argument("confusion: labels must be 0 or 1");
    }
    s.counts[static_cast<std::size_t>(truth[i])]
            [static_cast<std::size_t>(predicted[i])] += 1;
  }
  double producer_sum = 0.0;
  std::size_t producer_defined = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    std::size_t truth_total = s.counts[c][0] + s.counts[c][1];
    std::size_t predicted_total = s.counts[0][c] + s.counts[1][c];
    if (truth_total > 0) {
      s.producer[c] = static_cast<double>(s.counts[c][c]) /
                      static_cast<double>(truth_total);
      producer_sum += *s.producer[c];
      producer_defined += 1;
    }
    if (predicted_total > 0) {
      s.user[c] = static_cast<double>(s.counts[c][c]) /
                  static_cast<double>(predicted_total);
    }
  }
  s.normalized = producer_defined > 0
                     ? producer_sum / static_cast<double>(producer_defined)
                     : 0.0;
  return s;
}

}  // namespace specgp
