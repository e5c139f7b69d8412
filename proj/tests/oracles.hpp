// Brute-force reference implementations kept independent of the library code
// paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

// Literal interval enumeration: for each window j scan every observation and
// test membership, then argmax clear count with earliest-index ties. The last
// window is closed at hi.
inline std::vector<int> interval_argmax(std::span<const double> values,
                                        std::span<const long long> clear,
                                        int n_windows, double lo, double hi) {
  std::vector<int> picked;
  if (!(hi > lo)) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(values.size()); ++i) {
      if (values[i] < lo || values[i] > hi) continue;
      if (best < 0 || clear[i] > clear[best]) best = i;
    }
    if (best >= 0) picked.push_back(best);
    return picked;
  }
  const double delta = (hi - lo) / n_windows;
  for (int j = 0; j < n_windows; ++j) {
    const double w_lo = lo + j * delta;
    const double w_hi = lo + (j + 1) * delta;
    const bool last = (j == n_windows - 1);
    int best = -1;
    for (int i = 0; i < static_cast<int>(values.size()); ++i) {
      bool inside = last ? (values[i] >= w_lo && values[i] <= hi)
                         : (values[i] >= w_lo && values[i] < w_hi);
      if (!inside) continue;
      if (best < 0 || clear[i] > clear[best]) best = i;
    }
    if (best >= 0) picked.push_back(best);
  }
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  return picked;
}

// Reference metrics, written as plain loops.
inline double ref_accuracy(std::span<const int> pred, std::span<const int> truth) {
  double ok = 0;
  for (size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return ok / static_cast<double>(pred.size());
}

inline double ref_nll(std::span<const double> probs, std::span<const int> truth,
                      int k) {
  double sum = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    sum -= std::log(std::max(probs[i * k + truth[i]], 1e-12));
  }
  return sum / static_cast<double>(truth.size());
}

inline double ref_brier(std::span<const double> probs, std::span<const int> truth,
                        int k) {
  double sum = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    for (int c = 0; c < k; ++c) {
      double t = c == truth[i] ? 1.0 : 0.0;
      sum += (probs[i * k + c] - t) * (probs[i * k + c] - t);
    }
  }
  return sum / static_cast<double>(truth.size());
}

inline double ref_ece(std::span<const double> probs, std::span<const int> truth,
                      int k, int n_bins) {
  std::vector<double> conf(truth.size());
  std::vector<int> pred(truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    int arg = 0;
    for (int c = 1; c < k; ++c) {
      if (probs[i * k + c] > probs[i * k + arg]) arg = c;
    }
    pred[i] = arg;
    conf[i] = probs[i * k + arg];
  }
  double e = 0;
  for (int b = 0; b < n_bins; ++b) {
    double lo = static_cast<double>(b) / n_bins;
    double hi = static_cast<double>(b + 1) / n_bins;
    bool last = (b == n_bins - 1);
    double conf_sum = 0, acc_sum = 0;
    long long count = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      bool inside = last ? (conf[i] >= lo && conf[i] <= 1.0)
                         : (conf[i] >= lo && conf[i] < hi);
      if (!inside) continue;
      ++count;
      conf_sum += conf[i];
      acc_sum += pred[i] == truth[i];
    }
    if (count > 0) {
      e += (static_cast<double>(count) / static_cast<double>(truth.size())) *
           std::abs(acc_sum / count - conf_sum / count);
    }
  }
  return e;
}

inline double ref_iou(std::span<const int> pred, std::span<const int> truth,
                      int class_id) {
  long long inter = 0, uni = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    bool in_pred = pred[i] == class_id;
    bool in_truth = truth[i] == class_id;
    inter += in_pred && in_truth;
    uni += in_pred || in_truth;
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace oracle
