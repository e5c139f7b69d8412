#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "t3s/common.hpp"

namespace t3s {

struct ReliabilityBin {
  double lo = 0.0, hi = 0.0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  long long count = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double miou = 0.0;
  double ece = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  std::vector<double> per_class_iou;  // NaN where the class has no support
  std::vector<ReliabilityBin> reliability_bins;
  long long n_samples = 0;
  int n_classes = 0;
  int n_bins = 0;
  std::vector<long long> confusion;  // n_classes x n_classes, row = true label
};

inline constexpr double kNllProbabilityFloor = 1e-12;

double accuracy(std::span<const int> pred, std::span<const int> truth);

std::vector<long long> confusion_matrix(std::span<const int> pred,
                                        std::span<const int> truth,
                                        int n_classes);

// IoU_k = TP / (TP + FP + FN); NaN when the class has no ground-truth support.
double iou(std::span<const long long> confusion, int n_classes, int class_id);
// Mean IoU over classes present in ground truth.
double miou(std::span<const long long> confusion, int n_classes);
// Pooled IoU over all classes (sum TP / (sum TP + FP + FN)).
double micro_iou(std::span<const long long> confusion, int n_classes);

// Top-label expected calibration error with equal-width confidence bins,
// last bin closed.
std::pair<double, std::vector<ReliabilityBin>> ece(
    std::span<const double> probs, std::span<const int> truth, int n_classes,
    int n_bins = 15);

double nll(std::span<const double> probs, std::span<const int> truth,
           int n_classes);
double brier(std::span<const double> probs, std::span<const int> truth,
             int n_classes);

EvalReport evaluate(std::span<const double> probs, std::span<const int> truth,
                    int n_classes, int n_bins = 15);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
std::string reliability_bins_csv(const EvalReport& report);

}  // namespace t3s
