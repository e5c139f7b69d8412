#include "t3s/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace t3s {

namespace {

using nlohmann::json;

void check_probs(std::span<const double> probs, std::span<const int> truth,
                 int n_classes, const char* op) {
  if (truth.empty()) {
    throw ValidationError(std::string(op) + ": empty input");
  }
  if (n_classes < 1) {
    throw ValidationError(std::string(op) + ": n_classes must be >= 1");
  }
  if (probs.size() != truth.size() * static_cast<std::size_t>(n_classes)) {
    throw ValidationError(std::string(op) + ": probs shape mismatch");
  }
  for (int label : truth) {
    if (label < 0 || label >= n_classes) {
      throw ValidationError(std::string(op) + ": label " +
                            std::to_string(label) + " out of range");
    }
  }
}

int argmax_row(std::span<const double> probs, std::size_t row, int n_classes) {
  const double* p = probs.data() + row * n_classes;
  int best = 0;
  for (int k = 1; k < n_classes; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

}  // namespace

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw ValidationError("accuracy: length mismatch");
  }
  if (pred.empty()) throw ValidationError("accuracy: empty input");
  long long correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += (pred[i] == truth[i]);
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::vector<long long> confusion_matrix(std::span<const int> pred,
                                        std::span<const int> truth,
                                        int n_classes) {
  if (pred.size() != truth.size()) {
    throw ValidationError("confusion_matrix: length mismatch");
  }
  std::vector<long long> m(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || pred[i] < 0 ||
        pred[i] >= n_classes) {
      throw ValidationError("confusion_matrix: label out of range");
    }
    ++m[static_cast<std::size_t>(truth[i]) * n_classes + pred[i]];
  }
  return m;
}

double iou(std::span<const long long> confusion, int n_classes, int class_id) {
  if (confusion.size() != static_cast<std::size_t>(n_classes) * n_classes) {
    throw ValidationError("iou: confusion shape mismatch");
  }
  if (class_id < 0 || class_id >= n_classes) {
    throw ValidationError("iou: class out of range");
  }
  long long tp = confusion[static_cast<std::size_t>(class_id) * n_classes + class_id];
  long long fp = 0, fn = 0, support = 0;
  for (int k = 0; k < n_classes; ++k) {
    support += confusion[static_cast<std::size_t>(class_id) * n_classes + k];
    if (k == class_id) continue;
    fn += confusion[static_cast<std::size_t>(class_id) * n_classes + k];
    fp += confusion[static_cast<std::size_t>(k) * n_classes + class_id];
  }
  if (support == 0) return std::numeric_limits<double>::quiet_NaN();
  long long denom = tp + fp + fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(tp) / static_cast<double>(denom);
}

double miou(std::span<const long long> confusion, int n_classes) {
  double sum = 0.0;
  int supported = 0;
  for (int k = 0; k < n_classes; ++k) {
    double v = iou(confusion, n_classes, k);
    if (std::isnan(v)) continue;
    sum += v;
    ++supported;
  }
  if (supported == 0) throw ValidationError("miou: no class has support");
  return sum / supported;
}

double micro_iou(std::span<const long long> confusion, int n_classes) {
  long long tp = 0, total = 0;
  for (int a = 0; a < n_classes; ++a) {
    for (int b = 0; b < n_classes; ++b) {
      long long v = confusion[static_cast<std::size_t>(a) * n_classes + b];
      total += v;
      if (a == b) tp += v;
    }
  }
  // Every misclassified sample is one FP and one FN at pool level:
  // IoU = TP / (TP + FP + FN) = TP / (2*total - TP).
  long long denom = 2 * total - tp;
  if (denom == 0) return 0.0;
  return static_cast<double>(tp) / static_cast<double>(denom);
}

std::pair<double, std::vector<ReliabilityBin>> ece(
    std::span<const double> probs, std::span<const int> truth, int n_classes,
    int n_bins) {
  check_probs(probs, truth, n_classes, "ece");
  if (n_bins < 1) throw ValidationError("ece: n_bins must be >= 1");

  std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<long long> hits(static_cast<std::size_t>(n_bins), 0);
  std::vector<long long> count(static_cast<std::size_t>(n_bins), 0);

  for (std::size_t i = 0; i < truth.size(); ++i) {
    int pred = argmax_row(probs, i, n_classes);
    double conf = probs[i * n_classes + pred];
    int bin = static_cast<int>(conf * n_bins);
    bin = std::clamp(bin, 0, n_bins - 1);  // closes the last bin at 1.0
    conf_sum[bin] += conf;
    hits[bin] += (pred == truth[i]);
    ++count[bin];
  }

  double total = static_cast<double>(truth.size());
  double e = 0.0;
  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    auto& rb = bins[static_cast<std::size_t>(b)];
    rb.lo = static_cast<double>(b) / n_bins;
    rb.hi = static_cast<double>(b + 1) / n_bins;
    rb.count = count[b];
    if (count[b] > 0) {
      rb.mean_confidence = conf_sum[b] / static_cast<double>(count[b]);
      rb.accuracy = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
      e += (static_cast<double>(count[b]) / total) *
           std::abs(rb.accuracy - rb.mean_confidence);
    }
  }
  return {e, bins};
}

double nll(std::span<const double> probs, std::span<const int> truth,
           int n_classes) {
  check_probs(probs, truth, n_classes, "nll");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double p = probs[i * n_classes + truth[i]];
    sum += -std::log(std::max(p, kNllProbabilityFloor));
  }
  return sum / static_cast<double>(truth.size());
}

double brier(std::span<const double> probs, std::span<const int> truth,
             int n_classes) {
  check_probs(probs, truth, n_classes, "brier");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int k = 0; k < n_classes; ++k) {
      double target = (k == truth[i]) ? 1.0 : 0.0;
      double d = probs[i * n_classes + k] - target;
      sum += d * d;
    }
  }
  return sum / static_cast<double>(truth.size());
}

EvalReport evaluate(std::span<const double> probs, std::span<const int> truth,
                    int n_classes, int n_bins) {
  check_probs(probs, truth, n_classes, "evaluate");

  std::vector<int> pred(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pred[i] = argmax_row(probs, i, n_classes);
  }

  EvalReport report;
  report.n_classes = n_classes;
  report.n_bins = n_bins;
  report.n_samples = static_cast<long long>(truth.size());
  report.confusion = confusion_matrix(pred, truth, n_classes);
  report.accuracy = accuracy(pred, truth);
  report.per_class_iou.resize(static_cast<std::size_t>(n_classes));
  for (int k = 0; k < n_classes; ++k) {
    report.per_class_iou[static_cast<std::size_t>(k)] =
        iou(report.confusion, n_classes, k);
  }
  report.miou = miou(report.confusion, n_classes);
  auto [e, bins] = ece(probs, truth, n_classes, n_bins);
  report.ece = e;
  report.reliability_bins = std::move(bins);
  report.nll = nll(probs, truth, n_classes);
  report.brier = brier(probs, truth, n_classes);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["accuracy"] = report.accuracy;
  j["miou"] = report.miou;
  j["micro_iou"] = micro_iou(report.confusion, report.n_classes);
  j["ece"] = report.ece;
  j["nll"] = report.nll;
  j["brier"] = report.brier;
  j["n_samples"] = report.n_samples;
  j["n_classes"] = report.n_classes;
  j["n_bins"] = report.n_bins;
  json iou_list = json::array();
  for (double v : report.per_class_iou) {
    if (std::isnan(v)) {
      iou_list.push_back(nullptr);
    } else {
      iou_list.push_back(v);
    }
  }
  j["per_class_iou"] = iou_list;
  j["confusion"] = report.confusion;
  json bins = json::array();
  for (const auto& b : report.reliability_bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"mean_confidence", b.mean_confidence},
                    {"accuracy", b.accuracy},
                    {"count", b.count}});
  }
  j["reliability_bins"] = bins;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("report: parse error: " + std::string(e.what()));
  }
  EvalReport report;
  try {
    report.accuracy = j.at("accuracy").get<double>();
    report.miou = j.at("miou").get<double>();
    report.ece = j.at("ece").get<double>();
    report.nll = j.at("nll").get<double>();
    report.brier = j.at("brier").get<double>();
    report.n_samples = j.at("n_samples").get<long long>();
    report.n_classes = j.at("n_classes").get<int>();
    report.n_bins = j.at("n_bins").get<int>();
    for (const auto& v : j.at("per_class_iou")) {
      report.per_class_iou.push_back(
          v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                      : v.get<double>());
    }
    report.confusion = j.at("confusion").get<std::vector<long long>>();
    for (const auto& b : j.at("reliability_bins")) {
      ReliabilityBin rb;
      rb.lo = b.at("lo").get<double>();
      rb.hi = b.at("hi").get<double>();
      rb.mean_confidence = b.at("mean_confidence").get<double>();
      rb.accuracy = b.at("accuracy").get<double>();
      rb.count = b.at("count").get<long long>();
      report.reliability_bins.push_back(rb);
    }
  } catch (const json::exception& e) {
    throw IoError("report: field error: " + std::string(e.what()));
  }
  return report;
}

std::string reliability_bins_csv(const EvalReport& report) {
  std::ostringstream ss;
  ss << "bin_lo,bin_hi,mean_confidence,accuracy,count\n";
  for (const auto& b : report.reliability_bins) {
    ss << fmt_g(b.lo) << ',' << fmt_g(b.hi) << ',' << fmt_g(b.mean_confidence)
       << ',' << fmt_g(b.accuracy) << ',' << b.count << '\n';
  }
  return ss.str();
}

}  // namespace t3s
