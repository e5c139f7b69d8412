#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "t3s/metrics.hpp"

using namespace t3s;

TEST_CASE("accuracy") {
  std::vector<int> truth = {0, 1, 2, 1};
  CHECK(accuracy(truth, truth) == 1.0);
  std::vector<int> pred = {0, 1, 2, 0};
  CHECK(accuracy(pred, truth) == doctest::Approx(0.75));
  CHECK_THROWS_AS(accuracy({}, {}), ValidationError);
}

TEST_CASE("iou from confusion counts") {
  // TP=2, FP=1, FN=1 for class 0 -> 0.5
  std::vector<int> truth = {0, 0, 0, 1, 1};
  std::vector<int> pred = {0, 0, 1, 0, 1};
  auto confusion = confusion_matrix(pred, truth, 2);
  CHECK(iou(confusion, 2, 0) == doctest::Approx(0.5));

  std::vector<int> perfect = {1, 1, 1};
  auto conf_perfect = confusion_matrix(perfect, perfect, 2);
  CHECK(iou(conf_perfect, 2, 1) == 1.0);
  CHECK(std::isnan(iou(conf_perfect, 2, 0)));  // class 0 absent
  CHECK(miou(conf_perfect, 2) == 1.0);

  std::vector<int> truth_d = {0, 0};
  std::vector<int> pred_d = {1, 1};
  auto conf_d = confusion_matrix(pred_d, truth_d, 2);
  CHECK(iou(conf_d, 2, 0) == 0.0);
}

TEST_CASE("micro iou matches acc/(2-acc) for single-label pixels") {
  std::vector<int> truth = {0, 1, 2, 1, 0, 2, 2, 1};
  std::vector<int> pred = {0, 1, 1, 1, 2, 2, 0, 1};
  auto confusion = confusion_matrix(pred, truth, 3);
  double acc = accuracy(pred, truth);
  CHECK(micro_iou(confusion, 3) == doctest::Approx(acc / (2.0 - acc)));
}

TEST_CASE("ece hand cases") {
  SUBCASE("confident and always right -> 0") {
    std::vector<double> probs = {1.0, 0.0, 1.0, 0.0};
    std::vector<int> truth = {0, 0};
    auto [e, bins] = ece(probs, truth, 2);
    CHECK(e == doctest::Approx(0.0));
    long long total = 0;
    for (const auto& b : bins) total += b.count;
    CHECK(total == 2);
  }
  SUBCASE("two samples at 0.9, one correct -> 0.4") {
    std::vector<double> probs = {0.9, 0.1, 0.9, 0.1};
    std::vector<int> truth = {0, 1};
    auto [e, bins] = ece(probs, truth, 15);
    CHECK(e == doctest::Approx(0.4));
  }
  SUBCASE("uniform prediction matching its base rate -> 0") {
    // K=4, confidence 0.25 everywhere, accuracy exactly 0.25
    std::vector<double> probs;
    std::vector<int> truth;
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 4; ++k) probs.push_back(0.25);
      truth.push_back(i);  // argmax ties resolve to class 0; one of four hits
    }
    auto [e, bins] = ece(probs, truth, 15);
    CHECK(e == doctest::Approx(0.0));
  }
}

TEST_CASE("nll hand cases") {
  std::vector<double> certain = {1.0, 0.0};
  std::vector<int> t0 = {0};
  CHECK(nll(certain, t0, 2) == doctest::Approx(0.0));

  std::vector<double> inv_e = {1.0 / std::exp(1.0), 1.0 - 1.0 / std::exp(1.0)};
  CHECK(nll(inv_e, t0, 2) == doctest::Approx(1.0));

  // (ln 2 + ln 4)/2
  std::vector<double> two = {0.5, 0.5, 0.25, 0.75};
  std::vector<int> truth = {0, 0};
  CHECK(nll(two, truth, 2) ==
        doctest::Approx((std::log(2.0) + std::log(4.0)) / 2.0));

  std::vector<double> zero = {0.0, 1.0};
  CHECK(nll(zero, t0, 2) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("brier hand cases") {
  std::vector<int> t0 = {0};
  std::vector<double> one_hot = {1.0, 0.0};
  CHECK(brier(one_hot, t0, 2) == doctest::Approx(0.0));
  std::vector<double> uniform2 = {0.5, 0.5};
  CHECK(brier(uniform2, t0, 2) == doctest::Approx(0.5));
  std::vector<double> p = {0.7, 0.3};
  CHECK(brier(p, t0, 2) == doctest::Approx(0.18));
}

TEST_CASE("evaluate bundles the standalone metrics") {
  Rng rng(9401);
  const int k = 3, n = 64;
  std::vector<double> probs;
  std::vector<int> truth;
  for (int i = 0; i < n; ++i) {
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    double sum = a + b + c;
    probs.push_back(a / sum);
    probs.push_back(b / sum);
    probs.push_back(c / sum);
    truth.push_back(rng.uniform_int(0, k - 1));
  }
  auto report = evaluate(probs, truth, k);
  CHECK(report.nll == doctest::Approx(nll(probs, truth, k)));
  CHECK(report.brier == doctest::Approx(brier(probs, truth, k)));
  auto [e, bins] = ece(probs, truth, k);
  CHECK(report.ece == doctest::Approx(e));
  CHECK(report.n_samples == n);
  long long binned = 0;
  for (const auto& b : report.reliability_bins) binned += b.count;
  CHECK(binned == n);
}

TEST_CASE("perfect one-hot predictions score perfectly") {
  const int k = 3;
  std::vector<double> probs;
  std::vector<int> truth;
  for (int i = 0; i < 9; ++i) {
    int cls = i % k;
    truth.push_back(cls);
    for (int c = 0; c < k; ++c) probs.push_back(c == cls ? 1.0 : 0.0);
  }
  auto report = evaluate(probs, truth, k);
  CHECK(report.accuracy == 1.0);
  CHECK(report.miou == 1.0);
  CHECK(report.ece == doctest::Approx(0.0));
  CHECK(report.nll == doctest::Approx(0.0));
  CHECK(report.brier == doctest::Approx(0.0));
}

TEST_CASE("tiny fixture matches the independent reference") {
  // 8 samples, 3 classes
  std::vector<double> probs = {
      0.70, 0.20, 0.10,  //
      0.10, 0.80, 0.10,  //
      0.25, 0.25, 0.50,  //
      0.40, 0.35, 0.25,  //
      0.05, 0.15, 0.80,  //
      0.60, 0.30, 0.10,  //
      0.33, 0.33, 0.34,  //
      0.20, 0.45, 0.35,  //
  };
  std::vector<int> truth = {0, 1, 2, 1, 2, 1, 0, 1};
  const int k = 3;

  std::vector<int> pred(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    int arg = 0;
    for (int c = 1; c < k; ++c) {
      if (probs[i * k + c] > probs[i * k + arg]) arg = c;
    }
    pred[i] = arg;
  }

  auto report = evaluate(probs, truth, k);
  CHECK(report.accuracy == doctest::Approx(oracle::ref_accuracy(pred, truth)));
  CHECK(report.nll == doctest::Approx(oracle::ref_nll(probs, truth, k)));
  CHECK(report.brier == doctest::Approx(oracle::ref_brier(probs, truth, k)));
  CHECK(report.ece == doctest::Approx(oracle::ref_ece(probs, truth, k, 15)));
  for (int c = 0; c < k; ++c) {
    double v = iou(report.confusion, k, c);
    if (!std::isnan(v)) {
      CHECK(v == doctest::Approx(oracle::ref_iou(pred, truth, c)));
    }
  }
}

TEST_CASE("metrics are permutation invariant") {
  Rng rng(9402);
  const int k = 4, n = 50;
  std::vector<double> probs;
  std::vector<int> truth;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(k);
    double sum = 0;
    for (auto& v : row) {
      v = rng.uniform() + 1e-3;
      sum += v;
    }
    for (auto& v : row) probs.push_back(v / sum);
    truth.push_back(rng.uniform_int(0, k - 1));
  }
  auto base = evaluate(probs, truth, k);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.next_u64() % i]);
  }
  std::vector<double> probs2;
  std::vector<int> truth2;
  for (int i : perm) {
    for (int c = 0; c < k; ++c) probs2.push_back(probs[i * k + c]);
    truth2.push_back(truth[i]);
  }
  auto shuffled = evaluate(probs2, truth2, k);
  CHECK(base.accuracy == doctest::Approx(shuffled.accuracy));
  CHECK(base.miou == doctest::Approx(shuffled.miou));
  CHECK(base.ece == doctest::Approx(shuffled.ece));
  CHECK(base.nll == doctest::Approx(shuffled.nll));
  CHECK(base.brier == doctest::Approx(shuffled.brier));
}

TEST_CASE("calibrated synthetic predictions have near-zero ece") {
  // correctness is Bernoulli at the drawn confidence; ECE -> 0 with N
  Rng rng(424242);
  const int k = 4, n = 100000;
  std::vector<double> probs(static_cast<std::size_t>(n) * k);
  std::vector<int> truth(n);
  for (int i = 0; i < n; ++i) {
    double conf = rng.uniform(1.0 / k + 1e-6, 1.0);
    double rest = (1.0 - conf) / (k - 1);
    int pred = rng.uniform_int(0, k - 1);
    for (int c = 0; c < k; ++c) {
      probs[static_cast<std::size_t>(i) * k + c] = (c == pred) ? conf : rest;
    }
    if (rng.uniform() < conf) {
      truth[i] = pred;
    } else {
      int wrong = rng.uniform_int(0, k - 2);
      truth[i] = wrong >= pred ? wrong + 1 : wrong;
    }
  }
  auto [e, bins] = ece(probs, truth, k, 15);
  CHECK(e >= 0.0);
  CHECK(e <= 0.02);
}

TEST_CASE("ece stays in bounds and brier is zero iff one-hot correct") {
  Rng rng(9403);
  const int k = 3;
  for (int trial = 0; trial < 50; ++trial) {
    int n = rng.uniform_int(1, 40);
    std::vector<double> probs;
    std::vector<int> truth;
    for (int i = 0; i < n; ++i) {
      std::vector<double> row(k);
      double sum = 0;
      for (auto& v : row) {
        v = rng.uniform() + 1e-6;
        sum += v;
      }
      for (auto& v : row) probs.push_back(v / sum);
      truth.push_back(rng.uniform_int(0, k - 1));
    }
    auto [e, bins] = ece(probs, truth, k);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    CHECK(brier(probs, truth, k) > 0.0);  // rows are never exactly one-hot
  }
}

TEST_CASE("report json and csv round trip") {
  std::vector<double> probs = {0.7, 0.3, 0.2, 0.8, 0.6, 0.4};
  std::vector<int> truth = {0, 1, 1};
  auto report = evaluate(probs, truth, 2, 10);
  auto text = report_to_json(report);
  auto back = report_from_json(text);
  CHECK(back.accuracy == doctest::Approx(report.accuracy));
  CHECK(back.ece == doctest::Approx(report.ece));
  CHECK(back.confusion == report.confusion);
  CHECK(back.reliability_bins.size() == report.reliability_bins.size());

  auto csv = reliability_bins_csv(report);
  CHECK(csv.starts_with("bin_lo,bin_hi,mean_confidence,accuracy,count\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + 10 bins
}
