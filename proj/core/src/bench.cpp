#include "t3s/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace t3s {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  auto config_path = dir / "dataset.json";
  double t_base = 0.0;
  if (std::filesystem::exists(config_path)) {
    auto config = synth_config_from_json(read_text_file(config_path.string()));
    t_base = config.t_base;
  }

  Dataset dataset;
  dataset.t_base = t_base;
  std::vector<std::filesystem::path> year_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() &&
        entry.path().filename().string().starts_with("year_")) {
      year_dirs.push_back(entry.path());
    }
  }
  std::sort(year_dirs.begin(), year_dirs.end());
  if (year_dirs.empty()) {
    throw IoError("dataset: no year_* directories in " + dir.string());
  }

  for (const auto& year_dir : year_dirs) {
    YearData data;
    data.year = std::stoi(year_dir.filename().string().substr(5));
    auto temps = read_temperature_csv(year_dir / "temps.csv");
    data.thermal = cumulative_gdd(temps, ThermalConfig{t_base});

    std::vector<std::filesystem::path> cube_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(year_dir)) {
      if (entry.is_directory() &&
          std::filesystem::exists(entry.path() / "manifest.json")) {
        cube_dirs.push_back(entry.path());
      }
    }
    std::sort(cube_dirs.begin(), cube_dirs.end());
    if (cube_dirs.empty()) {
      throw IoError("dataset: year directory has no cubes: " + year_dir.string());
    }
    for (const auto& cube_dir : cube_dirs) {
      data.cubes.push_back(read_cube(cube_dir));
    }
    dataset.years.push_back(std::move(data));
  }

  dataset.class_names = dataset.years.front().cubes.front().class_names;
  dataset.channels = dataset.years.front().cubes.front().c;
  for (const auto& year : dataset.years) {
    for (const auto& cube : year.cubes) {
      if (cube.class_names != dataset.class_names || cube.c != dataset.channels) {
        throw ValidationError("dataset: cubes disagree on classes or channels");
      }
    }
  }
  return dataset;
}

const YearData& find_year(const Dataset& dataset, int year) {
  for (const auto& data : dataset.years) {
    if (data.year == year) return data;
  }
  throw ValidationError("dataset: year " + std::to_string(year) + " not present");
}

std::vector<MethodSpec> default_methods() {
  return {
      {"uniform", SamplerKind::Uniform, PeVariant::CalendarPe, false},
      {"mc-dropout", SamplerKind::Uniform, PeVariant::CalendarPe, true},
      {"thermal-pe", SamplerKind::Uniform, PeVariant::ThermalPe, false},
      {"deformable", SamplerKind::Deformable, PeVariant::CalendarPe, false},
      {"t3s", SamplerKind::T3s, PeVariant::LinearPe, false},
  };
}

MethodSpec method_by_name(std::string_view name) {
  for (const auto& method : default_methods()) {
    if (method.name == name) return method;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::CrossYear: return "cross-year";
    case Protocol::LowData: return "low-data";
    case Protocol::EarlySeason: return "early-season";
  }
  return "?";
}

Protocol protocol_from_string(std::string_view s) {
  if (s == "cross-year") return Protocol::CrossYear;
  if (s == "low-data") return Protocol::LowData;
  if (s == "early-season") return Protocol::EarlySeason;
  throw ValidationError("unknown protocol '" + std::string(s) + "'");
}

BenchOptions default_bench_options() {
  BenchOptions opts;
  opts.model.d_model = 64;
  opts.model.n_head = 4;
  opts.model.hidden = 64;
  opts.model.seq_length = 24;
  opts.model.dropout_rate = 0.2;
  return opts;
}

std::string cutoff_label(int day_of_year) {
  if (day_of_year == 181) return "end of June";
  if (day_of_year == 273) return "end of September";
  return "day " + std::to_string(day_of_year);
}

namespace {

struct EvalJob {
  int test_year = 0;
  std::optional<int> truncation_day;
};

// Runs one (method, train_year) training and the requested evaluations.
std::vector<FoldResult> run_training_unit(const Dataset& dataset,
                                          const MethodSpec& method,
                                          int train_year,
                                          std::span<const EvalJob> jobs,
                                          const BenchOptions& opts) {
  const YearData& train_data = find_year(dataset, train_year);

  ModelConfig config = opts.model;
  config.channels = dataset.channels;
  config.n_classes = static_cast<int>(dataset.class_names.size());
  config.pe = method.pe;

  TrainOptions train_opts;
  train_opts.epochs = opts.epochs;
  train_opts.batch_size = opts.batch_size;
  train_opts.max_pixels_per_cube = opts.max_pixels_per_cube;
  train_opts.label_fraction = opts.label_fraction;
  // Seeded by train year only: methods share pixel subsets and init draws.
  train_opts.seed = derive_seed(opts.seed, stream_id("fold"), train_year);

  std::vector<TrainCube> train_cubes;
  for (const auto& cube : train_data.cubes) {
    train_cubes.push_back({&cube, &train_data.thermal});
  }

  auto train_start = Clock::now();
  auto trained = train(config, train_cubes, method.sampler, train_opts);
  double train_seconds = seconds_since(train_start);

  std::vector<FoldResult> results;
  for (const auto& job : jobs) {
    const YearData& test_data = find_year(dataset, job.test_year);
    std::vector<TrainCube> test_cubes;
    for (const auto& cube : test_data.cubes) {
      test_cubes.push_back({&cube, &test_data.thermal});
    }
    SelectionOptions sel_opts;
    sel_opts.truncation_day = job.truncation_day;
    sel_opts.rescale_grid = opts.rescale_truncation_grid;

    auto eval_start = Clock::now();
    auto set = build_pixel_set(test_cubes, method.sampler, method.pe,
                               config.seq_length, nullptr, sel_opts);
    std::vector<int> rows(static_cast<std::size_t>(set.n));
    std::iota(rows.begin(), rows.end(), 0);

    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(set.n) * config.n_classes);
    const int chunk = 256;
    for (int start = 0; start < set.n; start += chunk) {
      int count = std::min(chunk, set.n - start);
      auto batch = make_batch(
          set, std::span<const int>(rows.data() + start,
                                    static_cast<std::size_t>(count)),
          trained.params.feat_mean, trained.params.feat_std);
      std::vector<double> p;
      if (method.mc_dropout) {
        p = mc_dropout_predict(trained.params, batch, opts.mc_members,
                               opts.mc_rate,
                               derive_seed(opts.seed, stream_id("mc"),
                                           train_year, job.test_year));
      } else {
        p = predict_proba(trained.params, batch);
      }
      probs.insert(probs.end(), p.begin(), p.end());
    }

    FoldResult fold;
    fold.train_year = train_year;
    fold.test_year = job.test_year;
    fold.method = method.name;
    fold.truncation_day = job.truncation_day;
    fold.report = evaluate(probs, set.labels, config.n_classes, opts.ece_bins);
    fold.train_seconds = train_seconds;
    fold.eval_seconds = seconds_since(eval_start);
    fold.train_steps = trained.steps;
    results.push_back(std::move(fold));
  }
  return results;
}

struct TrainingUnit {
  MethodSpec method;
  int train_year = 0;
  std::vector<EvalJob> jobs;
};

BenchResult run_units(Protocol protocol, const Dataset& dataset,
                      std::vector<TrainingUnit> units,
                      const BenchOptions& opts) {
  auto start = Clock::now();
  std::vector<std::vector<FoldResult>> unit_results(units.size());

  int threads = std::max(1, opts.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < units.size(); ++i) {
      unit_results[i] = run_training_unit(dataset, units[i].method,
                                          units[i].train_year, units[i].jobs,
                                          opts);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (;;) {
            auto i = next.fetch_add(1);
            if (i >= units.size()) break;
            unit_results[i] = run_training_unit(dataset, units[i].method,
                                                units[i].train_year,
                                                units[i].jobs, opts);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BenchResult result;
  result.protocol = protocol;
  result.seed = opts.seed;
  for (auto& list : unit_results) {
    for (auto& fold : list) result.folds.push_back(std::move(fold));
  }
  result.summary = summarize(result.folds);
  result.total_seconds = seconds_since(start);
  return result;
}

std::vector<TrainingUnit> make_units(const Dataset& dataset,
                                     std::span<const MethodSpec> methods,
                                     std::optional<int> truncation_day) {
  if (dataset.years.size() < 2) {
    throw ValidationError("bench: need at least two years for cross-year folds");
  }
  std::vector<TrainingUnit> units;
  for (const auto& method : methods) {
    for (const auto& train_year : dataset.years) {
      TrainingUnit unit;
      unit.method = method;
      unit.train_year = train_year.year;
      for (const auto& test_year : dataset.years) {
        if (test_year.year == train_year.year) continue;
        if (truncation_day) {
          unit.jobs.push_back({test_year.year, truncation_day});
        }
        unit.jobs.push_back({test_year.year, std::nullopt});
      }
      units.push_back(std::move(unit));
    }
  }
  return units;
}

}  // namespace

BenchResult cross_year_run(const Dataset& dataset,
                           std::span<const MethodSpec> methods,
                           const BenchOptions& opts) {
  if (opts.label_fraction != 1.0) {
    BenchOptions clean = opts;
    clean.label_fraction = 1.0;
    return cross_year_run(dataset, methods, clean);
  }
  return run_units(Protocol::CrossYear, dataset,
                   make_units(dataset, methods, std::nullopt), opts);
}

BenchResult low_data_run(const Dataset& dataset,
                         std::span<const MethodSpec> methods, double fraction,
                         const BenchOptions& opts) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("low_data_run: fraction must be in (0, 1]");
  }
  BenchOptions low = opts;
  low.label_fraction = fraction;
  auto result = run_units(Protocol::LowData, dataset,
                          make_units(dataset, methods, std::nullopt), low);
  result.protocol = Protocol::LowData;
  return result;
}

BenchResult early_season_run(const Dataset& dataset,
                             std::span<const MethodSpec> methods,
                             int cutoff_day, const BenchOptions& opts) {
  for (const auto& year : dataset.years) {
    for (const auto& cube : year.cubes) {
      if (cutoff_day < cube.obs_days.front()) {
        throw ValidationError("early_season_run: cutoff day " +
                              std::to_string(cutoff_day) +
                              " precedes the first observation");
      }
    }
  }
  BenchOptions es = opts;
  es.truncation_day = cutoff_day;
  auto result = run_units(Protocol::EarlySeason, dataset,
                          make_units(dataset, methods, cutoff_day), es);
  result.protocol = Protocol::EarlySeason;
  return result;
}

std::vector<MethodSummary> summarize(std::span<const FoldResult> folds) {
  std::vector<MethodSummary> out;
  auto find = [&](const std::string& method,
                  std::optional<int> trunc) -> MethodSummary* {
    for (auto& s : out) {
      if (s.method == method && s.truncation_day == trunc) return &s;
    }
    return nullptr;
  };

  struct Acc {
    std::vector<double> accuracy, miou, iou, ece, nll, brier;
  };
  std::vector<Acc> accs;

  for (const auto& fold : folds) {
    MethodSummary* s = find(fold.method, fold.truncation_day);
    if (!s) {
      out.push_back({fold.method, fold.truncation_day, 0, {}, {}, {}, {}, {}, {}});
      accs.emplace_back();
      s = &out.back();
    }
    auto idx = static_cast<std::size_t>(s - out.data());
    accs[idx].accuracy.push_back(fold.report.accuracy);
    accs[idx].miou.push_back(fold.report.miou);
    accs[idx].iou.push_back(
        micro_iou(fold.report.confusion, fold.report.n_classes));
    accs[idx].ece.push_back(fold.report.ece);
    accs[idx].nll.push_back(fold.report.nll);
    accs[idx].brier.push_back(fold.report.brier);
    ++s->n_folds;
  }

  auto stats = [](const std::vector<double>& v) {
    MetricStats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(v.size()));
    return s;
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].accuracy = stats(accs[i].accuracy);
    out[i].miou = stats(accs[i].miou);
    out[i].iou = stats(accs[i].iou);
    out[i].ece = stats(accs[i].ece);
    out[i].nll = stats(accs[i].nll);
    out[i].brier = stats(accs[i].brier);
  }
  return out;
}

namespace {

json fold_to_json(const FoldResult& fold) {
  json j;
  j["train_year"] = fold.train_year;
  j["test_year"] = fold.test_year;
  j["method"] = fold.method;
  if (fold.truncation_day) {
    j["truncation_day"] = *fold.truncation_day;
    j["truncation_label"] = cutoff_label(*fold.truncation_day);
  } else {
    j["truncation_day"] = nullptr;
  }
  j["report"] = json::parse(report_to_json(fold.report));
  j["train_seconds"] = fold.train_seconds;
  j["eval_seconds"] = fold.eval_seconds;
  j["train_steps"] = fold.train_steps;
  return j;
}

FoldResult fold_from_json(const json& j) {
  FoldResult fold;
  fold.train_year = j.at("train_year").get<int>();
  fold.test_year = j.at("test_year").get<int>();
  fold.method = j.at("method").get<std::string>();
  if (!j.at("truncation_day").is_null()) {
    fold.truncation_day = j.at("truncation_day").get<int>();
  }
  fold.report = report_from_json(j.at("report").dump());
  fold.train_seconds = j.at("train_seconds").get<double>();
  fold.eval_seconds = j.at("eval_seconds").get<double>();
  fold.train_steps = j.at("train_steps").get<long long>();
  return fold;
}

}  // namespace

std::string bench_result_to_json(const BenchResult& result) {
  json j;
  j["protocol"] = std::string(to_string(result.protocol));
  j["seed"] = result.seed;
  j["total_seconds"] = result.total_seconds;
  if (!result.config_json.empty()) {
    j["config"] = json::parse(result.config_json);
  } else {
    j["config"] = nullptr;
  }
  json folds = json::array();
  for (const auto& fold : result.folds) folds.push_back(fold_to_json(fold));
  j["folds"] = folds;
  json summary = json::array();
  for (const auto& s : result.summary) {
    json sj;
    sj["method"] = s.method;
    sj["truncation_day"] =
        s.truncation_day ? json(*s.truncation_day) : json(nullptr);
    sj["n_folds"] = s.n_folds;
    auto put = [&](const char* name, const MetricStats& m) {
      sj[name] = {{"mean", m.mean}, {"stddev", m.stddev}};
    };
    put("accuracy", s.accuracy);
    put("miou", s.miou);
    put("iou", s.iou);
    put("ece", s.ece);
    put("nll", s.nll);
    put("brier", s.brier);
    summary.push_back(sj);
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

BenchResult bench_result_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("bench result: parse error: " + std::string(e.what()));
  }
  BenchResult result;
  try {
    result.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    result.seed = j.at("seed").get<std::uint64_t>();
    result.total_seconds = j.at("total_seconds").get<double>();
    if (!j.at("config").is_null()) result.config_json = j.at("config").dump();
    for (const auto& fj : j.at("folds")) {
      result.folds.push_back(fold_from_json(fj));
    }
  } catch (const json::exception& e) {
    throw IoError("bench result: field error: " + std::string(e.what()));
  }
  result.summary = summarize(result.folds);
  return result;
}

std::string results_csv(const BenchResult& result) {
  std::ostringstream ss;
  ss << "scope,protocol,method,train_year,test_year,truncation_day,"
        "accuracy,miou,iou,ece,nll,brier\n";
  auto trunc_str = [](const std::optional<int>& t) {
    return t ? std::to_string(*t) : std::string();
  };
  for (const auto& fold : result.folds) {
    ss << "fold," << to_string(result.protocol) << ',' << fold.method << ','
       << fold.train_year << ',' << fold.test_year << ','
       << trunc_str(fold.truncation_day) << ',' << fmt_f(fold.report.accuracy, 6)
       << ',' << fmt_f(fold.report.miou, 6) << ','
       << fmt_f(micro_iou(fold.report.confusion, fold.report.n_classes), 6)
       << ',' << fmt_f(fold.report.ece, 6) << ',' << fmt_f(fold.report.nll, 6)
       << ',' << fmt_f(fold.report.brier, 6) << '\n';
  }
  for (const auto& s : result.summary) {
    for (const char* scope : {"mean", "stddev"}) {
      bool mean = std::string_view(scope) == "mean";
      auto pick = [&](const MetricStats& m) { return mean ? m.mean : m.stddev; };
      ss << scope << ',' << to_string(result.protocol) << ',' << s.method
         << ",,," << trunc_str(s.truncation_day) << ','
         << fmt_f(pick(s.accuracy), 6) << ',' << fmt_f(pick(s.miou), 6) << ','
         << fmt_f(pick(s.iou), 6) << ',' << fmt_f(pick(s.ece), 6) << ','
         << fmt_f(pick(s.nll), 6) << ',' << fmt_f(pick(s.brier), 6) << '\n';
    }
  }
  return ss.str();
}

namespace {

// Minimal hand-written SVG plotting; deterministic output.
struct SvgCanvas {
  std::ostringstream body;
  int width, height;
  SvgCanvas(int w, int h) : width(w), height(h) {
    body << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
         << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
         << "\">\n";
    body << "<rect width=\"" << w << "\" height=\"" << h
         << "\" fill=\"white\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* color,
            double stroke = 1.0) {
    body << "<line x1=\"" << fmt_f(x1, 2) << "\" y1=\"" << fmt_f(y1, 2)
         << "\" x2=\"" << fmt_f(x2, 2) << "\" y2=\"" << fmt_f(y2, 2)
         << "\" stroke=\"" << color << "\" stroke-width=\""
         << fmt_f(stroke, 2) << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill) {
    body << "<rect x=\"" << fmt_f(x, 2) << "\" y=\"" << fmt_f(y, 2)
         << "\" width=\"" << fmt_f(w, 2) << "\" height=\"" << fmt_f(h, 2)
         << "\" fill=\"" << fill << "\" fill-opacity=\"0.7\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    body << "<circle cx=\"" << fmt_f(x, 2) << "\" cy=\"" << fmt_f(y, 2)
         << "\" r=\"" << fmt_f(r, 2) << "\" fill=\"" << fill << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 12) {
    body << "<text x=\"" << fmt_f(x, 2) << "\" y=\"" << fmt_f(y, 2)
         << "\" font-family=\"sans-serif\" font-size=\"" << size << "\">" << s
         << "</text>\n";
  }
  std::string finish() {
    body << "</svg>\n";
    return body.str();
  }
};

std::string reliability_svg(const std::string& method,
                            std::span<const FoldResult> folds) {
  // pool bins over folds of this method (untruncated rows)
  std::vector<double> conf_sum, acc_sum;
  std::vector<long long> counts;
  int n_bins = 0;
  for (const auto& fold : folds) {
    if (fold.method != method || fold.truncation_day) continue;
    const auto& bins = fold.report.reliability_bins;
    if (n_bins == 0) {
      n_bins = static_cast<int>(bins.size());
      conf_sum.assign(bins.size(), 0.0);
      acc_sum.assign(bins.size(), 0.0);
      counts.assign(bins.size(), 0);
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
      conf_sum[b] += bins[b].mean_confidence * static_cast<double>(bins[b].count);
      acc_sum[b] += bins[b].accuracy * static_cast<double>(bins[b].count);
      counts[b] += bins[b].count;
    }
  }

  const int size = 360, margin = 40;
  const double plot = size - 2.0 * margin;
  SvgCanvas svg(size, size);
  svg.line(margin, size - margin, size - margin, size - margin, "black");
  svg.line(margin, margin, margin, size - margin, "black");
  svg.line(margin, size - margin, size - margin, margin, "#888888");
  for (int b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    double acc = acc_sum[b] / static_cast<double>(counts[b]);
    double x = margin + plot * (static_cast<double>(b) / n_bins);
    double bar_w = plot / n_bins;
    svg.rect(x, size - margin - plot * acc, bar_w, plot * acc, "#4878cf");
  }
  svg.text(margin, margin - 12, "reliability: " + method);
  svg.text(size - margin - 80, size - 8, "confidence");
  return svg.finish();
}

std::string accuracy_vs_cutoff_svg(const BenchResult& result) {
  // mean accuracy per (method, truncation) group; untruncated plotted at the
  // right edge
  struct Point {
    std::string method;
    int day;
    double accuracy;
  };
  std::vector<Point> points;
  int max_day = 0;
  for (const auto& s : result.summary) {
    int day = s.truncation_day ? *s.truncation_day : 365;
    max_day = std::max(max_day, day);
    points.push_back({s.method, day, s.accuracy.mean});
  }

  const int w = 420, h = 300, margin = 40;
  SvgCanvas svg(w, h);
  svg.line(margin, h - margin, w - margin, h - margin, "black");
  svg.line(margin, margin, margin, h - margin, "black");
  const char* colors[] = {"#4878cf", "#d65f5f", "#6acc65", "#b47cc7",
                          "#c4ad66"};
  std::vector<std::string> methods;
  for (const auto& p : points) {
    if (std::find(methods.begin(), methods.end(), p.method) == methods.end()) {
      methods.push_back(p.method);
    }
  }
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const char* color = colors[mi % 5];
    std::vector<Point> own;
    for (const auto& p : points) {
      if (p.method == methods[mi]) own.push_back(p);
    }
    std::sort(own.begin(), own.end(),
              [](const Point& a, const Point& b) { return a.day < b.day; });
    for (std::size_t i = 0; i < own.size(); ++i) {
      double x = margin + (w - 2.0 * margin) * own[i].day / max_day;
      double y = h - margin - (h - 2.0 * margin) * own[i].accuracy;
      svg.circle(x, y, 3.0, color);
      if (i > 0) {
        double px = margin + (w - 2.0 * margin) * own[i - 1].day / max_day;
        double py = h - margin - (h - 2.0 * margin) * own[i - 1].accuracy;
        svg.line(px, py, x, y, color, 1.5);
      }
    }
    svg.text(w - margin - 100, margin + 14 * (static_cast<double>(mi) + 1),
             methods[mi]);
    svg.circle(w - margin - 108, margin + 14 * (static_cast<double>(mi) + 1) - 4,
               3.0, color);
  }
  svg.text(margin, margin - 12, "accuracy vs cutoff day");
  return svg.finish();
}

}  // namespace

void render_report(const BenchResult& result,
                   const std::filesystem::path& out_dir) {
  if (result.folds.empty()) {
    throw ValidationError("render_report: empty result");
  }
  std::filesystem::create_directories(out_dir / "plots");
  write_text_file((out_dir / "results.csv").string(), results_csv(result));
  write_text_file((out_dir / "results.json").string(),
                  bench_result_to_json(result));

  std::vector<std::string> methods;
  for (const auto& fold : result.folds) {
    if (std::find(methods.begin(), methods.end(), fold.method) == methods.end()) {
      methods.push_back(fold.method);
    }
  }
  for (const auto& method : methods) {
    write_text_file((out_dir / "plots" / ("reliability_" + method + ".svg")).string(),
                    reliability_svg(method, result.folds));
  }
  if (result.protocol == Protocol::EarlySeason) {
    write_text_file((out_dir / "plots" / "accuracy_vs_cutoff.svg").string(),
                    accuracy_vs_cutoff_svg(result));
  }
}

}  // namespace t3s
