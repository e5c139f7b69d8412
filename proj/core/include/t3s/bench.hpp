#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "t3s/metrics.hpp"
#include "t3s/model.hpp"
#include "t3s/synth.hpp"

namespace t3s {

struct YearData {
  int year = 0;
  ThermalSeries thermal;
  std::vector<DataCube> cubes;
};

struct Dataset {
  std::vector<YearData> years;
  std::vector<std::string> class_names;
  int channels = 0;
  double t_base = 0.0;
};

// Reads a directory produced by generate_dataset (or laid out the same way:
// year_YYYY/temps.csv plus cube subdirectories).
Dataset load_dataset(const std::filesystem::path& dir);
const YearData& find_year(const Dataset& dataset, int year);

// One Table-row method: sampler + positional encoding + inference mode.
struct MethodSpec {
  std::string name;
  SamplerKind sampler = SamplerKind::Uniform;
  PeVariant pe = PeVariant::CalendarPe;
  bool mc_dropout = false;
};

std::vector<MethodSpec> default_methods();
MethodSpec method_by_name(std::string_view name);

enum class Protocol { CrossYear, LowData, EarlySeason };
std::string_view to_string(Protocol protocol);
Protocol protocol_from_string(std::string_view s);

struct FoldSpec {
  int train_year = 0;
  std::vector<int> test_years;
  std::string method;
  PeVariant pe = PeVariant::CalendarPe;
  double label_fraction = 1.0;
  std::optional<int> truncation_day;
  std::uint64_t seed = 0;
};

struct BenchOptions {
  ModelConfig model;  // channels/n_classes are overwritten from the dataset
  int epochs = 16;
  int batch_size = 8;
  int max_pixels_per_cube = 1024;
  std::uint64_t seed = 1234;
  double label_fraction = 1.0;
  std::optional<int> truncation_day;
  bool rescale_truncation_grid = true;
  int threads = 1;
  int mc_members = 5;
  double mc_rate = 0.2;
  int ece_bins = 15;
};

BenchOptions default_bench_options();

struct FoldResult {
  int train_year = 0;
  int test_year = 0;
  std::string method;
  std::optional<int> truncation_day;
  EvalReport report;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  long long train_steps = 0;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MethodSummary {
  std::string method;
  std::optional<int> truncation_day;
  int n_folds = 0;
  MetricStats accuracy, miou, iou, ece, nll, brier;
};

struct BenchResult {
  Protocol protocol = Protocol::CrossYear;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  std::vector<MethodSummary> summary;
  std::string config_json;  // resolved options, for the run manifest
  double total_seconds = 0.0;
};

// Leave-one-year-out: each year trains once per method and is evaluated on
// every other year. N years yield N*(N-1) (train, test) pairs.
BenchResult cross_year_run(const Dataset& dataset,
                           std::span<const MethodSpec> methods,
                           const BenchOptions& opts);

// Same folds with the labeled training pixels subsampled once per fold;
// the subset is a function of (seed, train year) only, so every method sees
// the same pixels.
BenchResult low_data_run(const Dataset& dataset,
                         std::span<const MethodSpec> methods, double fraction,
                         const BenchOptions& opts);

// Models are trained on the full season; test sequences are truncated at the
// cutoff day before sampling. Each fold is also evaluated untruncated for
// the degradation comparison.
BenchResult early_season_run(const Dataset& dataset,
                             std::span<const MethodSpec> methods,
                             int cutoff_day, const BenchOptions& opts);

std::vector<MethodSummary> summarize(std::span<const FoldResult> folds);

std::string bench_result_to_json(const BenchResult& result);
BenchResult bench_result_from_json(const std::string& text);

// results.csv, results.json and plots/*.svg; byte-deterministic for a fixed
// result.
void render_report(const BenchResult& result,
                   const std::filesystem::path& out_dir);
std::string results_csv(const BenchResult& result);

// Human-readable label for early-season cutoffs (e.g. 181 -> "end of June").
std::string cutoff_label(int day_of_year);

}  // namespace t3s
