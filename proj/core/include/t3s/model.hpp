#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "t3s/common.hpp"
#include "t3s/cube.hpp"
#include "t3s/sampling.hpp"
#include "t3s/thermal.hpp"

namespace t3s {

enum class PeVariant { NoPe, LinearPe, CalendarPe, ThermalPe };
PeVariant pe_variant_from_string(std::string_view s);
std::string_view to_string(PeVariant variant);

// Cumulative GDD is divided by this before entering the sinusoid so its
// magnitude is commensurate with day-of-year.
inline constexpr double kThermalPeDivisor = 10.0;

struct ModelConfig {
  int channels = 9;
  int d_model = 128;
  int n_head = 8;
  int hidden = 128;  // MLP head width
  int n_classes = 0;
  PeVariant pe = PeVariant::CalendarPe;
  double dropout_rate = 0.2;
  int seq_length = 24;

  int head_dim() const { return d_model / n_head; }
  void validate() const;
};

// All weights of the classifier plus the per-channel standardization
// statistics frozen at training time.
struct ClassifierParams {
  ModelConfig config;
  std::vector<double> embed_w;  // d_model x channels
  std::vector<double> embed_b;  // d_model
  std::vector<double> key_w;    // d_model x d_model (n_head blocks of head_dim rows)
  std::vector<double> query;    // n_head x head_dim, learned master query
  std::vector<double> value_w;  // d_model x d_model
  std::vector<double> out_w;    // d_model x d_model
  std::vector<double> out_b;    // d_model
  std::vector<double> ln_gain;  // d_model
  std::vector<double> ln_bias;  // d_model
  std::vector<double> mlp_w1;   // hidden x d_model
  std::vector<double> mlp_b1;   // hidden
  std::vector<double> mlp_w2;   // n_classes x hidden
  std::vector<double> mlp_b2;   // n_classes

  std::vector<double> feat_mean;  // channels
  std::vector<double> feat_std;   // channels
};

struct ParamView {
  std::string name;
  std::vector<double>* data;
};
std::vector<ParamView> trainable_arrays(ClassifierParams& params);

ClassifierParams init_params(const ModelConfig& config, std::uint64_t seed);
ClassifierParams zeros_like(const ClassifierParams& params);

struct Batch {
  int b = 0, l = 0, c = 0;
  std::vector<double> x;          // b*l*c, standardized reflectance
  std::vector<double> positions;  // b*l, raw PE values
  std::vector<std::uint8_t> valid;  // b*l
  std::vector<int> labels;        // b
};

// noPE returns zeros; the others evaluate the standard sinusoid at the raw
// position (thermalPE rescales by kThermalPeDivisor first).
std::vector<double> positional_encoding(PeVariant variant,
                                        std::span<const double> raw_positions,
                                        int d_model);

struct ForwardCache {
  std::vector<double> embedded;   // b*l*d, embedding + PE (0 at invalid slots)
  std::vector<double> values;     // b*l*d
  std::vector<double> attention;  // b*n_head*l, 0 at invalid slots
  std::vector<double> attn_out;   // b*d, concatenated heads
  std::vector<double> proj;       // b*d, after output projection
  std::vector<double> proj_drop_mask;  // b*d
  std::vector<double> ln_norm;    // b*d, (x-mu)/sigma
  std::vector<double> ln_inv_sigma;  // b
  std::vector<double> ln_out;     // b*d
  std::vector<double> mlp_pre;    // b*hidden, before ReLU
  std::vector<double> mlp_act;    // b*hidden, after ReLU and dropout
  std::vector<double> mlp_drop_mask;  // b*hidden
};

// Returns logits (b x n_classes). Invalid slots are skipped entirely, so
// their contents can never reach the output. Dropout is active only in
// train_mode and is a pure function of dropout_seed.
std::vector<double> forward(const ClassifierParams& params, const Batch& batch,
                            bool train_mode, std::uint64_t dropout_seed,
                            ForwardCache* cache = nullptr);

// Mean softmax cross-entropy over the batch with exact analytic gradients.
// grads must be zeros_like(params); gradients are accumulated into it.
double loss_and_grad(const ClassifierParams& params, const Batch& batch,
                     std::uint64_t dropout_seed, ClassifierParams& grads);

std::vector<double> predict_proba(const ClassifierParams& params,
                                  const Batch& batch);
std::vector<double> mc_dropout_predict(const ClassifierParams& params,
                                       const Batch& batch, int n_members,
                                       double rate, std::uint64_t seed);
// 1 - max probability, per row.
std::vector<double> uncertainty(std::span<const double> probs, int n_classes);

// Exact multiply count of one sequence forward pass; used to compare
// sequence-length settings.
long long forward_mac_count(const ModelConfig& config);

// ---- training ----

struct TrainCube {
  const DataCube* cube = nullptr;
  const ThermalSeries* thermal = nullptr;
};

struct TrainOptions {
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 0;
  int max_pixels_per_cube = 0;  // 0 = every labeled pixel
  double label_fraction = 1.0;  // labeled pixels kept for training
  double lr_base = 0.001;
  double lr_max = 0.01;
  double warmup_fraction = 0.30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct HistoryRow {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ClassifierParams params;
  std::vector<HistoryRow> history;
  long long steps = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& msg, std::vector<HistoryRow> h)
      : std::runtime_error(msg), history(std::move(h)) {}
  std::vector<HistoryRow> history;
};

// Linear warm-up from lr_base to lr_max over warmup_fraction of the run,
// then cosine decay to lr_base/100.
double onecycle_lr(long long step, long long total_steps,
                   const TrainOptions& opts);

// Flattened per-pixel sequences ready for batching.
struct PixelSet {
  int n = 0, l = 0, c = 0;
  std::vector<double> x;            // n*l*c raw reflectance
  std::vector<double> positions;    // n*l
  std::vector<std::uint8_t> valid;  // n*l
  std::vector<int> labels;          // n
};

// Gathers labeled pixels from each cube after sampler application.
// pixel_subset, when non-null, lists the kept pixel indices per cube.
PixelSet build_pixel_set(std::span<const TrainCube> cubes, SamplerKind sampler,
                         PeVariant pe, int seq_length,
                         const std::vector<std::vector<int>>* pixel_subset,
                         const SelectionOptions& sel_opts = {});

Batch make_batch(const PixelSet& set, std::span<const int> rows,
                 std::span<const double> feat_mean,
                 std::span<const double> feat_std);

TrainResult train(const ModelConfig& config, std::span<const TrainCube> cubes,
                  SamplerKind sampler, const TrainOptions& opts);

// ---- checkpoints ----

struct Checkpoint {
  ClassifierParams params;
  std::vector<HistoryRow> history;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string sampler;  // sampler the model was trained with
};

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& directory);
Checkpoint load_checkpoint(const std::filesystem::path& directory);
std::string history_csv(std::span<const HistoryRow> history);

}  // namespace t3s
