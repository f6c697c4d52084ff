#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uwsim/dataset.hpp"
#include "uwsim/record.hpp"

namespace uwsim {

// ---------------------------------------------------------------------------
// Token grid

/// H x W x C features (row-major, channel fastest) with a validity mask.
struct TokenGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> mask;

  TokenGrid() = default;
  TokenGrid(int h, int w, int c);

  double& at(int y, int x, int c) { return features[index(y, x) * channels + c]; }
  double at(int y, int x, int c) const { return features[index(y, x) * channels + c]; }
  bool valid(int y, int x) const { return mask[index(y, x)] != 0; }
  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  int valid_count() const;
  /// Sub-grid copy, mask included.
  TokenGrid crop(int y0, int x0, int h, int w) const;
};

inline constexpr int kGridCell = 4;    // image pixels pooled per grid cell side
inline constexpr int kGridSize = 16;   // grid side; images smaller than 64 px leave padding
inline constexpr int kEyeChannels = 5;  // rgb, inverse depth, target mask
inline constexpr int kNumInstructions = 9;
inline constexpr int kTokenChannels = 2 + 2 * kEyeChannels + kNumInstructions;

/// Semantic class an instruction refers to.
SemanticClass instruction_target_class(std::uint32_t instruction_id);

/// Pools both eyes into the grid; cells outside the image are masked out.
TokenGrid make_token_grid(const EncodedStereo& images, std::uint32_t instruction_id, int grid_size = kGridSize);

// ---------------------------------------------------------------------------
// CAP head

struct CapShape {
  int in_channels = kTokenChannels;
  int mid = 16;
  int kernel = 3;
  int hidden = 32;
  int out = 7;
  bool operator==(const CapShape&) const = default;
};

/// `linear`: identity activations, attention fixed at 1, no quaternion
/// renormalization. Used to verify the backward pass exactly.
struct CapOptions {
  bool linear = false;
};

/// Flat parameter vector with named views:
/// conv (k*k*C_in x C_mid) + bias, attention (C_mid x C_mid) + bias,
/// MLP C_mid -> hidden -> out. Matrices are column-major.
class CapParams {
 public:
  CapParams() = default;
  explicit CapParams(const CapShape& shape);
  /// Scaled-uniform init; output bias quaternion starts at identity.
  static CapParams init(const CapShape& shape, std::uint64_t seed);

  const CapShape& shape() const { return shape_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  using MapM = Eigen::Map<Eigen::MatrixXd>;
  using CMapM = Eigen::Map<const Eigen::MatrixXd>;
  using MapV = Eigen::Map<Eigen::VectorXd>;
  using CMapV = Eigen::Map<const Eigen::VectorXd>;

  CMapM conv_w() const { return {data_.data() + off_conv_w_, patch_dim(), shape_.mid}; }
  CMapV conv_b() const { return {data_.data() + off_conv_b_, shape_.mid}; }
  CMapM att_w() const { return {data_.data() + off_att_w_, shape_.mid, shape_.mid}; }
  CMapV att_b() const { return {data_.data() + off_att_b_, shape_.mid}; }
  CMapM mlp_w1() const { return {data_.data() + off_w1_, shape_.mid, shape_.hidden}; }
  CMapV mlp_b1() const { return {data_.data() + off_b1_, shape_.hidden}; }
  CMapM mlp_w2() const { return {data_.data() + off_w2_, shape_.hidden, shape_.out}; }
  CMapV mlp_b2() const { return {data_.data() + off_b2_, shape_.out}; }

  /// Offsets into the flat vector, in declaration order.
  struct Layout {
    std::size_t conv_w, conv_b, att_w, att_b, w1, b1, w2, b2, end;
  };
  Layout layout() const {
    return {off_conv_w_, off_conv_b_, off_att_w_, off_att_b_, off_w1_, off_b1_, off_w2_, off_b2_, data_.size()};
  }
  int patch_dim() const { return shape_.kernel * shape_.kernel * shape_.in_channels; }
  bool is_finite() const;

 private:
  CapShape shape_;
  std::vector<double> data_;
  std::size_t off_conv_w_ = 0, off_conv_b_ = 0, off_att_w_ = 0, off_att_b_ = 0;
  std::size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0;
};

/// Forward intermediates kept for the backward pass.
struct CapTrace {
  std::vector<int> cells;     // flat indices of valid cells
  std::vector<double> scale;  // k^2 / n_valid per valid cell
  Eigen::MatrixXd patches;    // valid cells x patch_dim, already scaled
  Eigen::MatrixXd features;   // F
  Eigen::MatrixXd attention;  // Att
  Eigen::VectorXd pooled;
  Eigen::VectorXd hidden;
  Eigen::VectorXd raw;        // MLP output before renormalization
  std::array<double, 7> output{};
};

/// Throws std::invalid_argument if no cell is valid or shapes disagree.
CapTrace cap_forward_trace(const CapParams& params, const TokenGrid& grid, const CapOptions& opts = {});
std::array<double, 7> cap_forward(const CapParams& params, const TokenGrid& grid, const CapOptions& opts = {});

/// Accumulates dL/dparams into `grad` (same layout as params.data()).
/// `d_output` is dL/dT, `d_pooled` an extra gradient arriving at the pooled
/// features from other heads (may be empty). Fills `d_input` when non-null.
void cap_backward(const CapParams& params, const TokenGrid& grid, const CapTrace& trace,
                  std::span<const double> d_output, std::span<const double> d_pooled, std::span<double> grad,
                  std::vector<double>* d_input = nullptr, const CapOptions& opts = {});

/// Mean squared error over components.
double cap_loss(std::span<const double> t, std::span<const double> t_gt);
/// dL/dT of cap_loss.
std::vector<double> cap_loss_grad(std::span<const double> t, std::span<const double> t_gt);

struct LossConfig {
  double alpha = 0.1;
  double learning_rate = 0.1;
  double momentum = 0.9;
  int batch_size = 32;
  int steps = 500;
  std::uint64_t seed = 0;
  int frame_stride = 5;  // keep every n-th frame when loading
  int hidden = 64;       // BcHead hidden width
  void validate() const;
};

double total_loss(double l_action, double l_cap, const LossConfig& cfg);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Central differences of cap_loss(cap_forward(.)) against cap_backward over
/// `samples` random parameter indices (all of them when samples == 0).
GradCheckResult grad_check(const CapParams& params, const TokenGrid& grid, std::span<const double> label,
                           const CapOptions& opts = {}, std::size_t samples = 0, std::uint64_t seed = 0,
                           double h = 1e-4);

/// Input-gradient counterpart (features of the grid).
GradCheckResult grad_check_input(const CapParams& params, const TokenGrid& grid, std::span<const double> label,
                                 const CapOptions& opts = {}, double h = 1e-4);

// ---------------------------------------------------------------------------
// Behavior-cloning head

inline constexpr std::size_t kBcObsDim = kStateDim + 6 + 4 + 2 + kNumInstructions;

/// Proprioceptive and sensor part of the BcHead input (normalized).
std::vector<double> bc_observation(const FrameRecord& f, const NormStats& stats);

/// Two-layer tanh MLP: [observation, pooled CAP features] -> 13 normalized actions.
class BcHead {
 public:
  BcHead() = default;
  BcHead(int in_dim, int hidden);
  static BcHead init(int in_dim, int hidden, std::uint64_t seed);

  int in_dim() const { return in_; }
  int hidden() const { return hidden_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  bool is_finite() const;

  struct Trace {
    Eigen::VectorXd input;
    Eigen::VectorXd hidden;
    Eigen::VectorXd output;
  };
  Trace forward(const Eigen::VectorXd& input) const;
  /// Accumulates parameter gradients; returns dL/dinput.
  Eigen::VectorXd backward(const Trace& t, const Eigen::VectorXd& d_output, std::span<double> grad) const;

 private:
  int in_ = 0;
  int hidden_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainingSample {
  TokenGrid grid;
  std::vector<double> observation;     // bc_observation
  std::array<double, 7> cap_label{};  // normalized position + quaternion
  std::array<double, 7> raw_label{};  // meters + quaternion
  std::array<double, kActionDim> action{};  // normalized
  std::uint32_t instruction_id = 0;
  std::uint32_t episode_id = 0;
};

std::array<double, 7> normalize_label(std::span<const double, 7> label, const NormStats& stats);
std::array<double, 7> denormalize_label(std::span<const double, 7> t, const NormStats& stats);

TrainingSample make_sample(const FrameRecord& f, const NormStats& stats, std::uint32_t episode_id);

/// Every `stride`-th frame of each episode in the split (images required).
std::vector<TrainingSample> load_samples(const std::filesystem::path& dir, const DatasetManifest& manifest, Split split,
                                         const NormStats& stats, int stride);

struct LossPoint {
  int step = 0;
  double total = 0.0;
  double action = 0.0;
  double cap = 0.0;
};

struct Model {
  CapParams cap;
  BcHead bc;
  NormStats stats;
  double alpha = 0.1;
};

struct TrainResult {
  Model model;
  std::vector<LossPoint> curve;
};

/// SGD with momentum on L_action + alpha * L_cap. Deterministic per cfg.seed.
/// Throws std::runtime_error if a loss becomes non-finite.
TrainResult train(const std::vector<TrainingSample>& samples, const NormStats& stats, const LossConfig& cfg,
                  const CapShape& shape = {});

struct Prediction {
  std::array<double, 7> target{};           // meters + quaternion
  std::array<double, kActionDim> action{};  // normalized
};

Prediction predict(const Model& model, const TokenGrid& grid, std::span<const double> observation);

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);
void write_loss_curve(const std::filesystem::path& path, const std::vector<LossPoint>& curve);

// ---------------------------------------------------------------------------
// Metrics

/// Mean absolute error over all frames and dimensions.
double e_action(const std::vector<std::vector<double>>& predicted, const std::vector<std::vector<double>>& recorded);
/// Mean Euclidean position error (translation components 4..6); with
/// `include_orientation` the geodesic angle (rad) of the quaternion part is
/// added per frame.
double e_target(const std::vector<std::array<double, 7>>& predicted, const std::vector<std::array<double, 7>>& truth,
                bool include_orientation = false);

struct OfflineRow {
  std::string group;  // instruction text, or "overall"
  std::size_t frames = 0;
  double e_action = 0.0;
  double e_target = 0.0;
  double e_target_baseline = 0.0;  // train-mean label predictor
};

/// One row per instruction present in `samples`, then "overall".
std::vector<OfflineRow> evaluate_offline(const Model& model, const std::vector<TrainingSample>& samples);

}  // namespace uwsim
