#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uwsim/learner.hpp"
#include "uwsim/rng.hpp"

namespace uwsim {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(std::span<double> out, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : out) v = u(rng);
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Gradients smaller than this are compared in absolute terms: below it the
// central difference is dominated by rounding in the loss itself.
constexpr double kGradFloor = 1e-7;

}  // namespace

// ---------------------------------------------------------------------------
// TokenGrid

TokenGrid::TokenGrid(int h, int w, int c)
    : height(h), width(w), channels(c), features(static_cast<std::size_t>(h) * w * c, 0.0),
      mask(static_cast<std::size_t>(h) * w, 1) {
  if (h <= 0 || w <= 0 || c <= 0) {
    throw std::invalid_argument("token grid dimensions must be positive");
  }
}

int TokenGrid::valid_count() const { return static_cast<int>(std::count(mask.begin(), mask.end(), 1)); }

TokenGrid TokenGrid::crop(int y0, int x0, int h, int w) const {
  if (y0 < 0 || x0 < 0 || y0 + h > height || x0 + w > width) {
    throw std::invalid_argument("crop outside the grid");
  }
  TokenGrid out(h, w, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.mask[out.index(y, x)] = mask[index(y0 + y, x0 + x)];
      for (int c = 0; c < channels; ++c) out.at(y, x, c) = at(y0 + y, x0 + x, c);
    }
  }
  return out;
}

SemanticClass instruction_target_class(std::uint32_t instruction_id) {
  static constexpr std::array<SemanticClass, kNumInstructions> classes{
      SemanticClass::Pipeline,      SemanticClass::Ship,        SemanticClass::WaterTower,
      SemanticClass::ChargeStation, SemanticClass::Boat,        SemanticClass::RedCylinder,
      SemanticClass::BlueCylinder,  SemanticClass::PipeObject,  SemanticClass::RedCylinder};
  if (instruction_id >= classes.size()) {
    throw std::invalid_argument("instruction id out of range");
  }
  return classes[instruction_id];
}

TokenGrid make_token_grid(const EncodedStereo& images, std::uint32_t instruction_id, int grid_size) {
  if (images.empty()) {
    throw std::invalid_argument("token grid needs rendered images");
  }
  TokenGrid g(grid_size, grid_size, kTokenChannels);
  const auto target = static_cast<std::uint8_t>(instruction_target_class(instruction_id));
  for (int gy = 0; gy < grid_size; ++gy) {
    for (int gx = 0; gx < grid_size; ++gx) {
      const int y0 = gy * kGridCell;
      const int x0 = gx * kGridCell;
      const int y1 = std::min(y0 + kGridCell, images.height);
      const int x1 = std::min(x0 + kGridCell, images.width);
      if (y0 >= images.height || x0 >= images.width) {
        g.mask[g.index(gy, gx)] = 0;
        continue;
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      g.at(gy, gx, 0) = 2.0 * (gx + 0.5) / grid_size - 1.0;
      g.at(gy, gx, 1) = 2.0 * (gy + 0.5) / grid_size - 1.0;
      int base = 2;
      for (const EncodedImage* img : {&images.left, &images.right}) {
        std::array<double, kEyeChannels> acc{};
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * images.width + x;
            for (int c = 0; c < 3; ++c) acc[c] += img->rgb[3 * p + c] / 255.0;
            const double d = decode_depth(img->depth[p]);
            acc[3] += std::isfinite(d) ? 1.0 / (1.0 + d) : 0.0;
            acc[4] += img->semantic[p] == target ? 1.0 : 0.0;
          }
        }
        for (int c = 0; c < kEyeChannels; ++c) g.at(gy, gx, base + c) = acc[c] / n;
        base += kEyeChannels;
      }
      g.at(gy, gx, 2 + 2 * kEyeChannels + static_cast<int>(instruction_id)) = 1.0;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// CapParams

CapParams::CapParams(const CapShape& shape) : shape_(shape) {
  if (shape.in_channels <= 0 || shape.mid <= 0 || shape.hidden <= 0 || shape.out != 7 || shape.kernel <= 0 ||
      shape.kernel % 2 == 0) {
    throw std::invalid_argument("invalid CAP shape (odd kernel, 7 outputs, positive widths required)");
  }
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    const std::size_t o = off;
    off += n;
    return o;
  };
  const auto pd = static_cast<std::size_t>(patch_dim());
  const auto m = static_cast<std::size_t>(shape.mid);
  const auto h = static_cast<std::size_t>(shape.hidden);
  const auto o = static_cast<std::size_t>(shape.out);
  off_conv_w_ = take(pd * m);
  off_conv_b_ = take(m);
  off_att_w_ = take(m * m);
  off_att_b_ = take(m);
  off_w1_ = take(m * h);
  off_b1_ = take(h);
  off_w2_ = take(h * o);
  off_b2_ = take(o);
  data_.assign(off, 0.0);
}

CapParams CapParams::init(const CapShape& shape, std::uint64_t seed) {
  CapParams p(shape);
  Rng rng(mix64(seed));
  const auto l = p.layout();
  auto span_of = [&](std::size_t a, std::size_t b) { return std::span<double>(p.data_.data() + a, b - a); };
  fill_uniform(span_of(l.conv_w, l.conv_b), 1.0 / std::sqrt(static_cast<double>(p.patch_dim()) / 9.0), rng);
  fill_uniform(span_of(l.att_w, l.att_b), 1.0 / std::sqrt(static_cast<double>(shape.mid)), rng);
  fill_uniform(span_of(l.w1, l.b1), 1.0 / std::sqrt(static_cast<double>(shape.mid)), rng);
  fill_uniform(span_of(l.w2, l.b2), 0.1 / std::sqrt(static_cast<double>(shape.hidden)), rng);
  p.data_[l.b2 + 3] = 1.0;  // qw
  return p;
}

bool CapParams::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// forward / backward

CapTrace cap_forward_trace(const CapParams& params, const TokenGrid& grid, const CapOptions& opts) {
  const CapShape& s = params.shape();
  if (grid.channels != s.in_channels) {
    throw std::invalid_argument("token grid has " + std::to_string(grid.channels) + " channels, CAP expects " +
                                std::to_string(s.in_channels));
  }
  const int k = s.kernel;
  const int r = k / 2;
  const int C = s.in_channels;
  CapTrace t;
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      if (grid.valid(y, x)) t.cells.push_back(static_cast<int>(grid.index(y, x)));
    }
  }
  if (t.cells.empty()) {
    throw std::invalid_argument("token grid has no valid cells");
  }
  const auto nv = static_cast<Eigen::Index>(t.cells.size());
  t.patches = Eigen::MatrixXd::Zero(nv, params.patch_dim());
  t.scale.resize(t.cells.size());
  for (Eigen::Index i = 0; i < nv; ++i) {
    const int y = t.cells[i] / grid.width;
    const int x = t.cells[i] % grid.width;
    int n_valid = 0;
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        const int yy = y + dy - r;
        const int xx = x + dx - r;
        if (yy < 0 || xx < 0 || yy >= grid.height || xx >= grid.width || !grid.valid(yy, xx)) continue;
        ++n_valid;
        const double* src = grid.features.data() + grid.index(yy, xx) * C;
        for (int c = 0; c < C; ++c) t.patches(i, (dy * k + dx) * C + c) = src[c];
      }
    }
    t.scale[i] = static_cast<double>(k * k) / n_valid;
    t.patches.row(i) *= t.scale[i];
  }
  Eigen::MatrixXd z1 = t.patches * params.conv_w();
  z1.rowwise() += params.conv_b().transpose();
  t.features = opts.linear ? z1 : Eigen::MatrixXd(z1.array().tanh());
  if (opts.linear) {
    t.attention = Eigen::MatrixXd::Ones(nv, s.mid);
  } else {
    Eigen::MatrixXd za = t.features * params.att_w();
    za.rowwise() += params.att_b().transpose();
    t.attention = za.unaryExpr([](double v) { return sigmoid(v); });
  }
  t.pooled = t.features.cwiseProduct(t.attention).colwise().mean().transpose();
  const Eigen::VectorXd z2 = params.mlp_w1().transpose() * t.pooled + params.mlp_b1();
  t.hidden = opts.linear ? z2 : Eigen::VectorXd(z2.array().tanh());
  t.raw = params.mlp_w2().transpose() * t.hidden + params.mlp_b2();
  for (int i = 0; i < 7; ++i) t.output[i] = t.raw(i);
  if (!opts.linear) {
    const double n = t.raw.segment<4>(3).norm();
    if (n < 1e-12) {
      t.output[3] = 1.0;
      t.output[4] = t.output[5] = t.output[6] = 0.0;
    } else {
      for (int i = 3; i < 7; ++i) t.output[i] = t.raw(i) / n;
    }
  }
  return t;
}

std::array<double, 7> cap_forward(const CapParams& params, const TokenGrid& grid, const CapOptions& opts) {
  return cap_forward_trace(params, grid, opts).output;
}

void cap_backward(const CapParams& params, const TokenGrid& grid, const CapTrace& t, std::span<const double> d_output,
                  std::span<const double> d_pooled, std::span<double> grad, std::vector<double>* d_input,
                  const CapOptions& opts) {
  const CapShape& s = params.shape();
  const auto l = params.layout();
  if (grad.size() != params.size() || d_output.size() != 7) {
    throw std::invalid_argument("cap_backward: gradient buffer size mismatch");
  }
  using MapM = Eigen::Map<Eigen::MatrixXd>;
  using MapV = Eigen::Map<Eigen::VectorXd>;
  MapM g_conv_w(grad.data() + l.conv_w, params.patch_dim(), s.mid);
  MapV g_conv_b(grad.data() + l.conv_b, s.mid);
  MapM g_att_w(grad.data() + l.att_w, s.mid, s.mid);
  MapV g_att_b(grad.data() + l.att_b, s.mid);
  MapM g_w1(grad.data() + l.w1, s.mid, s.hidden);
  MapV g_b1(grad.data() + l.b1, s.hidden);
  MapM g_w2(grad.data() + l.w2, s.hidden, s.out);
  MapV g_b2(grad.data() + l.b2, s.out);

  Eigen::VectorXd d_raw = Eigen::Map<const Eigen::VectorXd>(d_output.data(), 7);
  if (!opts.linear) {
    const Eigen::Vector4d qr = t.raw.segment<4>(3);
    const double n = qr.norm();
    if (n < 1e-12) {
      d_raw.segment<4>(3).setZero();
    } else {
      const Eigen::Vector4d q = qr / n;
      const Eigen::Vector4d dq = d_raw.segment<4>(3);
      d_raw.segment<4>(3) = (dq - q * q.dot(dq)) / n;
    }
  }
  g_b2 += d_raw;
  g_w2 += t.hidden * d_raw.transpose();
  Eigen::VectorXd d_z2 = params.mlp_w2() * d_raw;
  if (!opts.linear) d_z2.array() *= 1.0 - t.hidden.array().square();
  g_b1 += d_z2;
  g_w1 += t.pooled * d_z2.transpose();
  Eigen::VectorXd dp = params.mlp_w1() * d_z2;
  if (!d_pooled.empty()) dp += Eigen::Map<const Eigen::VectorXd>(d_pooled.data(), s.mid);

  const auto nv = static_cast<Eigen::Index>(t.cells.size());
  const Eigen::RowVectorXd dg_row = dp.transpose() / static_cast<double>(nv);
  Eigen::MatrixXd d_f = t.attention.array().rowwise() * dg_row.array();
  if (!opts.linear) {
    const Eigen::MatrixXd d_att = t.features.array().rowwise() * dg_row.array();
    const Eigen::MatrixXd d_za = d_att.array() * t.attention.array() * (1.0 - t.attention.array());
    g_att_w += t.features.transpose() * d_za;
    g_att_b += d_za.colwise().sum().transpose();
    d_f += d_za * params.att_w().transpose();
  }
  Eigen::MatrixXd d_z1 = opts.linear ? d_f : Eigen::MatrixXd(d_f.array() * (1.0 - t.features.array().square()));
  g_conv_w += t.patches.transpose() * d_z1;
  g_conv_b += d_z1.colwise().sum().transpose();

  if (d_input) {
    const int k = s.kernel;
    const int r = k / 2;
    const int C = s.in_channels;
    d_input->assign(grid.features.size(), 0.0);
    const Eigen::MatrixXd d_patch = d_z1 * params.conv_w().transpose();
    for (Eigen::Index i = 0; i < nv; ++i) {
      const int y = t.cells[i] / grid.width;
      const int x = t.cells[i] % grid.width;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const int yy = y + dy - r;
          const int xx = x + dx - r;
          if (yy < 0 || xx < 0 || yy >= grid.height || xx >= grid.width || !grid.valid(yy, xx)) continue;
          double* dst = d_input->data() + grid.index(yy, xx) * C;
          for (int c = 0; c < C; ++c) dst[c] += t.scale[i] * d_patch(i, (dy * k + dx) * C + c);
        }
      }
    }
  }
}

double cap_loss(std::span<const double> t, std::span<const double> t_gt) {
  if (t.size() != t_gt.size() || t.empty()) {
    throw std::invalid_argument("cap_loss: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += (t[i] - t_gt[i]) * (t[i] - t_gt[i]);
  return acc / static_cast<double>(t.size());
}

std::vector<double> cap_loss_grad(std::span<const double> t, std::span<const double> t_gt) {
  std::vector<double> g(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) g[i] = 2.0 * (t[i] - t_gt[i]) / static_cast<double>(t.size());
  return g;
}

double total_loss(double l_action, double l_cap, const LossConfig& cfg) { return l_action + cfg.alpha * l_cap; }

void LossConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (batch_size < 1 || steps < 1 || frame_stride < 1 || hidden < 1) {
    throw std::invalid_argument("batch size, steps, frame stride and hidden width must be >= 1");
  }
}

GradCheckResult grad_check(const CapParams& params, const TokenGrid& grid, std::span<const double> label,
                           const CapOptions& opts, std::size_t samples, std::uint64_t seed, double h) {
  const CapTrace t = cap_forward_trace(params, grid, opts);
  const auto d_out = cap_loss_grad(t.output, label);
  std::vector<double> grad(params.size(), 0.0);
  cap_backward(params, grid, t, d_out, {}, grad, nullptr, opts);

  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (samples > 0 && samples < idx.size()) {
    Rng rng(mix64(seed));
    for (std::size_t i = 0; i < samples; ++i) {
      std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
    }
    idx.resize(samples);
  }
  CapParams p = params;
  GradCheckResult res;
  for (std::size_t i : idx) {
    const double orig = p.data()[i];
    p.data()[i] = orig + h;
    const double fp = cap_loss(cap_forward(p, grid, opts), label);
    p.data()[i] = orig - h;
    const double fm = cap_loss(cap_forward(p, grid, opts), label);
    p.data()[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    res.max_relative_error = std::max(res.max_relative_error, relative_error(grad[i], numeric, kGradFloor));
    ++res.checked;
  }
  return res;
}

GradCheckResult grad_check_input(const CapParams& params, const TokenGrid& grid, std::span<const double> label,
                                 const CapOptions& opts, double h) {
  const CapTrace t = cap_forward_trace(params, grid, opts);
  const auto d_out = cap_loss_grad(t.output, label);
  std::vector<double> grad(params.size(), 0.0);
  std::vector<double> d_in;
  cap_backward(params, grid, t, d_out, {}, grad, &d_in, opts);
  TokenGrid g = grid;
  GradCheckResult res;
  for (std::size_t i = 0; i < g.features.size(); ++i) {
    const double orig = g.features[i];
    g.features[i] = orig + h;
    const double fp = cap_loss(cap_forward(params, g, opts), label);
    g.features[i] = orig - h;
    const double fm = cap_loss(cap_forward(params, g, opts), label);
    g.features[i] = orig;
    res.max_relative_error =
        std::max(res.max_relative_error, relative_error(d_in[i], (fp - fm) / (2.0 * h), kGradFloor));
    ++res.checked;
  }
  return res;
}

// ---------------------------------------------------------------------------
// BcHead

BcHead::BcHead(int in_dim, int hidden) : in_(in_dim), hidden_(hidden) {
  if (in_dim <= 0 || hidden <= 0) {
    throw std::invalid_argument("BcHead dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(in_dim) * hidden + hidden + static_cast<std::size_t>(hidden) * kActionDim +
                   kActionDim,
               0.0);
}

BcHead BcHead::init(int in_dim, int hidden, std::uint64_t seed) {
  BcHead b(in_dim, hidden);
  Rng rng(mix64(seed ^ 0xbcULL));
  const std::size_t n1 = static_cast<std::size_t>(in_dim) * hidden;
  fill_uniform(std::span<double>(b.data_.data(), n1), 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
  const std::size_t off2 = n1 + static_cast<std::size_t>(hidden);
  fill_uniform(std::span<double>(b.data_.data() + off2, static_cast<std::size_t>(hidden) * kActionDim),
               1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  return b;
}

bool BcHead::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

BcHead::Trace BcHead::forward(const Eigen::VectorXd& input) const {
  if (input.size() != in_) {
    throw std::invalid_argument("BcHead input has wrong dimension");
  }
  const double* d = data_.data();
  Eigen::Map<const Eigen::MatrixXd> w1(d, in_, hidden_);
  Eigen::Map<const Eigen::VectorXd> b1(d + in_ * hidden_, hidden_);
  Eigen::Map<const Eigen::MatrixXd> w2(d + in_ * hidden_ + hidden_, hidden_, kActionDim);
  Eigen::Map<const Eigen::VectorXd> b2(d + in_ * hidden_ + hidden_ + hidden_ * kActionDim, kActionDim);
  Trace t;
  t.input = input;
  t.hidden = (w1.transpose() * input + b1).array().tanh();
  t.output = w2.transpose() * t.hidden + b2;
  return t;
}

Eigen::VectorXd BcHead::backward(const Trace& t, const Eigen::VectorXd& d_output, std::span<double> grad) const {
  const double* d = data_.data();
  Eigen::Map<const Eigen::MatrixXd> w1(d, in_, hidden_);
  Eigen::Map<const Eigen::MatrixXd> w2(d + in_ * hidden_ + hidden_, hidden_, kActionDim);
  double* g = grad.data();
  Eigen::Map<Eigen::MatrixXd> g_w1(g, in_, hidden_);
  Eigen::Map<Eigen::VectorXd> g_b1(g + in_ * hidden_, hidden_);
  Eigen::Map<Eigen::MatrixXd> g_w2(g + in_ * hidden_ + hidden_, hidden_, kActionDim);
  Eigen::Map<Eigen::VectorXd> g_b2(g + in_ * hidden_ + hidden_ + hidden_ * kActionDim, kActionDim);
  g_b2 += d_output;
  g_w2 += t.hidden * d_output.transpose();
  const Eigen::VectorXd d_z = (w2 * d_output).array() * (1.0 - t.hidden.array().square());
  g_b1 += d_z;
  g_w1 += t.input * d_z.transpose();
  return w1 * d_z;
}

}  // namespace uwsim
