#include "roadsel/nn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roadsel/errors.hpp"

namespace roadsel::nn::reference {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

constexpr int kI = static_cast<int>(Gate::kInput);
constexpr int kF = static_cast<int>(Gate::kForget);
constexpr int kO = static_cast<int>(Gate::kOutput);
constexpr int kG = static_cast<int>(Gate::kCandidate);

struct StepCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, o, g, c, tanh_c, h;
};

// Gate activations for one step. Fills cache.i/f/o/g/c/tanh_c/h.
void step(const ParamSet& p, Direction d, StepCache& s) {
  const int H = p.hidden();
  const int D = p.input();
  const auto W = p.W(d);
  const auto U = p.U(d);
  const auto b = p.b(d);
  s.i.assign(H, 0.0);
  s.f.assign(H, 0.0);
  s.o.assign(H, 0.0);
  s.g.assign(H, 0.0);
  s.c.assign(H, 0.0);
  s.tanh_c.assign(H, 0.0);
  s.h.assign(H, 0.0);
  for (int j = 0; j < H; ++j) {
    double z[kNumGates];
    for (int gate = 0; gate < kNumGates; ++gate) {
      const int row = gate * H + j;
      double acc = b[row];
      for (int k = 0; k < D; ++k) acc += W(row, k) * s.x[k];
      for (int k = 0; k < H; ++k) acc += U(row, k) * s.h_prev[k];
      z[gate] = acc;
    }
    s.i[j] = sigmoid(z[kI]);
    s.f[j] = sigmoid(z[kF]);
    s.o[j] = sigmoid(z[kO]);
    s.g[j] = std::tanh(z[kG]);
    s.c[j] = s.f[j] * s.c_prev[j] + s.i[j] * s.g[j];
    s.tanh_c[j] = std::tanh(s.c[j]);
    s.h[j] = s.o[j] * s.tanh_c[j];
  }
}

std::vector<StepCache> unroll(const ParamSet& p, Direction d, const InputSequence& seq) {
  const int T = seq.steps();
  const int H = p.hidden();
  std::vector<StepCache> caches(T);
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (int n = 0; n < T; ++n) {
    const int t = d == Direction::kForward ? n : T - 1 - n;
    auto& s = caches[n];
    s.x.assign(seq.values.begin() + static_cast<std::ptrdiff_t>(t) * seq.dim,
               seq.values.begin() + static_cast<std::ptrdiff_t>(t + 1) * seq.dim);
    s.h_prev = h;
    s.c_prev = c;
    step(p, d, s);
    h = s.h;
    c = s.c;
  }
  return caches;
}

void check_input(const ParamSet& p, const InputSequence& seq) {
  if (seq.dim != p.input()) {
    throw ArgumentError("sequence has " + std::to_string(seq.dim) + " features per step, model expects " +
                        std::to_string(p.input()));
  }
  if (seq.steps() < 1) throw ArgumentError("sequence must have at least one step");
}

double logit(const ParamSet& p, const std::vector<double>& hf, const std::vector<double>& hb) {
  const int H = p.hidden();
  const auto w = p.dense_w();
  double z = p.dense_b();
  for (int j = 0; j < H; ++j) z += w[j] * hf[j];
  for (int j = 0; j < H; ++j) z += w[H + j] * hb[j];
  return z;
}

// Accumulates one direction's parameter gradients given dL/dh at the final step.
void backprop_direction(const ParamSet& p, Direction d, const std::vector<StepCache>& caches,
                        std::vector<double> dh, ParamSet& grad) {
  const int H = p.hidden();
  const int D = p.input();
  const auto U = p.U(d);
  auto gW = grad.W(d);
  auto gU = grad.U(d);
  auto gb = grad.b(d);
  std::vector<double> dc(H, 0.0), dz(static_cast<std::size_t>(kNumGates) * H, 0.0);
  for (int n = static_cast<int>(caches.size()) - 1; n >= 0; --n) {
    const auto& s = caches[n];
    for (int j = 0; j < H; ++j) {
      const double d_o = dh[j] * s.tanh_c[j];
      const double d_c = dc[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
      const double d_i = d_c * s.g[j];
      const double d_g = d_c * s.i[j];
      const double d_f = d_c * s.c_prev[j];
      dz[kI * H + j] = d_i * s.i[j] * (1.0 - s.i[j]);
      dz[kF * H + j] = d_f * s.f[j] * (1.0 - s.f[j]);
      dz[kO * H + j] = d_o * s.o[j] * (1.0 - s.o[j]);
      dz[kG * H + j] = d_g * (1.0 - s.g[j] * s.g[j]);
      dc[j] = d_c * s.f[j];
    }
    for (int row = 0; row < kNumGates * H; ++row) {
      gb[row] += dz[row];
      for (int k = 0; k < D; ++k) gW(row, k) += dz[row] * s.x[k];
      for (int k = 0; k < H; ++k) gU(row, k) += dz[row] * s.h_prev[k];
    }
    for (int k = 0; k < H; ++k) {
      double acc = 0.0;
      for (int row = 0; row < kNumGates * H; ++row) acc += U(row, k) * dz[row];
      dh[k] = acc;
    }
  }
}

}  // namespace

CellState lstm_cell_step(const ParamSet& p, Direction d, std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev) {
  const auto H = static_cast<std::size_t>(p.hidden());
  if (x.size() != static_cast<std::size_t>(p.input()) || h_prev.size() != H || c_prev.size() != H) {
    throw ArgumentError("lstm_cell_step: input or state size does not match the parameters");
  }
  StepCache s;
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.c_prev.assign(c_prev.begin(), c_prev.end());
  step(p, d, s);
  return {std::move(s.h), std::move(s.c)};
}

std::vector<double> run_direction(const ParamSet& p, Direction d, const InputSequence& seq) {
  check_input(p, seq);
  return unroll(p, d, seq).back().h;
}

double forward(const ParamSet& p, const InputSequence& seq) {
  check_input(p, seq);
  return sigmoid(logit(p, run_direction(p, Direction::kForward, seq), run_direction(p, Direction::kBackward, seq)));
}

double bce(double prob, double target, double clamp_eps) {
  const double q = std::clamp(prob, clamp_eps, 1.0 - clamp_eps);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

ParamSet example_gradient(const ParamSet& p, const InputSequence& seq, double target, double clamp_eps,
                          double* loss) {
  check_input(p, seq);
  const int H = p.hidden();
  const auto fwd = unroll(p, Direction::kForward, seq);
  const auto bwd = unroll(p, Direction::kBackward, seq);
  const auto& hf = fwd.back().h;
  const auto& hb = bwd.back().h;
  const double prob = sigmoid(logit(p, hf, hb));
  if (loss) *loss = bce(prob, target, clamp_eps);

  ParamSet grad(H, p.input());
  // Inside the clamp window dL/dz = p - y; outside it the clamped loss is flat.
  const double dz = (prob > clamp_eps && prob < 1.0 - clamp_eps) ? prob - target : 0.0;
  auto gw = grad.dense_w();
  const auto w = p.dense_w();
  std::vector<double> dhf(H), dhb(H);
  for (int j = 0; j < H; ++j) {
    gw[j] = dz * hf[j];
    gw[H + j] = dz * hb[j];
    dhf[j] = dz * w[j];
    dhb[j] = dz * w[H + j];
  }
  grad.dense_b() = dz;
  backprop_direction(p, Direction::kForward, fwd, dhf, grad);
  backprop_direction(p, Direction::kBackward, bwd, dhb, grad);
  return grad;
}

ParamSet batch_gradient(const ParamSet& p, std::span<const InputSequence> seqs, std::span<const double> targets,
                        double clamp_eps, double* mean_loss) {
  if (seqs.empty() || seqs.size() != targets.size()) {
    throw ArgumentError("batch_gradient needs a non-empty batch with one target per sequence");
  }
  ParamSet total(p.hidden(), p.input());
  double loss_sum = 0.0;
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    double l = 0.0;
    total.flat() += example_gradient(p, seqs[n], targets[n], clamp_eps, &l).flat();
    loss_sum += l;
  }
  const double inv = 1.0 / static_cast<double>(seqs.size());
  total.flat() *= inv;
  if (mean_loss) *mean_loss = loss_sum * inv;
  return total;
}

}  // namespace roadsel::nn::reference
