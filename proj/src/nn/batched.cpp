#include "roadsel/nn/batched.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <omp.h>

#include "roadsel/errors.hpp"
#include "roadsel/nn/reference.hpp"

namespace roadsel::nn::batched {
namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct DirParams {
  Mat<S> W, U;
  Vec<S> b, dense_w;
};

template <typename S>
struct CastParams {
  DirParams<S> dir[2];
  S dense_b;
};

template <typename S>
CastParams<S> cast(const ParamSet& p) {
  CastParams<S> c;
  const int H = p.hidden();
  for (int d = 0; d < 2; ++d) {
    const auto dd = static_cast<Direction>(d);
    c.dir[d].W = p.W(dd).cast<S>();
    c.dir[d].U = p.U(dd).cast<S>();
    c.dir[d].b = p.b(dd).cast<S>();
    c.dir[d].dense_w = p.dense_w().segment(d * H, H).cast<S>();
  }
  c.dense_b = static_cast<S>(p.dense_b());
  return c;
}

// Activations of one direction over a chunk. Column t*B + b holds timestep t of
// sequence b; state blocks are offset by one so block 0 is the zero initial state.
template <typename S>
struct DirWork {
  Mat<S> x, pre, act, tanh_c, h, c, dz;
};

template <typename S>
struct Workspace {
  DirWork<S> dir[2];
  Mat<S> dh, dc, dh_next, dc_next;
};

template <typename S>
auto sigmoid(const Eigen::ArrayBase<S>& z) {
  using T = typename S::Scalar;
  return (T(0.5) * (T(0.5) * z).tanh() + T(0.5));
}

template <typename S>
void run_direction(const DirParams<S>& P, Direction d, std::span<const InputSequence* const> seqs,
                   const std::vector<int>& len, int steps, DirWork<S>& w) {
  const int B = static_cast<int>(seqs.size());
  const int H = static_cast<int>(P.U.cols());
  const int D = static_cast<int>(P.W.cols());
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * B;

  w.x.setZero(D, cols);
  for (int b = 0; b < B; ++b) {
    const auto& s = *seqs[b];
    for (int t = 0; t < len[b]; ++t) {
      const int src = d == Direction::kForward ? t : len[b] - 1 - t;
      for (int k = 0; k < D; ++k) w.x(k, static_cast<Eigen::Index>(t) * B + b) = static_cast<S>(s.at(src, k));
    }
  }
  w.pre.noalias() = P.W * w.x;
  w.pre.colwise() += P.b;
  w.act.resize(4 * H, cols);
  w.tanh_c.resize(H, cols);
  w.h.setZero(H, cols + B);
  w.c.setZero(H, cols + B);

  for (int t = 0; t < steps; ++t) {
    const Eigen::Index at = static_cast<Eigen::Index>(t) * B;
    auto z = w.act.middleCols(at, B);
    z.noalias() = P.U * w.h.middleCols(at, B);
    z += w.pre.middleCols(at, B);
    z.topRows(3 * H) = sigmoid(z.topRows(3 * H).array()).matrix();
    z.bottomRows(H) = z.bottomRows(H).array().tanh().matrix();

    auto c_new = w.c.middleCols(at + B, B);
    c_new = (z.middleRows(H, H).array() * w.c.middleCols(at, B).array() +
             z.topRows(H).array() * z.bottomRows(H).array())
                .matrix();
    auto tc = w.tanh_c.middleCols(at, B);
    tc = c_new.array().tanh().matrix();
    w.h.middleCols(at + B, B) = (z.middleRows(2 * H, H).array() * tc.array()).matrix();

    for (int b = 0; b < B; ++b) {
      if (t >= len[b]) {
        w.h.col(at + B + b) = w.h.col(at + b);
        w.c.col(at + B + b) = w.c.col(at + b);
      }
    }
  }
}

template <typename S>
void backprop_direction(const DirParams<S>& P, const std::vector<int>& len, int steps, int B, const Vec<S>& dlogit,
                        DirWork<S>& w, Workspace<S>& ws, ParamSet& grad, Direction d) {
  const int H = static_cast<int>(P.U.cols());
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * B;
  ws.dh.noalias() = P.dense_w * dlogit.transpose();
  ws.dc.setZero(H, B);
  w.dz.resize(4 * H, cols);

  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::Index at = static_cast<Eigen::Index>(t) * B;
    const auto a = w.act.middleCols(at, B).array();
    const auto i = a.topRows(H);
    const auto f = a.middleRows(H, H);
    const auto o = a.middleRows(2 * H, H);
    const auto g = a.bottomRows(H);
    const auto tc = w.tanh_c.middleCols(at, B).array();
    const auto c_prev = w.c.middleCols(at, B).array();
    const auto dh = ws.dh.array();

    ws.dc_next = (ws.dc.array() + dh * o * (S(1) - tc * tc)).matrix();  // total dc at step t
    auto dz = w.dz.middleCols(at, B);
    dz.topRows(H) = (ws.dc_next.array() * g * i * (S(1) - i)).matrix();
    dz.middleRows(H, H) = (ws.dc_next.array() * c_prev * f * (S(1) - f)).matrix();
    dz.middleRows(2 * H, H) = (dh * tc * o * (S(1) - o)).matrix();
    dz.bottomRows(H) = (ws.dc_next.array() * i * (S(1) - g * g)).matrix();
    ws.dc_next = (ws.dc_next.array() * f).matrix();

    for (int b = 0; b < B; ++b) {
      if (t >= len[b]) {
        dz.col(b).setZero();
        ws.dc_next.col(b) = ws.dc.col(b);
      }
    }
    ws.dh_next.noalias() = P.U.transpose() * dz;
    for (int b = 0; b < B; ++b) {
      if (t >= len[b]) ws.dh_next.col(b) = ws.dh.col(b);
    }
    std::swap(ws.dh, ws.dh_next);
    std::swap(ws.dc, ws.dc_next);
  }

  const Mat<S> gW = w.dz * w.x.transpose();
  const Mat<S> gU = w.dz * w.h.leftCols(cols).transpose();
  const Vec<S> gb = w.dz.rowwise().sum();
  grad.W(d) += gW.template cast<double>();
  grad.U(d) += gU.template cast<double>();
  grad.b(d) += gb.template cast<double>();
}

struct ChunkOutput {
  std::vector<double> probabilities;
  double loss_sum = 0.0;
};

template <typename S>
ChunkOutput process_chunk(const CastParams<S>& P, std::span<const InputSequence* const> seqs, const double* targets,
                          double clamp_eps, ParamSet* grad, Workspace<S>& ws) {
  const int B = static_cast<int>(seqs.size());
  const int H = static_cast<int>(P.dir[0].U.cols());
  std::vector<int> len(B);
  int steps = 0;
  for (int b = 0; b < B; ++b) {
    len[b] = seqs[b]->steps();
    steps = std::max(steps, len[b]);
  }
  run_direction(P.dir[0], Direction::kForward, seqs, len, steps, ws.dir[0]);
  run_direction(P.dir[1], Direction::kBackward, seqs, len, steps, ws.dir[1]);

  const Eigen::Index last = static_cast<Eigen::Index>(steps) * B;
  const Vec<S> z = (ws.dir[0].h.middleCols(last, B).transpose() * P.dir[0].dense_w +
                    ws.dir[1].h.middleCols(last, B).transpose() * P.dir[1].dense_w)
                       .array() +
                   P.dense_b;

  ChunkOutput out;
  out.probabilities.resize(B);
  Vec<S> dlogit = Vec<S>::Zero(B);
  for (int b = 0; b < B; ++b) {
    // Saturated logits are pulled back inside (0, 1) so the output is always a usable probability.
    const double prob = std::clamp(reference::sigmoid(static_cast<double>(z[b])), std::numeric_limits<double>::min(),
                                   std::nextafter(1.0, 0.0));
    out.probabilities[b] = prob;
    if (targets) {
      out.loss_sum += reference::bce(prob, targets[b], clamp_eps);
      if (prob > clamp_eps && prob < 1.0 - clamp_eps) dlogit[b] = static_cast<S>(prob - targets[b]);
    }
  }
  if (!grad) return out;

  for (int d = 0; d < 2; ++d) {
    const Vec<double> g = (ws.dir[d].h.middleCols(last, B) * dlogit).template cast<double>();
    grad->dense_w().segment(d * H, H) += g;
  }
  grad->dense_b() += static_cast<double>(dlogit.sum());
  backprop_direction(P.dir[0], len, steps, B, dlogit, ws.dir[0], ws, *grad, Direction::kForward);
  backprop_direction(P.dir[1], len, steps, B, dlogit, ws.dir[1], ws, *grad, Direction::kBackward);
  return out;
}

void check_batch(const ParamSet& p, std::span<const InputSequence* const> seqs) {
  if (seqs.empty()) throw ArgumentError("batch must not be empty");
  for (const auto* s : seqs) {
    if (s->dim != p.input()) {
      throw ArgumentError("sequence has " + std::to_string(s->dim) + " features per step, model expects " +
                          std::to_string(p.input()));
    }
    if (s->steps() < 1) throw ArgumentError("sequence must have at least one step");
  }
}

template <typename S>
BatchResult run(const ParamSet& p, std::span<const InputSequence* const> seqs, const double* targets, double clamp_eps,
                bool want_grad) {
  check_batch(p, seqs);
  const CastParams<S> P = cast<S>(p);
  const int n = static_cast<int>(seqs.size());
  const int chunks = (n + kChunkSize - 1) / kChunkSize;

  BatchResult result;
  result.probabilities.resize(n);
  if (want_grad) result.gradient = ParamSet(p.hidden(), p.input());

#pragma omp parallel
  {
    Workspace<S> ws;
    ParamSet local;
    if (want_grad) local = ParamSet(p.hidden(), p.input());
#pragma omp for ordered schedule(static, 1)
    for (int c = 0; c < chunks; ++c) {
      const int begin = c * kChunkSize;
      const int size = std::min(kChunkSize, n - begin);
      if (want_grad) local.flat().setZero();
      const ChunkOutput out = process_chunk<S>(P, seqs.subspan(begin, size), targets ? targets + begin : nullptr,
                                               clamp_eps, want_grad ? &local : nullptr, ws);
      std::copy(out.probabilities.begin(), out.probabilities.end(), result.probabilities.begin() + begin);
#pragma omp ordered
      {
        result.loss_sum += out.loss_sum;
        if (want_grad) result.gradient.flat() += local.flat();
      }
    }
  }
  return result;
}

}  // namespace

std::vector<double> forward(const ParamSet& p, std::span<const InputSequence* const> seqs, Precision precision) {
  auto r = precision == Precision::kFloat32 ? run<float>(p, seqs, nullptr, 0.0, false)
                                            : run<double>(p, seqs, nullptr, 0.0, false);
  return std::move(r.probabilities);
}

BatchResult loss_and_gradient(const ParamSet& p, std::span<const InputSequence* const> seqs,
                              std::span<const double> targets, double clamp_eps, Precision precision) {
  if (targets.size() != seqs.size()) throw ArgumentError("one target per sequence is required");
  return precision == Precision::kFloat32 ? run<float>(p, seqs, targets.data(), clamp_eps, true)
                                          : run<double>(p, seqs, targets.data(), clamp_eps, true);
}

}  // namespace roadsel::nn::batched
