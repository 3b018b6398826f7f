#include <cmath>
#include <random>
#include <string>

#include "roadsel/errors.hpp"
#include "roadsel/nn/model.hpp"

namespace roadsel::nn {

ParamSet::ParamSet(int hidden, int input) : hidden_(hidden), input_(input) {
  if (hidden < 1 || input < 1) throw ArgumentError("hidden and input sizes must be positive");
  flat_ = Vector::Zero(static_cast<Eigen::Index>(2 * direction_size() + 2 * hidden + 1));
}

std::size_t ParamSet::direction_size() const {
  const std::size_t g = static_cast<std::size_t>(kNumGates) * hidden_;
  return g * input_ + g * hidden_ + g;
}

std::size_t ParamSet::direction_offset(Direction d) const {
  return static_cast<std::size_t>(d) * direction_size();
}
std::size_t ParamSet::recurrent_offset(Direction d) const {
  return direction_offset(d) + static_cast<std::size_t>(kNumGates) * hidden_ * input_;
}
std::size_t ParamSet::bias_offset(Direction d) const {
  return recurrent_offset(d) + static_cast<std::size_t>(kNumGates) * hidden_ * hidden_;
}
std::size_t ParamSet::dense_offset() const { return 2 * direction_size(); }

ParamSet::MatMap ParamSet::W(Direction d) {
  return MatMap(flat_.data() + direction_offset(d), kNumGates * hidden_, input_);
}
ParamSet::ConstMatMap ParamSet::W(Direction d) const {
  return ConstMatMap(flat_.data() + direction_offset(d), kNumGates * hidden_, input_);
}
ParamSet::MatMap ParamSet::U(Direction d) {
  return MatMap(flat_.data() + recurrent_offset(d), kNumGates * hidden_, hidden_);
}
ParamSet::ConstMatMap ParamSet::U(Direction d) const {
  return ConstMatMap(flat_.data() + recurrent_offset(d), kNumGates * hidden_, hidden_);
}
ParamSet::VecMap ParamSet::b(Direction d) { return VecMap(flat_.data() + bias_offset(d), kNumGates * hidden_); }
ParamSet::ConstVecMap ParamSet::b(Direction d) const {
  return ConstVecMap(flat_.data() + bias_offset(d), kNumGates * hidden_);
}
ParamSet::VecMap ParamSet::dense_w() { return VecMap(flat_.data() + dense_offset(), 2 * hidden_); }
ParamSet::ConstVecMap ParamSet::dense_w() const {
  return ConstVecMap(flat_.data() + dense_offset(), 2 * hidden_);
}

void TrainConfig::check() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (hidden_size < 1) throw ArgumentError("hidden_size must be >= 1");
  if (!(bce_clamp_epsilon > 0.0 && bce_clamp_epsilon < 0.5)) {
    throw ArgumentError("bce_clamp_epsilon must lie in (0, 0.5)");
  }
  if (grad_clip_norm < 0.0) throw ArgumentError("grad_clip_norm must be >= 0");
}

ParamSet init_params(int hidden, int input, std::uint64_t seed) {
  ParamSet p(hidden, input);
  std::mt19937_64 rng(seed);
  auto fill = [&](auto block, double fan_in, double fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = u(rng);
    }
  };
  for (Direction d : {Direction::kForward, Direction::kBackward}) {
    for (int g = 0; g < kNumGates; ++g) {
      fill(p.W(d).middleRows(g * hidden, hidden), input, hidden);
      fill(p.U(d).middleRows(g * hidden, hidden), hidden, hidden);
    }
    p.b(d).setZero();
    p.b(d).segment(static_cast<int>(Gate::kForget) * hidden, hidden).setOnes();
  }
  {
    auto w = p.dense_w();
    const double s = std::sqrt(6.0 / (2.0 * hidden + 1.0));
    std::uniform_real_distribution<double> u(-s, s);
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = u(rng);
  }
  p.dense_b() = 0.0;
  return p;
}

InputSequence prepare(const features::SegmentFeatureSequence& seq, const features::FeatureScaler& scaler) {
  InputSequence in;
  in.dim = 2;
  in.values.reserve(seq.features.size() * 2);
  for (const auto& f : seq.features) {
    const auto v = scaler.apply(f);
    in.values.push_back(v[0]);
    in.values.push_back(v[1]);
  }
  return in;
}

std::vector<InputSequence> prepare_all(std::span<const features::SegmentFeatureSequence> seqs,
                                       const features::FeatureScaler& scaler) {
  std::vector<InputSequence> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(prepare(s, scaler));
  return out;
}

}  // namespace roadsel::nn
