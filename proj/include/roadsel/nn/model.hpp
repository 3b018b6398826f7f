#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "roadsel/features.hpp"

namespace roadsel::nn {

// Row-block order of the stacked gate matrices.
enum class Gate : int { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };
inline constexpr int kNumGates = 4;

enum class Direction : int { kForward = 0, kBackward = 1 };

/// All trainable parameters of the bidirectional classifier, stored contiguously.
///
/// Layout: [forward W | forward U | forward b | backward W | backward U |
/// backward b | dense_w | dense_b]. W is 4H x D and U is 4H x H, both
/// column-major, with gate g occupying rows [g*H, (g+1)*H). dense_w has 2H
/// entries: forward final state first, then backward.
/// The same type holds gradients and Adam moments.
class ParamSet {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;
  using MatMap = Eigen::Map<Matrix>;
  using ConstMatMap = Eigen::Map<const Matrix>;
  using VecMap = Eigen::Map<Vector>;
  using ConstVecMap = Eigen::Map<const Vector>;

  ParamSet() = default;
  ParamSet(int hidden, int input);

  int hidden() const { return hidden_; }
  int input() const { return input_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  MatMap W(Direction d);
  ConstMatMap W(Direction d) const;
  MatMap U(Direction d);
  ConstMatMap U(Direction d) const;
  VecMap b(Direction d);
  ConstVecMap b(Direction d) const;
  VecMap dense_w();
  ConstVecMap dense_w() const;
  double& dense_b() { return flat_[flat_.size() - 1]; }
  double dense_b() const { return flat_[flat_.size() - 1]; }

  // Offsets into flat(), for tests and diagnostics.
  std::size_t direction_offset(Direction d) const;
  std::size_t recurrent_offset(Direction d) const;
  std::size_t bias_offset(Direction d) const;
  std::size_t dense_offset() const;

  bool same_shape(const ParamSet& other) const { return hidden_ == other.hidden_ && input_ == other.input_; }

 private:
  std::size_t direction_size() const;

  int hidden_ = 0;
  int input_ = 0;
  Vector flat_;
};

enum class Precision { kFloat32, kFloat64 };

struct TrainConfig {
  int epochs = 400;
  int batch_size = 1024;
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t rng_seed = 0;
  int hidden_size = 220;
  double bce_clamp_epsilon = 1e-7;
  bool shuffle_each_epoch = true;
  bool standardize_features = false;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  // Arithmetic used by the training kernel; inference always runs in double.
  Precision precision = Precision::kFloat32;

  void check() const;
};

struct BiLstmClassifier {
  ParamSet params;
  features::FeatureScaler scaler;
  TrainConfig config;

  int hidden_size() const { return params.hidden(); }
  int input_size() const { return params.input(); }
};

/// Glorot-uniform input and recurrent weights per gate block, forget-gate bias
/// 1, other biases 0, Glorot-uniform dense weights, dense bias 0.
ParamSet init_params(int hidden, int input, std::uint64_t seed);

/// Model-ready input: `steps()` timesteps of `dim` features, row-major.
struct InputSequence {
  int dim = 2;
  std::vector<double> values;

  int steps() const { return dim == 0 ? 0 : static_cast<int>(values.size()) / dim; }
  double at(int t, int k) const { return values[static_cast<std::size_t>(t) * dim + k]; }
};

InputSequence prepare(const features::SegmentFeatureSequence& seq, const features::FeatureScaler& scaler);
std::vector<InputSequence> prepare_all(std::span<const features::SegmentFeatureSequence> seqs,
                                       const features::FeatureScaler& scaler);

}  // namespace roadsel::nn
