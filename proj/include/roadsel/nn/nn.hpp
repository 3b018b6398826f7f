#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadsel/label.hpp"
#include "roadsel/nn/model.hpp"
#include "roadsel/nn/reference.hpp"

namespace roadsel::nn {

using reference::lstm_cell_step;

// Probability of PASS for one sequence (batched kernel, double precision).
double forward(const BiLstmClassifier& model, const features::SegmentFeatureSequence& seq);
double forward(const ParamSet& params, const InputSequence& seq);

// Clamped binary cross-entropy; always finite and non-negative.
double bce_loss(double prob, double target, double clamp_eps = 1e-7);

struct LabeledInput {
  const InputSequence* sequence;
  double target;  // 0 = FAIL, 1 = PASS
};

/// Gradient of the mean clamped BCE over the batch with respect to every parameter.
ParamSet backward(const ParamSet& params, std::span<const LabeledInput> batch, double clamp_eps = 1e-7,
                  double* mean_loss = nullptr);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  explicit AdamState(std::size_t n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update at step t (t >= 1).
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads, AdamState& state,
               long t, const TrainConfig& cfg);

struct ValidationPoint {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::vector<ValidationPoint> validation;
  std::vector<std::string> warnings;
};

struct TrainResult {
  BiLstmClassifier model;
  TrainHistory history;
};

struct ValidationSet {
  std::span<const features::SegmentFeatureSequence> sequences;
  std::span<const Label> labels;
};

/// Mini-batch Adam on mean BCE. Deterministic for a given cfg.rng_seed:
/// initialization, per-epoch shuffling and batching derive from it, and the
/// kernel's reduction order is fixed. The last partial batch is used.
TrainResult train(std::span<const features::SegmentFeatureSequence> seqs, std::span<const Label> labels,
                  const TrainConfig& cfg, std::optional<ValidationSet> validation = std::nullopt,
                  const std::function<void(int, double)>& on_epoch = {});

struct Prediction {
  Label label;
  double probability;
};

Prediction predict(const BiLstmClassifier& model, const features::SegmentFeatureSequence& seq);
std::vector<Prediction> predict_batch(const BiLstmClassifier& model,
                                      std::span<const features::SegmentFeatureSequence> seqs);

struct GradCheckConfig {
  int hidden = 4;
  int input = 2;
  int steps = 7;
  int batch = 3;
  std::uint64_t seed = 1;
  double fd_step = 1e-5;
  double param_scale = 0.5;
  bool zero_params = false;
  bool ragged = false;  // give batch members different lengths (steps, steps-1, ...)
  // Fault injection: scale the analytic gradient of the largest-magnitude recurrent weight by (1 + factor).
  std::optional<double> corrupt_recurrent;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t num_params = 0;
};

// Guarded relative error |a - n| / max(|a| + |n|, 1e-6).
double relative_error(double analytic, double numeric);

/// Compares backward() against central finite differences of the mean loss over every parameter.
GradCheckResult grad_check(const GradCheckConfig& cfg);

}  // namespace roadsel::nn
