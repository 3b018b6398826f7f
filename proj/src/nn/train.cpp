#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "roadsel/errors.hpp"
#include "roadsel/nn/batched.hpp"
#include "roadsel/nn/nn.hpp"
#include "roadsel/rng.hpp"

namespace roadsel::nn {

double forward(const ParamSet& params, const InputSequence& seq) {
  const InputSequence* one[] = {&seq};
  return batched::forward(params, one).front();
}

double forward(const BiLstmClassifier& model, const features::SegmentFeatureSequence& seq) {
  if (seq.features.empty()) throw ArgumentError("cannot run the model on an empty sequence");
  return forward(model.params, prepare(seq, model.scaler));
}

double bce_loss(double prob, double target, double clamp_eps) { return reference::bce(prob, target, clamp_eps); }

ParamSet backward(const ParamSet& params, std::span<const LabeledInput> batch, double clamp_eps, double* mean_loss) {
  if (batch.empty()) throw ArgumentError("backward needs a non-empty batch");
  std::vector<const InputSequence*> seqs;
  std::vector<double> targets;
  seqs.reserve(batch.size());
  targets.reserve(batch.size());
  for (const auto& e : batch) {
    seqs.push_back(e.sequence);
    targets.push_back(e.target);
  }
  auto r = batched::loss_and_gradient(params, seqs, targets, clamp_eps);
  const double inv = 1.0 / static_cast<double>(batch.size());
  r.gradient.flat() *= inv;
  if (mean_loss) *mean_loss = r.loss_sum * inv;
  return std::move(r.gradient);
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads, AdamState& state,
               long t, const TrainConfig& cfg) {
  if (t < 1) throw ArgumentError("adam_step requires t >= 1");
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ArgumentError("adam_step: parameter, gradient and moment sizes differ");
  }
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  state.m = b1 * state.m + (1.0 - b1) * grads;
  state.v = b2 * state.v + (1.0 - b2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  params.array() -=
      cfg.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_epsilon);
}

namespace {

ValidationPoint evaluate(const BiLstmClassifier& model, const ValidationSet& v) {
  const auto preds = predict_batch(model, v.sequences);
  ValidationPoint out;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    out.loss += bce_loss(preds[n].probability, to_target(v.labels[n]), model.config.bce_clamp_epsilon);
    if (preds[n].label == v.labels[n]) ++correct;
  }
  out.loss /= static_cast<double>(preds.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  return out;
}

}  // namespace

TrainResult train(std::span<const features::SegmentFeatureSequence> seqs, std::span<const Label> labels,
                  const TrainConfig& cfg, std::optional<ValidationSet> validation,
                  const std::function<void(int, double)>& on_epoch) {
  cfg.check();
  if (seqs.empty()) throw ArgumentError("training set is empty");
  if (seqs.size() != labels.size()) throw ArgumentError("one label per sequence is required");
  if (validation && validation->sequences.size() != validation->labels.size()) {
    throw ArgumentError("validation set needs one label per sequence");
  }

  TrainResult result;
  const auto passes = std::count(labels.begin(), labels.end(), Label::kPass);
  if (passes == 0 || passes == static_cast<std::ptrdiff_t>(labels.size())) {
    result.history.warnings.push_back("training set contains a single class");
  }

  BiLstmClassifier& model = result.model;
  model.config = cfg;
  if (cfg.standardize_features) model.scaler = features::FeatureScaler::fit(seqs);
  model.params = init_params(cfg.hidden_size, 2, mix_seed(cfg.rng_seed, 0));

  const std::vector<InputSequence> inputs = prepare_all(seqs, model.scaler);
  std::vector<double> targets(labels.size());
  std::transform(labels.begin(), labels.end(), targets.begin(), to_target);

  const std::size_t n = inputs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(cfg.rng_seed, 1));

  AdamState adam(model.params.size());
  long step = 0;
  std::vector<const InputSequence*> batch_seqs;
  std::vector<double> batch_targets;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      batch_seqs.clear();
      batch_targets.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_seqs.push_back(&inputs[order[k]]);
        batch_targets.push_back(targets[order[k]]);
      }
      auto r = batched::loss_and_gradient(model.params, batch_seqs, batch_targets, cfg.bce_clamp_epsilon,
                                          cfg.precision);
      loss_sum += r.loss_sum;
      Eigen::VectorXd& g = r.gradient.flat();
      g /= static_cast<double>(end - start);
      if (cfg.grad_clip_norm > 0.0) {
        const double norm = g.norm();
        if (norm > cfg.grad_clip_norm) g *= cfg.grad_clip_norm / norm;
      }
      if (!g.allFinite()) {
        throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch + 1));
      }
      adam_step(model.params.flat(), g, adam, ++step, cfg);
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1));
    result.history.epoch_loss.push_back(mean_loss);
    if (validation) result.history.validation.push_back(evaluate(model, *validation));
    if (on_epoch) on_epoch(epoch + 1, mean_loss);
  }
  return result;
}

Prediction predict(const BiLstmClassifier& model, const features::SegmentFeatureSequence& seq) {
  const double p = forward(model, seq);
  return {label_from_probability(p), p};
}

std::vector<Prediction> predict_batch(const BiLstmClassifier& model,
                                      std::span<const features::SegmentFeatureSequence> seqs) {
  if (seqs.empty()) return {};
  const auto inputs = prepare_all(seqs, model.scaler);
  std::vector<const InputSequence*> ptrs;
  ptrs.reserve(inputs.size());
  for (const auto& in : inputs) ptrs.push_back(&in);
  const auto probs = batched::forward(model.params, ptrs);
  std::vector<Prediction> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back({label_from_probability(p), p});
  return out;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
}

GradCheckResult grad_check(const GradCheckConfig& cfg) {
  if (cfg.hidden < 1 || cfg.input < 1 || cfg.steps < 1 || cfg.batch < 1) {
    throw ArgumentError("grad_check dimensions must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  ParamSet params(cfg.hidden, cfg.input);
  if (!cfg.zero_params) {
    std::uniform_real_distribution<double> u(-cfg.param_scale, cfg.param_scale);
    for (Eigen::Index k = 0; k < params.flat().size(); ++k) params.flat()[k] = u(rng);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<InputSequence> seqs(cfg.batch);
  std::vector<LabeledInput> batch;
  for (int b = 0; b < cfg.batch; ++b) {
    const int len = cfg.ragged ? std::max(1, cfg.steps - b) : cfg.steps;
    seqs[b].dim = cfg.input;
    seqs[b].values.resize(static_cast<std::size_t>(len) * cfg.input);
    for (double& v : seqs[b].values) v = gauss(rng);
  }
  for (int b = 0; b < cfg.batch; ++b) batch.push_back({&seqs[b], static_cast<double>((b + rng()) % 2)});

  const double eps = 1e-7;
  ParamSet analytic = backward(params, batch, eps);
  if (cfg.corrupt_recurrent) {
    std::size_t worst = 0;
    double best = -1.0;
    for (Direction d : {Direction::kForward, Direction::kBackward}) {
      const std::size_t off = params.recurrent_offset(d);
      const std::size_t count = static_cast<std::size_t>(kNumGates) * cfg.hidden * cfg.hidden;
      for (std::size_t k = off; k < off + count; ++k) {
        if (std::abs(analytic.flat()[k]) > best) {
          best = std::abs(analytic.flat()[k]);
          worst = k;
        }
      }
    }
    analytic.flat()[worst] *= 1.0 + *cfg.corrupt_recurrent;
  }

  std::vector<const InputSequence*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s);
  auto mean_loss = [&](const ParamSet& p) {
    const auto probs = batched::forward(p, ptrs);
    double l = 0.0;
    for (std::size_t b = 0; b < probs.size(); ++b) l += bce_loss(probs[b], batch[b].target, eps);
    return l / static_cast<double>(probs.size());
  };

  GradCheckResult result;
  result.num_params = params.size();
  ParamSet probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double orig = params.flat()[k];
    probe.flat()[k] = orig + cfg.fd_step;
    const double up = mean_loss(probe);
    probe.flat()[k] = orig - cfg.fd_step;
    const double down = mean_loss(probe);
    probe.flat()[k] = orig;
    const double numeric = (up - down) / (2.0 * cfg.fd_step);
    const double err = relative_error(analytic.flat()[k], numeric);
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = k;
    }
  }
  return result;
}

}  // namespace roadsel::nn
