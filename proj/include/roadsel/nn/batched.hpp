#pragma once

// Production kernel: processes a batch as fixed-size chunks of sequences with
// dense matrix products per timestep, chunks distributed over OpenMP threads.
// Chunk boundaries do not depend on the thread count and chunk gradients are
// reduced in chunk order, so results are bit-identical for any --threads.

#include <span>
#include <vector>

#include "roadsel/nn/model.hpp"

namespace roadsel::nn::batched {

inline constexpr int kChunkSize = 32;

struct BatchResult {
  std::vector<double> probabilities;
  double loss_sum = 0.0;  // summed (not averaged) clamped BCE
  ParamSet gradient;      // gradient of loss_sum
};

// Sequences may have different lengths; each direction stops at the sequence's true last step.
std::vector<double> forward(const ParamSet& p, std::span<const InputSequence* const> seqs,
                            Precision precision = Precision::kFloat64);

BatchResult loss_and_gradient(const ParamSet& p, std::span<const InputSequence* const> seqs,
                              std::span<const double> targets, double clamp_eps,
                              Precision precision = Precision::kFloat64);

}  // namespace roadsel::nn::batched
