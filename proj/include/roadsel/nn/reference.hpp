#pragma once

// Serial, loop-based implementation of the bidirectional LSTM classifier.
// It is deliberately naive: one example at a time, no Eigen, no padding.
// Kept as the oracle for the batched kernel and as the benchmark baseline.

#include <span>
#include <vector>

#include "roadsel/nn/model.hpp"

namespace roadsel::nn::reference {

double sigmoid(double z);

struct CellState {
  std::vector<double> h;
  std::vector<double> c;
};

CellState lstm_cell_step(const ParamSet& p, Direction d, std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev);

// Final hidden state of one direction; the backward direction reads the sequence last-to-first.
std::vector<double> run_direction(const ParamSet& p, Direction d, const InputSequence& seq);

double forward(const ParamSet& p, const InputSequence& seq);

double bce(double prob, double target, double clamp_eps);

// Gradient of a single example's BCE loss (not averaged).
ParamSet example_gradient(const ParamSet& p, const InputSequence& seq, double target, double clamp_eps,
                          double* loss = nullptr);

// Gradient of the mean BCE over the batch: the plain average of example_gradient.
ParamSet batch_gradient(const ParamSet& p, std::span<const InputSequence> seqs, std::span<const double> targets,
                        double clamp_eps, double* mean_loss = nullptr);

}  // namespace roadsel::nn::reference
