#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "roadsel/features.hpp"
#include "roadsel/label.hpp"

namespace roadsel::baselines {

enum class BaselineKind { kLogisticRegression, kGaussianNaiveBayes, kDecisionTree, kRandomForest };

std::string_view to_string(BaselineKind kind);
// Accepts the full names and the short forms logreg, gnb, tree, forest.
std::optional<BaselineKind> parse_kind(std::string_view s);

struct BaselineParams {
  double logreg_learning_rate = 0.1;
  int logreg_steps = 2000;
  double gnb_var_floor = 1e-9;
  int max_depth = 6;
  int min_leaf = 5;
  int n_trees = 100;
  int max_features = 0;  // per split in forests; 0 means floor(sqrt(d))
};

using Row = std::vector<double>;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  double prob = 0.0;  // fraction of PASS among the node's training rows
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct LogisticModel {
  std::vector<double> mean, scale, weights;
  double bias = 0.0;
};

struct NaiveBayesModel {
  // Index 0 = FAIL, 1 = PASS.
  std::vector<double> mean[2], var[2];
  double log_prior[2] = {0.0, 0.0};
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::kLogisticRegression;
  std::size_t dim = 0;
  LogisticModel logistic;
  NaiveBayesModel bayes;
  std::vector<Tree> trees;  // one for a decision tree, n_trees for a forest
  std::vector<std::string> warnings;
};

/// Fits one baseline. Deterministic for a given seed. Logistic regression and
/// naive Bayes require both classes; trees and forests fall back to a
/// constant leaf with a warning.
BaselineModel fit(BaselineKind kind, std::span<const Row> x, std::span<const Label> y, const BaselineParams& params = {},
                  std::uint64_t seed = 0, std::vector<double>* logreg_loss_history = nullptr);

// PASS probability in [0, 1].
double predict_proba(const BaselineModel& model, std::span<const double> x);
inline Label predict(const BaselineModel& model, std::span<const double> x) {
  return label_from_probability(predict_proba(model, x));
}

// Deterministic CART growth on the given rows (all features considered at every split).
Tree grow_tree(std::span<const Row> x, std::span<const Label> y, int max_depth, int min_leaf);

Row to_row(const features::StatFeatureVector& v);

nlohmann::json to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const nlohmann::json& doc);

}  // namespace roadsel::baselines
