#include "roadsel/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "roadsel/errors.hpp"
#include "roadsel/nn/reference.hpp"
#include "roadsel/rng.hpp"

namespace roadsel::baselines {
namespace {

using nlohmann::json;

struct Grower {
  std::span<const Row> x;
  std::span<const Label> y;
  int max_depth;
  int min_leaf;
  int max_features;  // 0 = all
  std::mt19937_64* rng;
  Tree tree;

  static double gini_sum(double n, double pass) {
    if (n == 0.0) return 0.0;
    const double p = pass / n;
    return n * (1.0 - p * p - (1.0 - p) * (1.0 - p));
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    double pass = 0.0;
    for (std::size_t r : rows) pass += y[r] == Label::kPass ? 1.0 : 0.0;
    const double n = static_cast<double>(rows.size());
    tree.nodes[id].prob = pass / n;
    if (depth >= max_depth || pass == 0.0 || pass == n || rows.size() < 2 * static_cast<std::size_t>(min_leaf)) {
      return id;
    }

    const std::size_t d = x[rows[0]].size();
    std::vector<std::size_t> feats(d);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    std::size_t n_feats = d;
    if (max_features > 0 && static_cast<std::size_t>(max_features) < d) {
      n_feats = static_cast<std::size_t>(max_features);
      for (std::size_t k = 0; k < n_feats; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, d - 1);
        std::swap(feats[k], feats[pick(*rng)]);
      }
      std::sort(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(n_feats));
    }

    double best = gini_sum(n, pass) - 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = rows;
    for (std::size_t fi = 0; fi < n_feats; ++fi) {
      const std::size_t f = feats[fi];
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
      double left_pass = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left_pass += y[order[k]] == Label::kPass ? 1.0 : 0.0;
        const double lo = x[order[k]][f];
        const double hi = x[order[k + 1]][f];
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score = gini_sum(nl, left_pass) + gini_sum(nr, pass - left_pass);
        if (score < best) {
          best = score;
          best_feature = static_cast<int>(f);
          best_threshold = lo + 0.5 * (hi - lo);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x[r][best_feature] <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

void check_inputs(std::span<const Row> x, std::span<const Label> y) {
  if (x.empty()) throw ArgumentError("baseline training set is empty");
  if (x.size() != y.size()) throw ArgumentError("one label per feature row is required");
  const std::size_t d = x[0].size();
  if (d == 0) throw ArgumentError("feature rows must not be empty");
  for (const auto& r : x) {
    if (r.size() != d) throw ArgumentError("feature rows have inconsistent dimensions");
    for (double v : r) {
      if (!std::isfinite(v)) throw ValidationError("feature rows contain a non-finite value");
    }
  }
}

LogisticModel fit_logistic(std::span<const Row> x, std::span<const Label> y, const BaselineParams& p,
                           std::vector<double>* history) {
  const std::size_t n = x.size(), d = x[0].size();
  LogisticModel m;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (const auto& r : x) {
    for (std::size_t k = 0; k < d; ++k) m.mean[k] += r[k];
  }
  for (double& v : m.mean) v /= static_cast<double>(n);
  for (const auto& r : x) {
    for (std::size_t k = 0; k < d; ++k) m.scale[k] += (r[k] - m.mean[k]) * (r[k] - m.mean[k]);
  }
  for (double& v : m.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  std::vector<Row> z(n, Row(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) z[i][k] = (x[i][k] - m.mean[k]) / m.scale[k];
  }
  m.weights.assign(d, 0.0);
  std::vector<double> grad(d);
  for (int step = 0; step < p.logreg_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = m.bias;
      for (std::size_t k = 0; k < d; ++k) s += m.weights[k] * z[i][k];
      const double prob = nn::reference::sigmoid(s);
      const double t = to_target(y[i]);
      if (history) loss += nn::reference::bce(prob, t, 1e-15);
      const double e = prob - t;
      for (std::size_t k = 0; k < d; ++k) grad[k] += e * z[i][k];
      gb += e;
    }
    if (history) history->push_back(loss / static_cast<double>(n));
    const double lr = p.logreg_learning_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) m.weights[k] -= lr * grad[k];
    m.bias -= lr * gb;
  }
  return m;
}

NaiveBayesModel fit_bayes(std::span<const Row> x, std::span<const Label> y, const BaselineParams& p) {
  const std::size_t d = x[0].size();
  NaiveBayesModel m;
  double count[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    m.mean[c].assign(d, 0.0);
    m.var[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int c = y[i] == Label::kPass ? 1 : 0;
    count[c] += 1.0;
    for (std::size_t k = 0; k < d; ++k) m.mean[c][k] += x[i][k];
  }
  for (int c = 0; c < 2; ++c) {
    for (double& v : m.mean[c]) v /= count[c];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int c = y[i] == Label::kPass ? 1 : 0;
    for (std::size_t k = 0; k < d; ++k) m.var[c][k] += (x[i][k] - m.mean[c][k]) * (x[i][k] - m.mean[c][k]);
  }
  const double total = count[0] + count[1];
  for (int c = 0; c < 2; ++c) {
    for (double& v : m.var[c]) v = std::max(v / count[c], p.gnb_var_floor);
    m.log_prior[c] = std::log(count[c] / total);
  }
  return m;
}

json tree_json(const Tree& t) {
  json f = json::array(), th = json::array(), l = json::array(), r = json::array(), pr = json::array();
  for (const auto& n : t.nodes) {
    f.push_back(n.feature);
    th.push_back(n.threshold);
    l.push_back(n.left);
    r.push_back(n.right);
    pr.push_back(n.prob);
  }
  return {{"feature", f}, {"threshold", th}, {"left", l}, {"right", r}, {"prob", pr}};
}

Tree tree_from_json(const json& j, std::size_t dim) {
  const auto f = j.at("feature").get<std::vector<int>>();
  const auto th = j.at("threshold").get<std::vector<double>>();
  const auto l = j.at("left").get<std::vector<int>>();
  const auto r = j.at("right").get<std::vector<int>>();
  const auto pr = j.at("prob").get<std::vector<double>>();
  const std::size_t n = f.size();
  if (n == 0 || th.size() != n || l.size() != n || r.size() != n || pr.size() != n) {
    throw ValidationError("tree node arrays are empty or of unequal length");
  }
  Tree t;
  for (std::size_t k = 0; k < n; ++k) {
    if (f[k] >= 0) {
      const auto ok = [&](int c) { return c > static_cast<int>(k) && c < static_cast<int>(n); };
      if (static_cast<std::size_t>(f[k]) >= dim || !ok(l[k]) || !ok(r[k])) {
        throw ValidationError("tree node " + std::to_string(k) + " is inconsistent");
      }
    }
    t.nodes.push_back({f[k], th[k], l[k], r[k], pr[k]});
  }
  return t;
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kLogisticRegression:
      return "logistic_regression";
    case BaselineKind::kGaussianNaiveBayes:
      return "gaussian_naive_bayes";
    case BaselineKind::kDecisionTree:
      return "decision_tree";
    case BaselineKind::kRandomForest:
      return "random_forest";
  }
  return "unknown";
}

std::optional<BaselineKind> parse_kind(std::string_view s) {
  if (s == "logistic_regression" || s == "logreg") return BaselineKind::kLogisticRegression;
  if (s == "gaussian_naive_bayes" || s == "gnb") return BaselineKind::kGaussianNaiveBayes;
  if (s == "decision_tree" || s == "tree") return BaselineKind::kDecisionTree;
  if (s == "random_forest" || s == "forest") return BaselineKind::kRandomForest;
  return std::nullopt;
}

double Tree::predict(std::span<const double> x) const {
  int k = 0;
  while (nodes[k].feature >= 0) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
  return nodes[k].prob;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int out = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    out = std::max(out, d[k]);
    if (nodes[k].feature >= 0) d[nodes[k].left] = d[nodes[k].right] = d[k] + 1;
  }
  return out;
}

Tree grow_tree(std::span<const Row> x, std::span<const Label> y, int max_depth, int min_leaf) {
  check_inputs(x, y);
  Grower g{x, y, max_depth, min_leaf, 0, nullptr, {}};
  std::vector<std::size_t> rows(x.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  g.grow(rows, 0);
  return std::move(g.tree);
}

Row to_row(const features::StatFeatureVector& v) {
  const auto a = v.to_array();
  return Row(a.begin(), a.end());
}

BaselineModel fit(BaselineKind kind, std::span<const Row> x, std::span<const Label> y, const BaselineParams& params,
                  std::uint64_t seed, std::vector<double>* logreg_loss_history) {
  check_inputs(x, y);
  if (params.max_depth < 0 || params.min_leaf < 1 || params.n_trees < 1 || params.logreg_steps < 0 ||
      !(params.logreg_learning_rate > 0.0) || !(params.gnb_var_floor > 0.0) || params.max_features < 0) {
    throw ArgumentError("invalid baseline hyperparameters");
  }
  BaselineModel m;
  m.kind = kind;
  m.dim = x[0].size();
  const auto passes = std::count(y.begin(), y.end(), Label::kPass);
  const bool single = passes == 0 || passes == static_cast<std::ptrdiff_t>(y.size());
  if (single && (kind == BaselineKind::kLogisticRegression || kind == BaselineKind::kGaussianNaiveBayes)) {
    throw ValidationError(std::string(to_string(kind)) + " needs both classes in the training set");
  }
  if (single) m.warnings.push_back("training set contains a single class; model predicts a constant");

  switch (kind) {
    case BaselineKind::kLogisticRegression:
      m.logistic = fit_logistic(x, y, params, logreg_loss_history);
      break;
    case BaselineKind::kGaussianNaiveBayes:
      m.bayes = fit_bayes(x, y, params);
      break;
    case BaselineKind::kDecisionTree:
      m.trees.push_back(grow_tree(x, y, params.max_depth, params.min_leaf));
      break;
    case BaselineKind::kRandomForest: {
      const int mf = params.max_features > 0 ? params.max_features
                                             : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.dim))));
      m.trees.resize(params.n_trees);
      const std::size_t n = x.size();
#pragma omp parallel for schedule(dynamic)
      for (int t = 0; t < params.n_trees; ++t) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::uniform_int_distribution<std::size_t> draw(0, n - 1);
        std::vector<Row> bx(n);
        std::vector<Label> by(n);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t r = draw(rng);
          bx[i] = x[r];
          by[i] = y[r];
        }
        Grower g{bx, by, params.max_depth, params.min_leaf, mf, &rng, {}};
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        g.grow(rows, 0);
        m.trees[t] = std::move(g.tree);
      }
      break;
    }
  }
  return m;
}

double predict_proba(const BaselineModel& m, std::span<const double> x) {
  if (x.size() != m.dim) {
    throw ArgumentError("feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                        std::to_string(m.dim));
  }
  switch (m.kind) {
    case BaselineKind::kLogisticRegression: {
      double s = m.logistic.bias;
      for (std::size_t k = 0; k < m.dim; ++k) {
        s += m.logistic.weights[k] * (x[k] - m.logistic.mean[k]) / m.logistic.scale[k];
      }
      return nn::reference::sigmoid(s);
    }
    case BaselineKind::kGaussianNaiveBayes: {
      double lp[2];
      for (int c = 0; c < 2; ++c) {
        lp[c] = m.bayes.log_prior[c];
        for (std::size_t k = 0; k < m.dim; ++k) {
          const double v = m.bayes.var[c][k];
          const double dx = x[k] - m.bayes.mean[c][k];
          lp[c] -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + dx * dx / v);
        }
      }
      return nn::reference::sigmoid(lp[1] - lp[0]);
    }
    case BaselineKind::kDecisionTree:
    case BaselineKind::kRandomForest: {
      double s = 0.0;
      for (const auto& t : m.trees) s += t.predict(x);
      return s / static_cast<double>(m.trees.size());
    }
  }
  return 0.5;
}

json to_json(const BaselineModel& m) {
  json doc = {{"format", "roadsel-checkpoint"},
              {"format_version", 1},
              {"kind", std::string(to_string(m.kind))},
              {"dim", m.dim},
              {"warnings", m.warnings}};
  switch (m.kind) {
    case BaselineKind::kLogisticRegression:
      doc["params"] = {{"mean", m.logistic.mean},
                       {"scale", m.logistic.scale},
                       {"weights", m.logistic.weights},
                       {"bias", m.logistic.bias}};
      break;
    case BaselineKind::kGaussianNaiveBayes:
      doc["params"] = {{"fail", {{"mean", m.bayes.mean[0]}, {"var", m.bayes.var[0]}, {"log_prior", m.bayes.log_prior[0]}}},
                       {"pass", {{"mean", m.bayes.mean[1]}, {"var", m.bayes.var[1]}, {"log_prior", m.bayes.log_prior[1]}}}};
      break;
    case BaselineKind::kDecisionTree:
    case BaselineKind::kRandomForest: {
      json trees = json::array();
      for (const auto& t : m.trees) trees.push_back(tree_json(t));
      doc["params"] = {{"trees", std::move(trees)}};
      break;
    }
  }
  return doc;
}

BaselineModel baseline_from_json(const json& doc) {
  try {
    const auto kind = parse_kind(doc.at("kind").get<std::string>());
    if (!kind) throw ValidationError("checkpoint kind '" + doc["kind"].get<std::string>() + "' is not a baseline");
    if (doc.at("format_version").get<int>() != 1) throw ValidationError("unsupported checkpoint format_version");
    BaselineModel m;
    m.kind = *kind;
    m.dim = doc.at("dim").get<std::size_t>();
    m.warnings = doc.value("warnings", std::vector<std::string>{});
    const auto& p = doc.at("params");
    auto sized = [&](const json& j, const char* what) {
      auto v = j.get<std::vector<double>>();
      if (v.size() != m.dim) throw ValidationError(std::string("checkpoint field ") + what + " has the wrong length");
      return v;
    };
    switch (m.kind) {
      case BaselineKind::kLogisticRegression:
        m.logistic.mean = sized(p.at("mean"), "mean");
        m.logistic.scale = sized(p.at("scale"), "scale");
        m.logistic.weights = sized(p.at("weights"), "weights");
        m.logistic.bias = p.at("bias").get<double>();
        break;
      case BaselineKind::kGaussianNaiveBayes: {
        const char* names[2] = {"fail", "pass"};
        for (int c = 0; c < 2; ++c) {
          const auto& cj = p.at(names[c]);
          m.bayes.mean[c] = sized(cj.at("mean"), "mean");
          m.bayes.var[c] = sized(cj.at("var"), "var");
          m.bayes.log_prior[c] = cj.at("log_prior").get<double>();
        }
        break;
      }
      case BaselineKind::kDecisionTree:
      case BaselineKind::kRandomForest:
        for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t, m.dim));
        if (m.trees.empty()) throw ValidationError("checkpoint contains no trees");
        break;
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed baseline checkpoint: ") + e.what());
  }
}

}  // namespace roadsel::baselines
