#include "roadsel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "roadsel/errors.hpp"
#include "roadsel/features.hpp"
#include "roadsel/nn/nn.hpp"
#include "roadsel/rng.hpp"

namespace roadsel::eval {
namespace {

using nlohmann::json;

Label require_label(const data::DatasetEntry& e) {
  if (!e.road.label()) throw ArgumentError("road '" + e.road.id() + "' has no label");
  return *e.road.label();
}

std::vector<Label> labels_of(std::span<const data::DatasetEntry> entries) {
  std::vector<Label> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(require_label(e));
  return out;
}

MetricsReport evaluate(std::span<const double> probs, std::span<const Label> labels) {
  std::vector<Label> pred;
  pred.reserve(probs.size());
  for (double p : probs) pred.push_back(label_from_probability(p));
  return metrics(confusion(pred, labels));
}

std::string pad(std::string s, std::size_t w, bool right) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json values_json(const MetricValues& v) {
  return {{"accuracy", v.accuracy}, {"precision", v.precision}, {"recall", v.recall}, {"f1", v.f1}};
}

MetricValues values_from_json(const json& j) {
  return {j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>()};
}

constexpr published::ModelRow kScissor1[] = {
    {"Random Forest", {0.62, 0.65, 0.80, 0.72}},       {"Gradient Boosting", {0.63, 0.64, 0.88, 0.74}},
    {"Support Vector Machine", {0.63, 0.65, 0.86, 0.74}}, {"Gaussian Naive Bayes", {0.57, 0.66, 0.60, 0.63}},
    {"Logistic Regression", {0.63, 0.65, 0.85, 0.74}}, {"Decision Tree", {0.57, 0.65, 0.63, 0.74}},
};
constexpr published::ModelRow kScissor2[] = {
    {"Random Forest", {0.61, 0.65, 0.81, 0.72}},       {"Gradient Boosting", {0.62, 0.64, 0.89, 0.74}},
    {"Support Vector Machine", {0.63, 0.64, 0.91, 0.75}}, {"Gaussian Naive Bayes", {0.60, 0.66, 0.75, 0.70}},
    {"Logistic Regression", {0.63, 0.64, 0.90, 0.75}}, {"Decision Tree", {0.55, 0.64, 0.63, 0.64}},
};
constexpr MetricValues kScissorAverage[] = {{0.61, 0.65, 0.77, 0.72}, {0.61, 0.65, 0.82, 0.72}};
constexpr MetricValues kIts[] = {
    {0.87, 0.88, 0.90, 0.89}, {0.63, 0.68, 0.77, 0.72}, {0.63, 0.71, 0.67, 0.69}, {0.64, 0.66, 0.85, 0.74}};
constexpr published::DeltaRow kDeltas[] = {
    {"A", 1, 1, {0.26, 0.23, 0.13, 0.17}},
    {"B", 1, 2, {0.26, 0.24, 0.09, 0.17}},
    {"C", 2, 1, {0.02, 0.03, 0.00, 0.00}},
    {"D", 2, 2, {0.02, 0.03, -0.05, 0.00}},
};

}  // namespace

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) {
    throw ArgumentError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw ArgumentError("confusion: no predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == Label::kPass;
    const bool t = labels[i] == Label::kPass;
    if (p && t) ++cm.tp;
    else if (p) ++cm.fp;
    else if (t) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

std::array<Ratio, 4> exact_metrics(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0) throw ArgumentError("negative confusion count");
  if (cm.total() == 0) throw ArgumentError("metrics of an empty confusion matrix");
  return {Ratio{cm.tp + cm.tn, cm.total()}, Ratio{cm.tp, cm.tp + cm.fp}, Ratio{cm.tp, cm.tp + cm.fn},
          Ratio{2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn}};
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  const auto r = exact_metrics(cm);
  MetricsReport out;
  out.counts = cm;
  out.values = {r[0].value(), r[1].value(), r[2].value(), r[3].value()};
  out.precision_undefined = r[1].den == 0;
  out.recall_undefined = r[2].den == 0;
  out.f1_undefined = r[3].den == 0;
  return out;
}

FoldPlan kfold_split(std::size_t n, std::span<const Label> labels, int k, std::uint64_t seed, bool stratified) {
  if (k < 2) throw ArgumentError("k must be at least 2");
  if (n < static_cast<std::size_t>(k)) {
    throw ArgumentError("cannot split " + std::to_string(n) + " items into " + std::to_string(k) + " folds");
  }
  if (stratified && labels.size() != n) throw ArgumentError("stratified split needs one label per item");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  if (stratified) {
    std::vector<std::size_t> pass, fail;
    for (std::size_t i = 0; i < n; ++i) (labels[i] == Label::kPass ? pass : fail).push_back(i);
    std::shuffle(pass.begin(), pass.end(), rng);
    std::shuffle(fail.begin(), fail.end(), rng);
    order = std::move(pass);
    order.insert(order.end(), fail.begin(), fail.end());
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
  }
  FoldPlan plan{k, seed, stratified, std::vector<std::vector<std::size_t>>(k)};
  for (std::size_t i = 0; i < n; ++i) plan.folds[i % k].push_back(order[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kIts4sdc:
      return "its4sdc";
    case ModelKind::kLogisticRegression:
      return "logreg";
    case ModelKind::kGaussianNaiveBayes:
      return "gnb";
    case ModelKind::kDecisionTree:
      return "tree";
    case ModelKind::kRandomForest:
      return "forest";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "its4sdc") return ModelKind::kIts4sdc;
  const auto b = baselines::parse_kind(s);
  if (!b) return std::nullopt;
  switch (*b) {
    case baselines::BaselineKind::kLogisticRegression:
      return ModelKind::kLogisticRegression;
    case baselines::BaselineKind::kGaussianNaiveBayes:
      return ModelKind::kGaussianNaiveBayes;
    case baselines::BaselineKind::kDecisionTree:
      return ModelKind::kDecisionTree;
    case baselines::BaselineKind::kRandomForest:
      return ModelKind::kRandomForest;
  }
  return std::nullopt;
}

std::optional<baselines::BaselineKind> as_baseline(ModelKind kind) {
  switch (kind) {
    case ModelKind::kIts4sdc:
      return std::nullopt;
    case ModelKind::kLogisticRegression:
      return baselines::BaselineKind::kLogisticRegression;
    case ModelKind::kGaussianNaiveBayes:
      return baselines::BaselineKind::kGaussianNaiveBayes;
    case ModelKind::kDecisionTree:
      return baselines::BaselineKind::kDecisionTree;
    case ModelKind::kRandomForest:
      return baselines::BaselineKind::kRandomForest;
  }
  return std::nullopt;
}

std::vector<double> fit_predict(const ModelSpec& spec, std::span<const data::DatasetEntry> train,
                                std::span<const data::DatasetEntry> test, std::uint64_t seed,
                                std::vector<std::string>* warnings) {
  const auto y = labels_of(train);
  std::vector<double> probs;
  probs.reserve(test.size());
  if (const auto kind = as_baseline(spec.kind)) {
    std::vector<baselines::Row> x;
    x.reserve(train.size());
    for (const auto& e : train) x.push_back(baselines::to_row(features::extract_stats(e.road, spec.stats)));
    const auto model = baselines::fit(*kind, x, y, spec.baseline, seed);
    if (warnings) warnings->insert(warnings->end(), model.warnings.begin(), model.warnings.end());
    for (const auto& e : test) {
      probs.push_back(baselines::predict_proba(model, baselines::to_row(features::extract_stats(e.road, spec.stats))));
    }
    return probs;
  }
  std::vector<features::SegmentFeatureSequence> xs, ts;
  xs.reserve(train.size());
  ts.reserve(test.size());
  for (const auto& e : train) xs.push_back(features::extract_sequence(e.road));
  for (const auto& e : test) ts.push_back(features::extract_sequence(e.road));
  auto cfg = spec.train;
  cfg.rng_seed = seed;
  auto result = nn::train(xs, y, cfg);
  if (warnings) warnings->insert(warnings->end(), result.history.warnings.begin(), result.history.warnings.end());
  for (const auto& p : nn::predict_batch(result.model, ts)) probs.push_back(p.probability);
  return probs;
}

MetricsReport mean_report(std::span<const MetricsReport> folds) {
  if (folds.empty()) throw ArgumentError("no fold reports to average");
  MetricsReport out;
  double acc = 0, prec = 0, rec = 0, f1 = 0;
  for (const auto& r : folds) {
    acc += r.values.accuracy;
    prec += r.values.precision;
    rec += r.values.recall;
    f1 += r.values.f1;
    out.counts += r.counts;
    out.precision_undefined = out.precision_undefined || r.precision_undefined;
    out.recall_undefined = out.recall_undefined || r.recall_undefined;
    out.f1_undefined = out.f1_undefined || r.f1_undefined;
  }
  const double n = static_cast<double>(folds.size());
  out.values = {acc / n, prec / n, rec / n, f1 / n};
  return out;
}

MetricsReport pooled_report(std::span<const MetricsReport> folds) {
  if (folds.empty()) throw ArgumentError("no fold reports to pool");
  ConfusionMatrix cm;
  for (const auto& r : folds) cm += r.counts;
  return metrics(cm);
}

SetupResult cross_validate(const ModelSpec& spec, const data::Dataset& ds, const FoldPlan& plan,
                           const EvalOptions& opts, const FoldCallback& on_fold) {
  SetupResult out;
  out.model = std::string(to_string(spec.kind));
  out.plan = plan;
  std::vector<char> in_test(ds.size());
  for (int f = 0; f < plan.k; ++f) {
    std::fill(in_test.begin(), in_test.end(), 0);
    for (std::size_t i : plan.folds[f]) in_test.at(i) = 1;
    std::vector<data::DatasetEntry> train, test;
    for (std::size_t i = 0; i < ds.size(); ++i) (in_test[i] ? test : train).push_back(ds.entries[i]);
    const auto probs = fit_predict(spec, train, test, mix_seed(opts.seed, static_cast<std::uint64_t>(f)),
                                   &out.warnings);
    out.folds.push_back(evaluate(probs, labels_of(test)));
    if (on_fold) on_fold(f, out.folds.back());
  }
  out.report = opts.pooled ? pooled_report(out.folds) : mean_report(out.folds);
  return out;
}

SetupResult run_setup(int setup, const ModelSpec& spec, const data::Dataset* d1, const data::Dataset* d2,
                      const EvalOptions& opts, const FoldCallback& on_fold) {
  if (setup < 1 || setup > 4) throw ArgumentError("setup must be 1, 2, 3 or 4");
  const bool need1 = setup != 2, need2 = setup != 1;
  if ((need1 && !d1) || (need2 && !d2)) {
    throw ArgumentError("setup " + std::to_string(setup) + " needs " + (need1 && need2 ? "two datasets" : "dataset " + std::to_string(need1 ? 1 : 2)));
  }
  SetupResult out;
  if (setup <= 2) {
    const auto& ds = setup == 1 ? *d1 : *d2;
    const auto y = labels_of(ds.entries);
    out = cross_validate(spec, ds, kfold_split(ds.size(), y, opts.k, opts.seed, opts.stratified), opts, on_fold);
  } else {
    const auto& src = setup == 3 ? *d1 : *d2;
    const auto& dst = setup == 3 ? *d2 : *d1;
    out.model = std::string(to_string(spec.kind));
    const auto probs = fit_predict(spec, src.entries, dst.entries, opts.seed, &out.warnings);
    out.report = evaluate(probs, labels_of(dst.entries));
  }
  out.setup = setup;
  return out;
}

MetricValues scissor_average(std::span<const MetricValues> reports) {
  if (reports.empty()) throw ArgumentError("no reports to average");
  MetricValues out;
  for (const auto& r : reports) {
    out.accuracy += r.accuracy;
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
  }
  const double n = static_cast<double>(reports.size());
  return {out.accuracy / n, out.precision / n, out.recall / n, out.f1 / n};
}

ComparisonRow compare(const MetricValues& its, const MetricValues& scissor, std::string label, int its_setup,
                      int scissor_setup) {
  return {std::move(label), its_setup, scissor_setup,
          {its.accuracy - scissor.accuracy, its.precision - scissor.precision, its.recall - scissor.recall,
           its.f1 - scissor.f1}};
}

long to_cents(double v) {
  if (!std::isfinite(v)) throw ArgumentError("cannot format a non-finite metric");
  const double a = std::floor(std::abs(v) * 100.0 + 0.5 + 1e-9);
  return static_cast<long>(v < 0 ? -a : a);
}

std::string format_metric(double v) {
  const long c = to_cents(v);
  const long a = c < 0 ? -c : c;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%ld.%02ld", c < 0 ? "-" : "", a / 100, a % 100);
  return buf;
}

std::string metrics_csv(std::span<const NamedMetrics> rows) {
  std::string out = "name,accuracy,precision,recall,f1\n";
  for (const auto& r : rows) {
    out += r.name;
    for (double v : r.values.as_array()) out += "," + format_metric(v);
    out += "\n";
  }
  return out;
}

std::string metrics_text(std::string_view title, std::span<const NamedMetrics> rows) {
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  std::string out = std::string(title) + "\n";
  out += pad("Model", w, false) + "  Accuracy  Precision  Recall     F1\n";
  for (const auto& r : rows) {
    const auto v = r.values.as_array();
    out += pad(r.name, w, false) + "  " + pad(format_metric(v[0]), 8, true) + "  " + pad(format_metric(v[1]), 9, true) +
           "  " + pad(format_metric(v[2]), 6, true) + "  " + pad(format_metric(v[3]), 5, true) + "\n";
  }
  return out;
}

std::string comparison_csv(std::span<const ComparisonRow> rows) {
  std::string out = "label,its4sdc_setup,scissor_setup,accuracy,precision,recall,f1\n";
  for (const auto& r : rows) {
    out += r.label + "," + std::to_string(r.its_setup) + "," + std::to_string(r.scissor_setup);
    for (double v : r.delta.as_array()) out += "," + format_metric(v);
    out += "\n";
  }
  return out;
}

std::string comparison_text(std::span<const ComparisonRow> rows) {
  std::size_t w = 10;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::string out = pad("Comparison", w, false) + "  ITS4SDC  Scissor  Accuracy  Precision  Recall     F1\n";
  for (const auto& r : rows) {
    const auto v = r.delta.as_array();
    out += pad(r.label, w, false) + "  " + pad(std::to_string(r.its_setup), 7, true) + "  " +
           pad(std::to_string(r.scissor_setup), 7, true) + "  " + pad(format_metric(v[0]), 8, true) + "  " +
           pad(format_metric(v[1]), 9, true) + "  " + pad(format_metric(v[2]), 6, true) + "  " +
           pad(format_metric(v[3]), 5, true) + "\n";
  }
  return out;
}

std::string folds_csv(const SetupResult& r) {
  std::string out = "fold,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
  auto row = [&](const std::string& name, const MetricsReport& m) {
    out += name + "," + std::to_string(m.counts.tp) + "," + std::to_string(m.counts.fp) + "," +
           std::to_string(m.counts.fn) + "," + std::to_string(m.counts.tn);
    for (double v : m.values.as_array()) out += "," + full(v);
    out += "\n";
  };
  for (std::size_t f = 0; f < r.folds.size(); ++f) row(std::to_string(f), r.folds[f]);
  row("mean", r.report);
  return out;
}

json to_json(const MetricsReport& r) {
  return {{"values", values_json(r.values)},
          {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}},
          {"precision_undefined", r.precision_undefined},
          {"recall_undefined", r.recall_undefined},
          {"f1_undefined", r.f1_undefined}};
}

json to_json(const SetupResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  json doc = {{"setup", r.setup}, {"model", r.model}, {"report", to_json(r.report)}, {"folds", folds},
              {"warnings", r.warnings}};
  if (r.plan) doc["plan"] = {{"k", r.plan->k}, {"seed", r.plan->seed}, {"stratified", r.plan->stratified},
                             {"folds", r.plan->folds}};
  return doc;
}

MetricsReport metrics_report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.values = values_from_json(j.at("values"));
    const auto& c = j.at("counts");
    r.counts = {c.at("tp").get<long>(), c.at("fp").get<long>(), c.at("fn").get<long>(), c.at("tn").get<long>()};
    r.precision_undefined = j.value("precision_undefined", false);
    r.recall_undefined = j.value("recall_undefined", false);
    r.f1_undefined = j.value("f1_undefined", false);
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed metrics report: ") + e.what());
  }
}

SetupResult setup_result_from_json(const json& j) {
  try {
    SetupResult r;
    r.setup = j.at("setup").get<int>();
    if (r.setup < 1 || r.setup > 4) throw ValidationError("setup result has setup " + std::to_string(r.setup));
    r.model = j.at("model").get<std::string>();
    r.report = metrics_report_from_json(j.at("report"));
    for (const auto& f : j.value("folds", json::array())) r.folds.push_back(metrics_report_from_json(f));
    r.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("plan")) {
      const auto& p = j["plan"];
      r.plan = FoldPlan{p.at("k").get<int>(), p.at("seed").get<std::uint64_t>(), p.at("stratified").get<bool>(),
                        p.at("folds").get<std::vector<std::vector<std::size_t>>>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed setup result: ") + e.what());
  }
}

namespace published {

std::span<const ModelRow> scissor_models(int setup) {
  if (setup == 1) return kScissor1;
  if (setup == 2) return kScissor2;
  throw ArgumentError("published baseline tables exist for setups 1 and 2 only");
}

MetricValues scissor_average_row(int setup) {
  if (setup != 1 && setup != 2) throw ArgumentError("published baseline tables exist for setups 1 and 2 only");
  return kScissorAverage[setup - 1];
}

MetricValues its4sdc(int setup) {
  if (setup < 1 || setup > 4) throw ArgumentError("setup must be 1, 2, 3 or 4");
  return kIts[setup - 1];
}

std::span<const DeltaRow> comparison_rows() { return kDeltas; }

}  // namespace published

std::vector<ComparisonRow> published_comparison() {
  std::vector<ComparisonRow> rows;
  for (const auto& d : published::comparison_rows()) {
    rows.push_back(compare(published::its4sdc(d.its_setup), published::scissor_average_row(d.scissor_setup),
                           std::string(d.label), d.its_setup, d.scissor_setup));
  }
  return rows;
}

}  // namespace roadsel::eval
