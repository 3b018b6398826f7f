#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "roadsel/baselines.hpp"
#include "roadsel/dataset_file.hpp"
#include "roadsel/label.hpp"
#include "roadsel/nn/model.hpp"

namespace roadsel::eval {

// PASS is the positive class.
struct ConfusionMatrix {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  long total() const { return tp + fp + fn + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels);

struct Ratio {
  long num = 0;
  long den = 0;  // 0 marks an undefined ratio, reported as value 0

  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct MetricValues {
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;

  std::array<double, 4> as_array() const { return {accuracy, precision, recall, f1}; }
};

struct MetricsReport {
  MetricValues values;
  ConfusionMatrix counts;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

/// Metrics of one confusion matrix. Each value is a single division of two
/// integers (f1 = 2tp / (2tp + fp + fn)), so it is the double nearest to the
/// exact rational.
MetricsReport metrics(const ConfusionMatrix& cm);
std::array<Ratio, 4> exact_metrics(const ConfusionMatrix& cm);

struct FoldPlan {
  int k = 10;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<std::vector<std::size_t>> folds;  // each sorted ascending
};

/// Shuffles indices per seed and deals them round-robin into k folds. With
/// stratification, PASS indices are dealt first and FAIL indices continue
/// from the next fold, so per-fold class counts differ by at most one.
FoldPlan kfold_split(std::size_t n, std::span<const Label> labels, int k = 10, std::uint64_t seed = 0,
                     bool stratified = true);

enum class ModelKind { kIts4sdc, kLogisticRegression, kGaussianNaiveBayes, kDecisionTree, kRandomForest };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view s);
std::optional<baselines::BaselineKind> as_baseline(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::kIts4sdc;
  nn::TrainConfig train;
  baselines::BaselineParams baseline;
  features::StatOptions stats;
};

/// Trains on `train` and returns the PASS probability of every entry of `test`.
/// Every training entry must be labeled.
std::vector<double> fit_predict(const ModelSpec& spec, std::span<const data::DatasetEntry> train,
                                std::span<const data::DatasetEntry> test, std::uint64_t seed,
                                std::vector<std::string>* warnings = nullptr);

struct EvalOptions {
  int k = 10;
  std::uint64_t seed = 0;
  bool stratified = true;
  bool pooled = false;  // aggregate summed confusion counts instead of averaging fold metrics
};

struct SetupResult {
  int setup = 1;
  std::string model;
  MetricsReport report;
  std::vector<MetricsReport> folds;  // setups 1-2 only
  std::optional<FoldPlan> plan;
  std::vector<std::string> warnings;
};

using FoldCallback = std::function<void(int fold, const MetricsReport&)>;

/// Setups 1 and 2 cross-validate on dataset 1 or 2; setup 3 trains on all of
/// dataset 1 and evaluates on dataset 2; setup 4 is the reverse.
SetupResult run_setup(int setup, const ModelSpec& spec, const data::Dataset* dataset1, const data::Dataset* dataset2,
                      const EvalOptions& opts, const FoldCallback& on_fold = {});

// Cross-validation over an existing plan; fold f trains with seed mix_seed(opts.seed, f).
SetupResult cross_validate(const ModelSpec& spec, const data::Dataset& ds, const FoldPlan& plan,
                           const EvalOptions& opts, const FoldCallback& on_fold = {});

// Unweighted mean of fold metrics; counts are summed.
MetricsReport mean_report(std::span<const MetricsReport> folds);
MetricsReport pooled_report(std::span<const MetricsReport> folds);

MetricValues scissor_average(std::span<const MetricValues> reports);

struct ComparisonRow {
  std::string label;
  int its_setup = 0;
  int scissor_setup = 0;
  MetricValues delta;
};

ComparisonRow compare(const MetricValues& its, const MetricValues& scissor, std::string label = {}, int its_setup = 0,
                      int scissor_setup = 0);

// Two-decimal rendering, rounding halves away from zero with a 1e-9 guard; never "-0.00".
long to_cents(double v);
std::string format_metric(double v);

struct NamedMetrics {
  std::string name;
  MetricValues values;
};

// Header "name,accuracy,precision,recall,f1".
std::string metrics_csv(std::span<const NamedMetrics> rows);
std::string metrics_text(std::string_view title, std::span<const NamedMetrics> rows);
// Header "label,its4sdc_setup,scissor_setup,accuracy,precision,recall,f1".
std::string comparison_csv(std::span<const ComparisonRow> rows);
std::string comparison_text(std::span<const ComparisonRow> rows);
// Header "fold,tp,fp,fn,tn,accuracy,precision,recall,f1" at full precision, then a "mean" row.
std::string folds_csv(const SetupResult& r);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const SetupResult& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
SetupResult setup_result_from_json(const nlohmann::json& j);

namespace published {

struct ModelRow {
  std::string_view name;
  MetricValues values;
};

// Classical baselines per setup (1 or 2), six models each.
std::span<const ModelRow> scissor_models(int setup);
// The printed average row of the same table.
MetricValues scissor_average_row(int setup);
// Recurrent model, setups 1-4.
MetricValues its4sdc(int setup);

struct DeltaRow {
  std::string_view label;
  int its_setup;
  int scissor_setup;
  MetricValues delta;
};

std::span<const DeltaRow> comparison_rows();

}  // namespace published

// Rows A-D: its4sdc setups {1,1,2,2} against scissor averages {1,2,1,2}.
std::vector<ComparisonRow> published_comparison();

}  // namespace roadsel::eval
