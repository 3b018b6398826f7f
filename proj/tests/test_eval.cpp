#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "roadsel/errors.hpp"
#include "roadsel/eval.hpp"
#include "roadsel/synth.hpp"

namespace roadsel::eval {
namespace {

std::vector<Label> labels(std::initializer_list<int> v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(x ? Label::kPass : Label::kFail);
  return out;
}

double reduced(long num, long den) {
  const long g = std::gcd(num, den);
  return static_cast<double>(num / g) / static_cast<double>(den / g);
}

const data::Dataset& small_dataset() {
  static const data::Dataset ds = synth::make_dataset(80, {}, {}, 17);
  return ds;
}

TEST(Confusion, ConstructedCounts) {
  const auto pred = labels({1, 1, 1, 1, 0, 0, 0, 0, 0, 0});
  const auto truth = labels({1, 1, 1, 0, 1, 0, 0, 0, 0, 0});
  EXPECT_EQ(confusion(pred, truth), (ConfusionMatrix{3, 1, 1, 5}));
  const auto cm = confusion(truth, truth);
  EXPECT_EQ(cm.fp, 0);
  EXPECT_EQ(cm.fn, 0);
}

TEST(Confusion, MatchesElementwiseRecount) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::vector<Label> p, y;
    ConfusionMatrix ref;
    for (int i = 0; i < n; ++i) {
      p.push_back(rng() % 2 ? Label::kPass : Label::kFail);
      y.push_back(rng() % 3 ? Label::kPass : Label::kFail);
      const int code = 2 * (p.back() == Label::kPass) + (y.back() == Label::kPass);
      ref.tn += code == 0;
      ref.fn += code == 1;
      ref.fp += code == 2;
      ref.tp += code == 3;
    }
    const auto cm = confusion(p, y);
    EXPECT_EQ(cm, ref);
    EXPECT_EQ(cm.total(), n);
  }
}

TEST(Confusion, RejectsBadInput) {
  EXPECT_THROW(confusion(labels({1, 0}), labels({1})), ArgumentError);
  EXPECT_THROW(confusion({}, {}), ArgumentError);
}

TEST(Metrics, WorkedExample) {
  const auto r = metrics({3, 1, 1, 5});
  EXPECT_EQ(r.values.accuracy, 0.8);
  EXPECT_EQ(r.values.precision, 0.75);
  EXPECT_EQ(r.values.recall, 0.75);
  EXPECT_EQ(r.values.f1, 0.75);
  EXPECT_FALSE(r.precision_undefined || r.recall_undefined || r.f1_undefined);
}

TEST(Metrics, ZeroDenominatorsAreFlagged) {
  const auto r = metrics({0, 0, 0, 10});
  EXPECT_EQ(r.values.accuracy, 1.0);
  EXPECT_EQ(r.values.precision, 0.0);
  EXPECT_EQ(r.values.recall, 0.0);
  EXPECT_EQ(r.values.f1, 0.0);
  EXPECT_TRUE(r.precision_undefined);
  EXPECT_TRUE(r.recall_undefined);
  EXPECT_TRUE(r.f1_undefined);
  const auto s = metrics({0, 4, 0, 1});
  EXPECT_TRUE(s.recall_undefined);
  EXPECT_FALSE(s.precision_undefined);
  EXPECT_EQ(s.values.precision, 0.0);
  EXPECT_THROW(metrics({}), ArgumentError);
}

TEST(Metrics, PerfectPredictor) {
  const auto r = metrics({7, 0, 0, 3});
  for (double v : r.values.as_array()) EXPECT_EQ(v, 1.0);
}

TEST(Metrics, ExactOnEnumeratedMatrices) {
  for (long tp = 0; tp <= 6; ++tp)
    for (long fp = 0; fp <= 6; ++fp)
      for (long fn = 0; fn <= 6; ++fn)
        for (long tn = 0; tn <= 6; ++tn) {
          const ConfusionMatrix cm{tp, fp, fn, tn};
          if (cm.total() == 0) continue;
          const auto r = metrics(cm);
          EXPECT_EQ(r.values.accuracy, reduced(tp + tn, cm.total()));
          EXPECT_EQ(r.values.precision, tp + fp ? reduced(tp, tp + fp) : 0.0);
          EXPECT_EQ(r.values.recall, tp + fn ? reduced(tp, tp + fn) : 0.0);
          EXPECT_EQ(r.values.f1, tp ? reduced(2 * tp, 2 * tp + fp + fn) : 0.0);
          EXPECT_EQ(r.precision_undefined, tp + fp == 0);
          EXPECT_EQ(r.recall_undefined, tp + fn == 0);
          const double p = r.values.precision, q = r.values.recall;
          if (p + q > 0) EXPECT_NEAR(r.values.f1, 2 * p * q / (p + q), 1e-15);
          const auto e = exact_metrics(cm);
          EXPECT_EQ(e[0], (Ratio{tp + tn, cm.total()}));
          EXPECT_EQ(e[3], (Ratio{2 * tp, 2 * tp + fp + fn}));
        }
}

void check_plan(const FoldPlan& plan, std::size_t n, std::span<const Label> y) {
  std::vector<int> seen(n, 0);
  std::size_t lo = n, hi = 0, plo = n, phi = 0, flo = n, fhi = 0;
  for (const auto& f : plan.folds) {
    EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
    for (auto i : f) ++seen.at(i);
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    std::size_t p = 0;
    for (auto i : f) p += y[i] == Label::kPass;
    plo = std::min(plo, p);
    phi = std::max(phi, p);
    flo = std::min(flo, f.size() - p);
    fhi = std::max(fhi, f.size() - p);
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_LE(hi - lo, 1u);
  if (plan.stratified) {
    EXPECT_LE(phi - plo, 1u);
    EXPECT_LE(fhi - flo, 1u);
  }
}

TEST(Folds, TenFoldsOfTen) {
  std::vector<Label> y(100, Label::kPass);
  const auto plan = kfold_split(100, y, 10, 1);
  ASSERT_EQ(plan.folds.size(), 10u);
  for (const auto& f : plan.folds) EXPECT_EQ(f.size(), 10u);
}

TEST(Folds, StratifiedSixtyForty) {
  std::vector<Label> y;
  for (int i = 0; i < 100; ++i) y.push_back(i % 5 < 3 ? Label::kPass : Label::kFail);
  const auto plan = kfold_split(100, y, 10, 7);
  for (const auto& f : plan.folds) {
    const auto pass = std::count_if(f.begin(), f.end(), [&](std::size_t i) { return y[i] == Label::kPass; });
    EXPECT_EQ(pass, 6);
    EXPECT_EQ(f.size() - pass, 4u);
  }
}

TEST(Folds, PartitionPropertyOnRandomCases) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + static_cast<int>(rng() % 12);
    const std::size_t n = k + rng() % 300;
    std::vector<Label> y;
    const unsigned bias = 1 + rng() % 9;
    for (std::size_t i = 0; i < n; ++i) y.push_back(rng() % 10 < bias ? Label::kPass : Label::kFail);
    const bool strat = t % 3 != 0;
    const auto plan = kfold_split(n, y, k, rng(), strat);
    ASSERT_EQ(plan.folds.size(), static_cast<std::size_t>(k));
    check_plan(plan, n, y);
  }
}

TEST(Folds, DeterministicPerSeed) {
  std::vector<Label> y(57, Label::kFail);
  for (int i = 0; i < 20; ++i) y[i * 2] = Label::kPass;
  EXPECT_EQ(kfold_split(57, y, 5, 3).folds, kfold_split(57, y, 5, 3).folds);
  EXPECT_NE(kfold_split(57, y, 5, 3).folds, kfold_split(57, y, 5, 4).folds);
}

TEST(Folds, RejectsTooFewItems) {
  std::vector<Label> y(5, Label::kPass);
  EXPECT_THROW(kfold_split(5, y, 10, 0), ArgumentError);
  EXPECT_THROW(kfold_split(5, y, 1, 0), ArgumentError);
}

TEST(ModelKinds, ParseAndMap) {
  EXPECT_EQ(parse_model_kind("its4sdc"), ModelKind::kIts4sdc);
  EXPECT_EQ(parse_model_kind("forest"), ModelKind::kRandomForest);
  EXPECT_EQ(parse_model_kind("logistic_regression"), ModelKind::kLogisticRegression);
  EXPECT_FALSE(parse_model_kind("svm"));
  EXPECT_FALSE(as_baseline(ModelKind::kIts4sdc));
  EXPECT_EQ(as_baseline(ModelKind::kDecisionTree), baselines::BaselineKind::kDecisionTree);
}

TEST(Setup, ConstantPassPredictorOnBalancedTarget) {
  data::Dataset all_pass = small_dataset();
  for (auto& e : all_pass.entries) e.road.set_label(Label::kPass);
  data::Dataset balanced = small_dataset();
  for (std::size_t i = 0; i < balanced.size(); ++i) balanced.entries[i].road.set_label(i % 2 ? Label::kPass : Label::kFail);
  ModelSpec spec;
  spec.kind = ModelKind::kDecisionTree;
  const auto r = run_setup(3, spec, &all_pass, &balanced, {});
  EXPECT_EQ(r.setup, 3);
  EXPECT_EQ(r.report.values.accuracy, 0.5);
  EXPECT_EQ(r.report.values.recall, 1.0);
  EXPECT_TRUE(r.folds.empty());
  EXPECT_FALSE(r.warnings.empty());
  const auto back = run_setup(4, spec, &balanced, &all_pass, {});
  EXPECT_EQ(back.report.values.accuracy, 0.5);
}

TEST(Setup, MissingDatasetIsAnArgumentError) {
  ModelSpec spec;
  spec.kind = ModelKind::kGaussianNaiveBayes;
  const auto& ds = small_dataset();
  EXPECT_THROW(run_setup(1, spec, nullptr, &ds, {}), ArgumentError);
  EXPECT_THROW(run_setup(2, spec, &ds, nullptr, {}), ArgumentError);
  EXPECT_THROW(run_setup(3, spec, &ds, nullptr, {}), ArgumentError);
  EXPECT_THROW(run_setup(5, spec, &ds, &ds, {}), ArgumentError);
}

TEST(Setup, UnlabeledEntriesAreRejected) {
  data::Dataset ds = small_dataset();
  ds.entries[3].road.set_label(std::nullopt);
  ModelSpec spec;
  spec.kind = ModelKind::kDecisionTree;
  EXPECT_THROW(run_setup(1, spec, &ds, nullptr, {}), ArgumentError);
}

TEST(Setup, CrossValidationIsDeterministicAndMeansRecompute) {
  ModelSpec spec;
  spec.kind = ModelKind::kRandomForest;
  spec.baseline.n_trees = 10;
  EvalOptions opts{5, 9, true, false};
  const auto a = run_setup(1, spec, &small_dataset(), nullptr, opts);
  const auto b = run_setup(2, spec, nullptr, &small_dataset(), opts);
  ASSERT_EQ(a.folds.size(), 5u);
  EXPECT_EQ(to_json(a).at("folds"), to_json(b).at("folds"));
  EXPECT_EQ(folds_csv(a), folds_csv(run_setup(1, spec, &small_dataset(), nullptr, opts)));
  MetricValues sum;
  long total = 0;
  for (const auto& f : a.folds) {
    sum.accuracy += f.values.accuracy;
    sum.precision += f.values.precision;
    sum.recall += f.values.recall;
    sum.f1 += f.values.f1;
    total += f.counts.total();
  }
  EXPECT_DOUBLE_EQ(a.report.values.accuracy, sum.accuracy / 5);
  EXPECT_DOUBLE_EQ(a.report.values.precision, sum.precision / 5);
  EXPECT_DOUBLE_EQ(a.report.values.recall, sum.recall / 5);
  EXPECT_DOUBLE_EQ(a.report.values.f1, sum.f1 / 5);
  EXPECT_EQ(total, 80);
  opts.pooled = true;
  const auto p = run_setup(1, spec, &small_dataset(), nullptr, opts);
  EXPECT_EQ(p.report.values.accuracy, metrics(p.report.counts).values.accuracy);
  EXPECT_EQ(p.report.counts, a.report.counts);
}

TEST(Setup, RecurrentModelRunsAndIsDeterministic) {
  ModelSpec spec;
  spec.train.hidden_size = 4;
  spec.train.epochs = 2;
  spec.train.batch_size = 16;
  EvalOptions opts{2, 1, true, false};
  const auto a = run_setup(1, spec, &small_dataset(), nullptr, opts);
  const auto b = run_setup(1, spec, &small_dataset(), nullptr, opts);
  EXPECT_EQ(a.model, "its4sdc");
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Average, PublishedTablesReproducePrintedAverages) {
  for (int setup : {1, 2}) {
    std::vector<MetricValues> v;
    for (const auto& row : published::scissor_models(setup)) v.push_back(row.values);
    ASSERT_EQ(v.size(), 6u);
    const auto avg = scissor_average(v).as_array();
    const auto printed = published::scissor_average_row(setup).as_array();
    for (int m = 0; m < 4; ++m) EXPECT_EQ(to_cents(avg[m]), to_cents(printed[m])) << "setup " << setup << " metric " << m;
  }
}

TEST(Average, IdenticalReportsAverageToThemselves) {
  const MetricValues r{0.3, 0.6, 0.9, 0.7};
  const std::vector<MetricValues> v(4, r);
  const auto a = scissor_average(v);
  EXPECT_DOUBLE_EQ(a.accuracy, 0.3);
  EXPECT_DOUBLE_EQ(a.f1, 0.7);
  EXPECT_THROW(scissor_average({}), ArgumentError);
}

TEST(Compare, SelfIsZeroAndAntisymmetric) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    const MetricValues a{u(rng), u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng), u(rng)};
    for (double d : compare(a, a).delta.as_array()) EXPECT_EQ(d, 0.0);
    const auto x = compare(a, b).delta.as_array(), y = compare(b, a).delta.as_array();
    for (int m = 0; m < 4; ++m) EXPECT_EQ(x[m], -y[m]);
  }
}

TEST(Compare, PublishedRowsAandD) {
  const auto rows = published_comparison();
  ASSERT_EQ(rows.size(), 4u);
  for (int i : {0, 2, 3}) {
    const auto got = rows[i].delta.as_array();
    const auto want = published::comparison_rows()[i].delta.as_array();
    for (int m = 0; m < 4; ++m) EXPECT_EQ(format_metric(got[m]), format_metric(want[m])) << rows[i].label << m;
  }
  EXPECT_EQ(comparison_csv({rows.data(), 1}),
            "label,its4sdc_setup,scissor_setup,accuracy,precision,recall,f1\nA,1,1,0.26,0.23,0.13,0.17\n");
  EXPECT_EQ(format_metric(rows[3].delta.recall), "-0.05");
}

TEST(Format, TwoDecimalsWithoutNegativeZero) {
  EXPECT_EQ(format_metric(0.0), "0.00");
  EXPECT_EQ(format_metric(-0.0), "0.00");
  EXPECT_EQ(format_metric(-0.004), "0.00");
  EXPECT_EQ(format_metric(-0.005), "-0.01");
  EXPECT_EQ(format_metric(0.125), "0.13");
  EXPECT_EQ(format_metric(3.87 / 6), "0.65");
  EXPECT_EQ(format_metric(1.0), "1.00");
  EXPECT_EQ(format_metric(0.77 - 0.82), "-0.05");
  EXPECT_THROW(format_metric(std::nan("")), ArgumentError);
}

TEST(Tables, TextAndCsvLayouts) {
  const std::vector<NamedMetrics> rows = {{"Setup 1", {0.87, 0.88, 0.9, 0.89}}, {"Setup 2", {0.63, 0.68, 0.77, 0.72}}};
  EXPECT_EQ(metrics_csv(rows), "name,accuracy,precision,recall,f1\nSetup 1,0.87,0.88,0.90,0.89\nSetup 2,0.63,0.68,0.77,0.72\n");
  const auto text = metrics_text("ITS4SDC", rows);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_NE(text.find("Setup 2      0.63       0.68    0.77   0.72"), std::string::npos) << text;
}

TEST(Serialization, SetupResultRoundTrip) {
  ModelSpec spec;
  spec.kind = ModelKind::kGaussianNaiveBayes;
  const auto r = run_setup(1, spec, &small_dataset(), nullptr, {4, 2, false, false});
  const auto back = setup_result_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(to_json(back), to_json(r));
  EXPECT_EQ(back.plan->folds, r.plan->folds);
  EXPECT_THROW(setup_result_from_json({{"setup", 9}}), ValidationError);
}

}  // namespace
}  // namespace roadsel::eval
