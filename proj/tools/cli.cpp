#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "roadsel/baselines.hpp"
#include "roadsel/dataset_file.hpp"
#include "roadsel/errors.hpp"
#include "roadsel/eval.hpp"
#include "roadsel/features.hpp"
#include "roadsel/geometry.hpp"
#include "roadsel/io.hpp"
#include "roadsel/manifest.hpp"
#include "roadsel/nn/checkpoint.hpp"
#include "roadsel/nn/nn.hpp"
#include "roadsel/synth.hpp"

namespace roadsel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct TrainFlags {
  std::string model = "its4sdc";
  nn::TrainConfig nn;
  baselines::BaselineParams baseline;
  std::string precision = "float32";
  std::size_t decimate = 1;

  void add(CLI::App* app) {
    app->add_option("--model", model, "its4sdc, logreg, gnb, tree or forest")->capture_default_str();
    app->add_option("--epochs", nn.epochs)->capture_default_str();
    app->add_option("--batch", nn.batch_size)->capture_default_str();
    app->add_option("--lr", nn.learning_rate)->capture_default_str();
    app->add_option("--hidden", nn.hidden_size)->capture_default_str();
    app->add_option("--clip", nn.grad_clip_norm, "gradient-norm clip, 0 disables")->capture_default_str();
    app->add_flag("--standardize", nn.standardize_features, "standardize the sequence channels");
    app->add_option("--precision", precision, "float32 or float64 training kernel")->capture_default_str();
    app->add_option("--trees", baseline.n_trees)->capture_default_str();
    app->add_option("--max-depth", baseline.max_depth)->capture_default_str();
    app->add_option("--min-leaf", baseline.min_leaf)->capture_default_str();
    app->add_option("--decimate", decimate, "keep every k-th road point")->capture_default_str();
  }

  eval::ModelSpec spec() {
    const auto kind = eval::parse_model_kind(model);
    if (!kind) throw UsageError("unknown model '" + model + "'");
    if (precision == "float32") nn.precision = nn::Precision::kFloat32;
    else if (precision == "float64") nn.precision = nn::Precision::kFloat64;
    else throw UsageError("precision must be float32 or float64");
    if (decimate < 1) throw UsageError("--decimate must be >= 1");
    eval::ModelSpec s;
    s.kind = *kind;
    s.train = nn;
    s.baseline = baseline;
    return s;
  }

  json to_json() const {
    json j = {{"model", model}, {"decimate", decimate}};
    j["nn"] = nn::to_json(nn);
    j["baseline"] = {{"logreg_learning_rate", baseline.logreg_learning_rate},
                     {"logreg_steps", baseline.logreg_steps},
                     {"gnb_var_floor", baseline.gnb_var_floor},
                     {"max_depth", baseline.max_depth},
                     {"min_leaf", baseline.min_leaf},
                     {"n_trees", baseline.n_trees},
                     {"max_features", baseline.max_features}};
    return j;
  }
};

data::Dataset load(const std::string& path, RunManifest* m, std::size_t decimate = 1) {
  if (!fs::exists(path)) throw ArgumentError("dataset file " + path + " does not exist");
  auto ds = data::load_dataset(path);
  if (m) m->add_input(path);
  if (decimate > 1) {
    for (auto& e : ds.entries) e.road = geometry::decimate(e.road, decimate);
  }
  return ds;
}

void require_labeled(const data::Dataset& ds, const std::string& path) {
  const auto ids = ds.unlabeled_ids();
  if (ids.empty()) return;
  std::string list;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) list += (i ? ", " : "") + ids[i];
  if (ids.size() > 20) list += ", ...";
  throw ValidationError(path + ": " + std::to_string(ids.size()) + " unlabeled entries: " + list);
}

struct LoadedModel {
  std::optional<nn::BiLstmClassifier> nn;
  std::optional<baselines::BaselineModel> baseline;

  double proba(const geometry::Road& road) const {
    if (nn) return nn::predict(*nn, features::extract_sequence(road)).probability;
    return baselines::predict_proba(*baseline, baselines::to_row(features::extract_stats(road)));
  }
};

LoadedModel load_model(const std::string& path) {
  if (!fs::exists(path)) throw ArgumentError("model file " + path + " does not exist");
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("model file " + path + " is not valid JSON: " + e.what());
  }
  LoadedModel m;
  if (doc.is_object() && doc.value("kind", std::string()) == "its4sdc") m.nn = nn::classifier_from_json(doc);
  else m.baseline = baselines::baseline_from_json(doc);
  return m;
}

std::vector<double> probabilities(const LoadedModel& m, const data::Dataset& ds) {
  if (m.nn) {
    std::vector<features::SegmentFeatureSequence> seqs;
    for (const auto& e : ds.entries) seqs.push_back(features::extract_sequence(e.road));
    std::vector<double> out;
    for (const auto& p : nn::predict_batch(*m.nn, seqs)) out.push_back(p.probability);
    return out;
  }
  std::vector<double> out;
  for (const auto& e : ds.entries) out.push_back(m.proba(e.road));
  return out;
}

void write_output(const fs::path& path, const std::string& text, RunManifest& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_file_atomic(path, text);
  m.outputs.push_back(path.string());
}

class Runner {
 public:
  Runner(std::vector<std::string> args, std::ostream& out, std::ostream& err)
      : args_(std::move(args)), out_(out), err_(err) {}

  int run();

 private:
  int generate();
  int validate();
  int train();
  int crossval();
  int predict();
  int select();
  int compare();
  int replay();

  void finish(RunManifest& m, const fs::path& where) {
    m.argv = args_;
    m.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    save_manifest(where, m);
  }

  std::vector<std::string> args_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

  int threads_ = 0;

  std::uint64_t seed_ = 0;
  std::size_t n_ = 100;
  std::string out_path_, in_path_, model_path_, manifest_in_;
  std::vector<std::string> in_paths_;
  synth::GeneratorConfig gen_;
  synth::DriverConfig driver_;
  double clearance_ = geometry::kDefaultClearance;
  TrainFlags train_;
  int setup_ = 1, k_ = 10;
  bool pooled_ = false, unstratified_ = false;
  std::optional<std::size_t> budget_;
  std::optional<double> threshold_;
  std::vector<std::string> its_files_, scissor_files_;
  std::optional<int> its_paper_, scissor_paper_;
  bool published_ = false;
  std::string label_ = "X";
};

int Runner::run() {
  CLI::App app{"Road test-case selection toolkit"};
  app.name("roadsel");
  app.require_subcommand(1);
  app.add_option("--threads", threads_, "worker threads, 0 = runtime default")->capture_default_str();

  auto* gen = app.add_subcommand("generate", "generate an oracle-labeled synthetic dataset");
  gen->add_option("--n", n_, "number of roads")->capture_default_str();
  gen->add_option("--seed", seed_)->capture_default_str();
  gen->add_option("--out", out_path_)->required();
  gen->add_option("--max-speed", driver_.max_speed_kmh, "km/h")->capture_default_str();
  gen->add_option("--risk-factor", driver_.risk_factor)->capture_default_str();
  gen->add_option("--oob", driver_.oob_tolerance)->capture_default_str();
  gen->add_option("--lookahead", driver_.lookahead, "meters")->capture_default_str();
  gen->add_option("--max-turn", gen_.max_turn_deg, "degrees")->capture_default_str();
  gen->add_option("--points", gen_.resample_count)->capture_default_str();
  gen->add_option("--map-size", gen_.map_size)->capture_default_str();

  auto* val = app.add_subcommand("validate", "check every road of a dataset for validity");
  val->add_option("--in", in_path_)->required();
  val->add_option("--clearance", clearance_)->capture_default_str();

  auto* tr = app.add_subcommand("train", "train a classifier on a labeled dataset");
  tr->add_option("--in", in_path_)->required();
  tr->add_option("--model-out", out_path_)->required();
  tr->add_option("--seed", seed_)->capture_default_str();
  train_.add(tr);

  auto* cv = app.add_subcommand("crossval", "run one evaluation setup");
  cv->add_option("--in", in_paths_, "dataset 1 [dataset 2]")->required()->expected(1, 2);
  cv->add_option("--setup", setup_)->check(CLI::Range(1, 4))->capture_default_str();
  cv->add_option("--k", k_)->capture_default_str();
  cv->add_option("--seed", seed_)->capture_default_str();
  cv->add_option("--out-dir", out_path_)->required();
  cv->add_flag("--pooled", pooled_, "aggregate summed confusion counts");
  cv->add_flag("--unstratified", unstratified_, "plain shuffled folds");
  train_.add(cv);

  auto* pr = app.add_subcommand("predict", "write PASS probabilities and labels");
  pr->add_option("--model", model_path_)->required();
  pr->add_option("--in", in_path_)->required();
  pr->add_option("--out", out_path_)->required();

  auto* sel = app.add_subcommand("select", "order roads by failure likelihood");
  sel->add_option("--model", model_path_)->required();
  sel->add_option("--in", in_path_)->required();
  sel->add_option("--out", out_path_)->required();
  auto* b = sel->add_option("--budget", budget_, "number of roads to keep");
  auto* t = sel->add_option("--threshold", threshold_, "keep roads with PASS probability <= threshold");
  b->excludes(t);

  auto* cmp = app.add_subcommand("compare", "metric deltas of the recurrent model against the baseline average");
  cmp->add_option("--its", its_files_, "setup result of the recurrent model");
  cmp->add_option("--its-paper", its_paper_, "published recurrent-model setup 1-4");
  cmp->add_option("--scissor", scissor_files_, "setup results of baseline models, averaged");
  cmp->add_option("--scissor-paper", scissor_paper_, "published baseline average of setup 1-2");
  cmp->add_option("--label", label_)->capture_default_str();
  cmp->add_flag("--published", published_, "print rows A-D from the published tables");
  cmp->add_option("--out", out_path_, "CSV output path");

  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("--manifest", manifest_in_)->required();

  std::vector<const char*> argv{"roadsel"};
  for (const auto& a : args_) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kOk : kUsage;
  }
  if (threads_ < 0) {
    err_ << "error: --threads must be >= 0\n";
    return kUsage;
  }
  if (threads_ > 0) omp_set_num_threads(threads_);

  try {
    if (gen->parsed()) return generate();
    if (val->parsed()) return validate();
    if (tr->parsed()) return train();
    if (cv->parsed()) return crossval();
    if (pr->parsed()) return predict();
    if (sel->parsed()) return select();
    if (cmp->parsed()) return compare();
    if (rep->parsed()) return replay();
  } catch (const UsageError& e) {
    err_ << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ArgumentError& e) {
    err_ << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err_ << "error: " << e.what() << "\n";
    return kData;
  } catch (const GenerationError& e) {
    err_ << "error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    err_ << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err_ << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err_ << "internal error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}

int Runner::generate() {
  RunManifest m;
  m.command = "generate";
  synth::DatasetSummary sum;
  const auto ds = synth::make_dataset(n_, gen_, driver_, seed_, &sum);
  write_output(out_path_, data::serialize_dataset(ds), m);
  m.config = {{"n", n_}, {"generator", synth::to_json(gen_)}, {"driver", synth::to_json(driver_)}};
  m.seeds = {{"master", seed_}};
  finish(m, manifest_path_for(out_path_));
  for (const auto& w : sum.warnings) err_ << "warning: " << w << "\n";
  out_ << "generated " << sum.total << " roads: " << sum.pass << " PASS, " << sum.fail << " FAIL\n";
  return kOk;
}

int Runner::validate() {
  const auto ds = load(in_path_, nullptr);
  std::size_t invalid = 0;
  for (const auto& e : ds.entries) {
    const auto r = geometry::validate(e.road, clearance_);
    if (r.valid) {
      out_ << e.road.id() << ": valid\n";
      continue;
    }
    ++invalid;
    const auto& v = r.violations.front();
    out_ << e.road.id() << ": INVALID " << geometry::to_string(v.kind) << " " << v.first << "," << v.second << " ("
         << r.violations.size() << " violations)\n";
  }
  out_ << ds.size() << " roads, " << ds.size() - invalid << " valid, " << invalid << " invalid\n";
  return invalid == 0 ? kOk : kData;
}

int Runner::train() {
  RunManifest m;
  m.command = "train";
  const auto spec = train_.spec();
  const auto ds = load(in_path_, &m, train_.decimate);
  require_labeled(ds, in_path_);
  std::vector<Label> y;
  for (const auto& e : ds.entries) y.push_back(*e.road.label());

  std::string doc, history = "epoch,loss\n";
  std::vector<std::string> warnings;
  std::size_t correct = 0;
  if (const auto kind = eval::as_baseline(spec.kind)) {
    std::vector<baselines::Row> x;
    for (const auto& e : ds.entries) x.push_back(baselines::to_row(features::extract_stats(e.road)));
    std::vector<double> losses;
    const auto model = baselines::fit(*kind, x, y, spec.baseline, seed_, &losses);
    for (std::size_t i = 0; i < losses.size(); ++i) history += std::to_string(i + 1) + "," + full(losses[i]) + "\n";
    for (std::size_t i = 0; i < x.size(); ++i) correct += baselines::predict(model, x[i]) == y[i];
    warnings = model.warnings;
    doc = baselines::to_json(model).dump(2) + "\n";
  } else {
    std::vector<features::SegmentFeatureSequence> xs;
    for (const auto& e : ds.entries) xs.push_back(features::extract_sequence(e.road));
    auto cfg = spec.train;
    cfg.rng_seed = seed_;
    const auto r = nn::train(xs, y, cfg);
    for (std::size_t i = 0; i < r.history.epoch_loss.size(); ++i) {
      history += std::to_string(i + 1) + "," + full(r.history.epoch_loss[i]) + "\n";
    }
    const auto preds = nn::predict_batch(r.model, xs);
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].label == y[i];
    warnings = r.history.warnings;
    doc = nn::to_json(r.model).dump(2) + "\n";
  }
  write_output(out_path_, doc, m);
  write_output(out_path_ + ".history.csv", history, m);
  m.config = train_.to_json();
  m.seeds = {{"train", seed_}};
  finish(m, manifest_path_for(out_path_));
  for (const auto& w : warnings) err_ << "warning: " << w << "\n";
  out_ << "trained " << train_.model << " on " << ds.size() << " roads, training accuracy " << full(static_cast<double>(correct) / static_cast<double>(ds.size())) << "\n";
  return kOk;
}

int Runner::crossval() {
  RunManifest m;
  m.command = "crossval";
  const auto spec = train_.spec();
  if ((setup_ == 3 || setup_ == 4) && in_paths_.size() != 2) {
    throw UsageError("setup " + std::to_string(setup_) + " needs two dataset paths (dataset 1 and dataset 2)");
  }
  if (setup_ <= 2 && in_paths_.size() != 1) throw UsageError("setup " + std::to_string(setup_) + " takes one dataset path");
  std::vector<data::Dataset> ds;
  for (const auto& p : in_paths_) {
    ds.push_back(load(p, &m, train_.decimate));
    require_labeled(ds.back(), p);
  }
  const data::Dataset* d1 = setup_ == 2 ? nullptr : &ds[0];
  const data::Dataset* d2 = setup_ == 2 ? &ds[0] : (ds.size() > 1 ? &ds[1] : nullptr);
  eval::EvalOptions opts{k_, seed_, !unstratified_, pooled_};
  const auto r = eval::run_setup(setup_, spec, d1, d2, opts, [&](int f, const eval::MetricsReport& rep) {
    out_ << "fold " << f << ": accuracy " << eval::format_metric(rep.values.accuracy) << "\n";
  });
  const fs::path dir(out_path_);
  write_output(dir / "result.json", eval::to_json(r).dump(2) + "\n", m);
  if (!r.folds.empty()) write_output(dir / "folds.csv", eval::folds_csv(r), m);
  const eval::NamedMetrics row{"Setup " + std::to_string(setup_) + " " + r.model, r.report.values};
  write_output(dir / "metrics.csv", eval::metrics_csv({&row, 1}), m);
  m.config = train_.to_json();
  m.config["setup"] = setup_;
  m.config["k"] = k_;
  m.config["stratified"] = !unstratified_;
  m.config["pooled"] = pooled_;
  m.seeds = {{"folds", seed_}};
  finish(m, dir / "manifest.json");
  for (const auto& w : r.warnings) err_ << "warning: " << w << "\n";
  out_ << eval::metrics_text("Setup " + std::to_string(setup_), {&row, 1});
  return kOk;
}

int Runner::predict() {
  RunManifest m;
  m.command = "predict";
  const auto model = load_model(model_path_);
  m.add_input(model_path_);
  const auto ds = load(in_path_, &m);
  const auto probs = probabilities(model, ds);
  std::string csv = "id,probability,label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    csv += ds.entries[i].road.id() + "," + full(probs[i]) + "," + std::string(to_string(label_from_probability(probs[i]))) + "\n";
  }
  write_output(out_path_, csv, m);
  finish(m, manifest_path_for(out_path_));
  out_ << "predicted " << ds.size() << " roads\n";
  return kOk;
}

int Runner::select() {
  RunManifest m;
  m.command = "select";
  if (!budget_ && !threshold_) throw UsageError("select needs --budget or --threshold");
  if (threshold_ && !(*threshold_ >= 0.0 && *threshold_ <= 1.0)) throw UsageError("--threshold must lie in [0, 1]");
  const auto model = load_model(model_path_);
  m.add_input(model_path_);
  const auto ds = load(in_path_, &m);
  if (budget_ && *budget_ > ds.size()) {
    throw UsageError("--budget " + std::to_string(*budget_) + " exceeds the dataset size " + std::to_string(ds.size()));
  }
  const auto probs = probabilities(model, ds);
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  std::size_t keep = order.size();
  if (budget_) keep = *budget_;
  else keep = static_cast<std::size_t>(std::count_if(probs.begin(), probs.end(), [&](double p) { return p <= *threshold_; }));
  std::string csv = "rank,id,probability,predicted\n";
  for (std::size_t r = 0; r < keep; ++r) {
    const std::size_t i = order[r];
    csv += std::to_string(r + 1) + "," + ds.entries[i].road.id() + "," + full(probs[i]) + "," +
           std::string(to_string(label_from_probability(probs[i]))) + "\n";
  }
  write_output(out_path_, csv, m);
  m.config = {{"budget", budget_ ? json(*budget_) : json(nullptr)}, {"threshold", threshold_ ? json(*threshold_) : json(nullptr)}};
  finish(m, manifest_path_for(out_path_));
  out_ << "selected " << keep << " of " << ds.size() << " roads\n";
  return kOk;
}

int Runner::compare() {
  RunManifest m;
  m.command = "compare";
  std::vector<eval::ComparisonRow> rows;
  if (published_) {
    if (!its_files_.empty() || its_paper_ || !scissor_files_.empty() || scissor_paper_) {
      throw UsageError("--published cannot be combined with other inputs");
    }
    rows = eval::published_comparison();
  } else {
    if ((its_files_.size() == 1) == its_paper_.has_value()) throw UsageError("give exactly one of --its or --its-paper");
    if (scissor_files_.empty() == !scissor_paper_.has_value()) {
      throw UsageError("give exactly one of --scissor or --scissor-paper");
    }
    eval::MetricValues its;
    int its_setup = 0, scissor_setup = 0;
    auto read = [&](const std::string& p) {
      m.add_input(p);
      try {
        return eval::setup_result_from_json(json::parse(io::read_file(p)));
      } catch (const json::exception& e) {
        throw ValidationError(p + " is not valid JSON: " + e.what());
      }
    };
    if (its_paper_) {
      its = eval::published::its4sdc(*its_paper_);
      its_setup = *its_paper_;
    } else {
      const auto r = read(its_files_[0]);
      its = r.report.values;
      its_setup = r.setup;
    }
    eval::MetricValues scissor;
    if (scissor_paper_) {
      scissor = eval::published::scissor_average_row(*scissor_paper_);
      scissor_setup = *scissor_paper_;
    } else {
      std::vector<eval::MetricValues> v;
      for (const auto& p : scissor_files_) {
        const auto r = read(p);
        v.push_back(r.report.values);
        scissor_setup = r.setup;
      }
      scissor = eval::scissor_average(v);
    }
    rows.push_back(eval::compare(its, scissor, label_, its_setup, scissor_setup));
  }
  if (!out_path_.empty()) {
    write_output(out_path_, eval::comparison_csv(rows), m);
    finish(m, manifest_path_for(out_path_));
  }
  out_ << eval::comparison_text(rows);
  return kOk;
}

int Runner::replay() {
  const auto m = load_manifest(manifest_in_);
  for (const auto& [path, digest] : m.inputs) {
    if (!fs::exists(path) || io::sha256_file(path) != digest) {
      err_ << "warning: input " << path << " differs from the recorded digest\n";
    }
  }
  if (!m.argv.empty() && m.argv.front() == "replay") throw UsageError("refusing to replay a replay");
  out_ << "replaying: " << m.command << "\n";
  return Runner(m.argv, out_, err_).run();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Runner(args, out, err).run();
}

}  // namespace roadsel::cli
