// Copyright 2026 The DySeqDPP Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dyseqdpp: train, summarize, evaluate, verify, synth.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration or path
// error, 3 model/data incompatibility, 4 missing annotation, 5 numerical or
// capacity failure during a run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dyseqdpp/dyseqdpp.hpp"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;
namespace dd = dyseqdpp;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIncompatible = 3;
constexpr int kExitMissingAnnotation = 4;
constexpr int kExitRuntime = 5;

// Stream selectors keep the per-purpose RNG streams apart.
constexpr std::uint64_t kStreamInit = 0x1417;
constexpr std::uint64_t kStreamTrain = 0x7a41;
constexpr std::uint64_t kStreamRollout = 0x4011;
constexpr std::uint64_t kStreamVerify = 0x7e41;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int workers = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
};

struct ModelOptions {
  std::string policy = "dynamic";
  int fixed_length = 10;
  std::string phi = "concat";
  int initial_length = dd::kInitialSegmentLength;

  dd::PolicyConfig config() const {
    dd::PolicyConfig c;
    c.kind = policy == "fixed" ? dd::PolicyKind::fixed(fixed_length) : dd::PolicyKind::dynamic();
    c.phi = phi == "seg" ? dd::PhiMode::PoolSeg : phi == "video" ? dd::PhiMode::PoolVideo : dd::PhiMode::ConcatCurrent;
    c.initial_length = initial_length;
    return c;
  }

  ordered_json to_json() const {
    ordered_json j;
    j["policy"] = policy;
    if (policy == "fixed") j["fixed_length"] = fixed_length;
    j["phi"] = phi;
    j["initial_length"] = initial_length;
    return j;
  }

  void add_to(CLI::App* app) {
    app->add_option("--policy", policy, "Policy variant: dynamic (learned lengths) or fixed (uniform partition)")
        ->check(CLI::IsMember({"dynamic", "fixed"}))
        ->capture_default_str();
    app->add_option("--fixed-length", fixed_length, "Segment length of the fixed policy; must be in the length menu")
        ->capture_default_str();
    app->add_option("--phi", phi, "Length-head pooling: concat (summary + segment), seg (segment), video (prefix)")
        ->check(CLI::IsMember({"concat", "seg", "video"}))
        ->capture_default_str();
    app->add_option("--initial-length", initial_length, "Length of the first segment of the dynamic policy")
        ->check(CLI::Range(1, dd::kMaxSegmentLength))
        ->capture_default_str();
  }
};

std::vector<int> parse_menu(const std::string& text) {
  std::vector<int> out;
  const auto dash = text.find('-');
  if (dash != std::string::npos && text.find(',') == std::string::npos) {
    const int lo = std::stoi(text.substr(0, dash));
    const int hi = std::stoi(text.substr(dash + 1));
    if (hi < lo) throw dd::InvalidInput("empty length range: " + text);
    return dd::LengthMenu::range(lo, hi);
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<std::optional<int>> parse_windows(const std::string& text) {
  std::vector<std::optional<int>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf")
      out.emplace_back();
    else {
      const int k = std::stoi(item);
      if (k < 0) throw dd::InvalidInput("matching window must be non-negative");
      out.emplace_back(k);
    }
  }
  if (out.empty()) throw dd::InvalidInput("window list is empty");
  return out;
}

std::string window_name(const std::optional<int>& k) { return k ? std::to_string(*k) : "inf"; }

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw dd::InvalidInput("cannot write " + path);
  out << text;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Video from --video, or from --data with --id (default: first video).
struct VideoSource {
  std::string video_path;
  std::string data_path;
  std::string id;

  void add_to(CLI::App* app) {
    app->add_option("--video", video_path, "Video document (one file of a dataset)");
    app->add_option("--data", data_path, "Dataset directory or manifest; used with --id");
    app->add_option("--id", id, "Video id inside --data (default: first video)");
  }

  dd::VideoRecord load() const {
    if (!video_path.empty()) return dd::load_video(video_path);
    if (data_path.empty()) throw dd::InvalidInput("either --video or --data is required");
    const auto all = dd::load_dataset(data_path);
    if (all.empty()) throw dd::InvalidInput("dataset is empty: " + data_path);
    if (id.empty()) return all.front();
    for (const auto& v : all)
      if (v.id == id) return v;
    throw dd::InvalidInput("video id not found in " + data_path + ": " + id);
  }

  ordered_json to_json() const {
    ordered_json j;
    if (!video_path.empty()) j["video"] = video_path;
    if (!data_path.empty()) j["data"] = data_path;
    if (!id.empty()) j["id"] = id;
    return j;
  }
};

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string out;
  std::size_t videos = 25;
  dd::SynthSpec spec;
  bool no_repeat = false;
};

int run_synth(const GlobalOptions& g, SynthOptions o) {
  o.spec.repeat_far_events = !o.no_repeat;
  o.spec.seed = g.seed;
  o.spec.validate();
  const auto corpus = dd::generate_corpus(o.spec, o.videos);
  ordered_json prov;
  prov["command"] = "synth";
  prov["seed"] = g.seed;
  prov["videos"] = o.videos;
  prov["events"] = o.spec.num_events;
  prov["event_length"] = {o.spec.event_length_min, o.spec.event_length_max};
  prov["feature_dim"] = o.spec.feature_dim;
  prov["spread"] = o.spec.within_event_spread;
  prov["separation"] = o.spec.cross_event_separation;
  prov["repeat_far_events"] = o.spec.repeat_far_events;
  prov["repeat_min_gap"] = o.spec.repeat_min_gap;
  prov["concept_dim"] = o.spec.concept_dim;
  prov["shot_duration_seconds"] = o.spec.shot_duration_seconds;
  dd::save_dataset(corpus, o.out, prov);
  std::cerr << "wrote " << corpus.size() << " videos to " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string out;
  std::string log;
  std::string init;
  std::string save_init;
  std::string menu = "5-15";
  std::string hidden = "256,128";
  int kernel_dim = 128;
  ModelOptions model;
  dd::TrainConfig train;
  std::string reward_mode = "full";
  std::string metric = "f1";
  double gamma = 0.0;
  std::optional<int> window = 12;
  bool no_window = false;
  std::string match = "weighted";
  int hamming_threshold = 0;
  std::string sampling = "stochastic";
  std::string surrogate = "trajectory";
  int checkpoint_every = 0;
  bool log_wall_time = false;
};

dd::RewardConfig reward_config(const TrainOptions& o) {
  dd::RewardConfig r;
  r.mode = o.reward_mode == "partial" ? dd::RewardMode::Partial : dd::RewardMode::Full;
  r.metric = o.metric == "precision" ? dd::RewardMetric::Precision
             : o.metric == "recall"  ? dd::RewardMetric::Recall
                                     : dd::RewardMetric::F1;
  r.discount = o.gamma > 0.0 ? dd::Discount::geometric(o.gamma) : dd::Discount::final_step();
  r.matcher.window = o.no_window ? std::nullopt : o.window;
  r.matcher.mode = o.match == "cardinality" ? dd::MatchConfig::Mode::Cardinality : dd::MatchConfig::Mode::Weighted;
  r.matcher.hamming_threshold = o.hamming_threshold;
  return r;
}

ordered_json train_provenance(const GlobalOptions& g, const TrainOptions& o, const dd::PolicyParams& p) {
  ordered_json j;
  j["command"] = "train";
  j["seed"] = g.seed;
  j["data"] = o.data;
  if (!o.init.empty()) j["init"] = o.init;
  j["model"] = o.model.to_json();
  j["menu"] = p.menu.lengths();
  j["dims"] = {p.feature_dim(), p.hidden1(), p.hidden2(), p.kernel_dim()};
  j["updates"] = o.train.num_updates;
  j["learning_rate"] = o.train.learning_rate;
  j["trajectories"] = o.train.num_trajectories;
  j["batch_size"] = o.train.batch_size;
  j["clip_norm"] = o.train.clip_norm;
  j["sampling"] = o.sampling;
  j["oracle_forced"] = o.train.oracle_forced;
  j["surrogate"] = o.surrogate;
  j["budget_fraction"] = o.train.budget_fraction;
  j["reward_mode"] = o.reward_mode;
  j["metric"] = o.metric;
  if (o.gamma > 0.0)
    j["discount_gamma"] = o.gamma;
  else
    j["discount"] = "final-only";
  j["window"] = o.no_window ? ordered_json("inf") : ordered_json(*o.window);
  j["match"] = o.match;
  if (o.match == "cardinality") j["hamming_threshold"] = o.hamming_threshold;
  return j;
}

int run_train(const GlobalOptions& g, TrainOptions o) {
  if (!fs::exists(dd::manifest_path(o.data))) throw dd::InvalidInput("dataset not found: " + o.data);
  const auto dataset = dd::load_dataset(o.data);
  if (dataset.empty()) throw dd::InvalidInput("dataset is empty: " + o.data);
  o.train.master_seed = dd::derive_seed(g.seed, {kStreamTrain});
  o.train.workers = g.workers;
  o.train.sampling = o.sampling == "greedy" ? dd::RolloutMode::Greedy : dd::RolloutMode::Stochastic;
  o.train.surrogate = o.surrogate == "per-step" ? dd::Surrogate::PerStep : dd::Surrogate::TrajectoryReturn;
  const dd::PolicyConfig policy = o.model.config();
  const dd::RewardConfig reward = reward_config(o);

  dd::PolicyParams params;
  if (!o.init.empty()) {
    params = dd::load_checkpoint(o.init);
  } else {
    const auto hidden = parse_int_list(o.hidden);
    if (hidden.size() != 2) throw dd::InvalidInput("--hidden expects two sizes, e.g. 256,128");
    dd::Rng rng(dd::derive_seed(g.seed, {kStreamInit}));
    params = dd::PolicyParams::init({dataset.front().feature_dim(), hidden[0], hidden[1], o.kernel_dim},
                                    dd::LengthMenu(parse_menu(o.menu)), rng);
  }
  if (policy.kind.is_fixed() && !params.menu.contains(policy.kind.fixed_length))
    throw dd::InvalidLength("fixed length " + std::to_string(policy.kind.fixed_length) + " is not in the length menu");
  const ordered_json prov = train_provenance(g, o, params);
  if (!o.save_init.empty()) dd::save_checkpoint(params, o.save_init, prov);

  const std::string log_path = o.log.empty() ? o.out + ".log" : o.log;
  std::ostringstream log;
  log << "# dyseqdpp training log\n# config " << prov.dump() << "\n";
  log << "update\tmean_return\tmean_steps\tgrad_norm" << (o.log_wall_time ? "\twall_seconds" : "") << "\n";
  auto on_update = [&](const dd::TrainLogEntry& e, const dd::PolicyParams& p) {
    log << e.update << '\t' << fmt17(e.mean_return) << '\t' << fmt17(e.mean_steps) << '\t' << fmt17(e.grad_norm);
    if (o.log_wall_time) log << '\t' << fmt17(e.wall_seconds);
    log << '\n';
    if (o.checkpoint_every > 0 && (e.update + 1) % o.checkpoint_every == 0)
      dd::save_checkpoint(p, o.out + ".u" + std::to_string(e.update + 1), prov);
  };
  dd::TrainResult result;
  try {
    result = dd::train(params, dataset, policy, reward, o.train, on_update);
  } catch (...) {
    write_output(log_path, log.str());
    throw;
  }
  write_output(log_path, log.str());
  dd::save_checkpoint(result.params, o.out, prov);
  return kExitOk;
}

// ---------------------------------------------------------------- summarize

struct SummarizeOptions {
  std::string checkpoint;
  VideoSource source;
  ModelOptions model;
  std::string mode = "greedy";
  std::string out;
  std::string dump;
};

int run_summarize(const GlobalOptions& g, const SummarizeOptions& o) {
  const dd::PolicyParams params = dd::load_checkpoint(o.checkpoint);
  const dd::VideoRecord video = o.source.load();
  if (video.feature_dim() != params.feature_dim())
    throw dd::ShapeError("video " + video.id + " has feature dimension " + std::to_string(video.feature_dim()) +
                         " but the checkpoint expects " + std::to_string(params.feature_dim()));
  const dd::PolicyConfig policy = o.model.config();
  dd::Rng rng(dd::derive_seed(g.seed, {kStreamRollout}));
  const dd::Trajectory tau = dd::rollout(params, policy, video.features,
                                         o.mode == "sample" ? dd::RolloutMode::Stochastic : dd::RolloutMode::Greedy, rng);
  std::vector<dd::Segment> segments;
  for (const auto& st : tau.steps) segments.push_back(st.state.segment);

  ordered_json doc;
  doc["format"] = "dyseqdpp-summary";
  ordered_json cfg;
  cfg["command"] = "summarize";
  cfg["seed"] = g.seed;
  cfg["checkpoint"] = o.checkpoint;
  cfg["source"] = o.source.to_json();
  cfg["model"] = o.model.to_json();
  cfg["mode"] = o.mode;
  doc["config"] = cfg;
  doc["video_id"] = video.id;
  doc["num_shots"] = video.num_shots();
  doc["selected"] = tau.summary();
  ordered_json steps = ordered_json::array();
  for (const auto& st : tau.steps) {
    ordered_json s;
    s["segment"] = {st.state.segment.start, st.state.segment.end()};
    s["subset"] = st.action.subset;
    s["next_length"] = st.action.next_length;
    s["log_prob_subset"] = st.log_prob_subset;
    s["log_prob_length"] = st.log_prob_length;
    steps.push_back(s);
  }
  doc["steps"] = steps;
  doc["log_prob"] = tau.log_prob();
  doc["shot_scores"] = dd::shot_scores_from_kernel(params, video.features, segments);
  write_output(o.out, doc.dump(2) + "\n");
  if (!o.dump.empty()) {
    std::ostringstream os;
    dd::write_trajectory_dump(os, tau);
    write_output(o.dump, os.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string summary;
  bool oracle = false;
  VideoSource source;
  std::string protocol = "matching";
  std::string windows = "8,12,16,inf";
  std::string match = "weighted";
  int hamming_threshold = 0;
  double budget = dd::kDefaultBudgetFraction;
  std::string out;
};

ordered_json score_json(const dd::MatchScore& s) {
  ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["matching_size"] = s.size;
  return j;
}

int run_evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
  const dd::VideoRecord video = o.source.load();
  if (video.user_summaries.empty()) throw dd::MissingAnnotation("video " + video.id + " has no user summaries");
  std::vector<std::size_t> selected;
  std::optional<std::vector<double>> shot_scores;
  if (o.oracle) {
    selected = video.oracle();
  } else {
    if (o.summary.empty()) throw dd::InvalidInput("either --summary or --oracle is required");
    if (!fs::is_regular_file(o.summary)) throw dd::InvalidInput("summary not found: " + o.summary);
    std::ifstream in(o.summary, std::ios::binary);
    ordered_json doc;
    try {
      doc = ordered_json::parse(in);
      selected = doc.at("selected").get<std::vector<std::size_t>>();
      if (doc.contains("shot_scores")) shot_scores = doc["shot_scores"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw dd::ParseError(o.summary + ": " + e.what());
    }
  }
  for (std::size_t s : selected)
    if (s >= video.num_shots()) throw dd::ShapeError("summary shot " + std::to_string(s) + " is outside the video");

  ordered_json report;
  report["format"] = "dyseqdpp-evaluation";
  ordered_json cfg;
  cfg["command"] = "evaluate";
  cfg["seed"] = g.seed;
  cfg["summary"] = o.oracle ? ordered_json("oracle") : ordered_json(o.summary);
  cfg["source"] = o.source.to_json();
  cfg["protocol"] = o.protocol;
  report["config"] = cfg;
  report["video_id"] = video.id;
  report["summary_size"] = selected.size();

  if (o.protocol == "matching") {
    if (!video.concepts) throw dd::MissingAnnotation("video " + video.id + " has no concept annotations");
    ordered_json rows = ordered_json::array();
    for (const auto& k : parse_windows(o.windows)) {
      dd::MatchConfig mc{k, o.match == "cardinality" ? dd::MatchConfig::Mode::Cardinality : dd::MatchConfig::Mode::Weighted,
                         o.hamming_threshold};
      std::vector<dd::MatchScore> per_user;
      for (const auto& u : video.user_summaries) per_user.push_back(dd::bipartite_match_f1(selected, u, *video.concepts, mc));
      ordered_json row;
      row["K"] = window_name(k);
      row.update(score_json(dd::average_scores(per_user)));
      rows.push_back(row);
    }
    report["config"]["match"] = o.match;
    report["results"] = rows;
  } else {
    if (!video.scene_boundaries) throw dd::MissingAnnotation("video " + video.id + " has no scene boundaries");
    if (!shot_scores) throw dd::InvalidInput("knapsack protocol needs shot_scores in the summary document");
    if (shot_scores->size() != video.num_shots()) throw dd::ShapeError("shot_scores length differs from the video length");
    const auto shots = dd::knapsack_summary(*shot_scores, *video.scene_boundaries, video.shot_duration_seconds, o.budget);
    report["config"]["budget_fraction"] = o.budget;
    report["knapsack_selected"] = shots;
    report["results"] = score_json(dd::temporal_overlap_f1(shots, video.user_summaries));
  }
  write_output(o.out, report.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyCliOptions {
  std::string level = "full";
  bool inject_asymmetry = false;
};

int run_verify(const GlobalOptions& g, const VerifyCliOptions& o) {
  dd::VerifyOptions opt;
  opt.level = o.level == "quick" ? dd::VerifyLevel::Quick : dd::VerifyLevel::Full;
  opt.seed = dd::derive_seed(g.seed, {kStreamVerify});
  opt.inject_asymmetry = o.inject_asymmetry;
  const auto results = dd::run_verify(opt);
  const dd::SuiteResult* first_failure = nullptr;
  for (const auto& r : results) {
    if (r.skipped)
      std::cout << "SKIP " << r.name << "\n";
    else if (r.passed)
      std::cout << "PASS " << r.name << " (" << r.checks << " checks)\n";
    else
      std::cout << "FAIL " << r.name << ": " << r.failure << "\n";
    if (!r.passed && !first_failure) first_failure = &r;
  }
  if (first_failure) {
    std::cerr << "verification failed: " << first_failure->name << ": " << first_failure->failure << "\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic sequential DPP video summarization"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed for every random stream")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads for rollouts (results do not depend on this)")
      ->check(CLI::PositiveNumber);

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a planted-event synthetic dataset");
  synth->add_option("--out", so.out, "Output dataset directory")->required();
  synth->add_option("--videos", so.videos, "Number of videos")->capture_default_str();
  synth->add_option("--events", so.spec.num_events, "Events per video")->capture_default_str();
  synth->add_option("--event-min", so.spec.event_length_min, "Minimum event length in shots")->capture_default_str();
  synth->add_option("--event-max", so.spec.event_length_max, "Maximum event length in shots")->capture_default_str();
  synth->add_option("--feature-dim", so.spec.feature_dim, "Feature dimension")->capture_default_str();
  synth->add_option("--spread", so.spec.within_event_spread, "Within-event feature spread")->capture_default_str();
  synth->add_option("--separation", so.spec.cross_event_separation, "Distance between event centers")->capture_default_str();
  synth->add_flag("--no-repeat", so.no_repeat, "Never reuse an event cluster later in the video");
  synth->add_option("--repeat-gap", so.spec.repeat_min_gap, "Minimum shots between repeats of one cluster")->capture_default_str();
  synth->add_option("--concept-dim", so.spec.concept_dim, "Concept vector length")->capture_default_str();
  synth->add_option("--shot-duration", so.spec.shot_duration_seconds, "Seconds per shot")->capture_default_str();

  TrainOptions to;
  auto* train = app.add_subcommand("train", "Train a policy with policy-gradient updates");
  train->add_option("--data", to.data, "Training dataset directory or manifest")->required();
  train->add_option("--out", to.out, "Output checkpoint path")->required();
  train->add_option("--log", to.log, "Training log path (default: <out>.log)");
  train->add_option("--init", to.init, "Start from this checkpoint instead of a fresh initialization");
  train->add_option("--save-init", to.save_init, "Also write the initial parameters to this path");
  train->add_option("--menu", to.menu, "Segment length menu: a range lo-hi or a list a,b,c")->capture_default_str();
  train->add_option("--hidden", to.hidden, "Hidden layer sizes of the embedding network")->capture_default_str();
  train->add_option("--kernel-dim", to.kernel_dim, "Rows of the kernel projection")->capture_default_str();
  to.model.add_to(train);
  train->add_option("--updates", to.train.num_updates, "Number of gradient updates")->capture_default_str();
  train->add_option("--lr", to.train.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--trajectories", to.train.num_trajectories, "Trajectories sampled per video per update")->capture_default_str();
  train->add_option("--batch", to.train.batch_size, "Videos per update")->capture_default_str();
  train->add_option("--clip", to.train.clip_norm, "Gradient-norm clip; 0 disables")->capture_default_str();
  train->add_option("--sampling", to.sampling, "Trajectory sampling during training")
      ->check(CLI::IsMember({"stochastic", "greedy"}))
      ->capture_default_str();
  train->add_flag("--oracle-forced", to.train.oracle_forced,
                  "Force subsets to the oracle summary and reward the knapsack-protocol F1");
  train->add_option("--budget", to.train.budget_fraction, "Knapsack budget as a fraction of video duration")->capture_default_str();
  train->add_option("--surrogate", to.surrogate, "Gradient weighting: trajectory (whole return) or per-step")
      ->check(CLI::IsMember({"trajectory", "per-step"}))
      ->capture_default_str();
  train->add_option("--reward-mode", to.reward_mode, "Compare against full or partial user summaries")
      ->check(CLI::IsMember({"full", "partial"}))
      ->capture_default_str();
  train->add_option("--metric", to.metric, "Reward metric")->check(CLI::IsMember({"f1", "precision", "recall"}))->capture_default_str();
  train->add_option("--gamma", to.gamma, "Discount factor in (0, 1); omit for final-step reward only");
  train->add_option("--window", to.window, "Temporal matching window K in shots")->capture_default_str();
  train->add_flag("--no-window", to.no_window, "Disable the temporal matching window");
  train->add_option("--match", to.match, "Matching weights: weighted (1 - hamming/C) or cardinality")
      ->check(CLI::IsMember({"weighted", "cardinality"}))
      ->capture_default_str();
  train->add_option("--hamming-threshold", to.hamming_threshold, "Cardinality matching: edge iff hamming <= threshold");
  train->add_option("--checkpoint-every", to.checkpoint_every, "Also write <out>.u<N> every N updates");
  train->add_flag("--log-wall-time", to.log_wall_time, "Add elapsed wall time to the log (makes it run-dependent)");

  SummarizeOptions sm;
  auto* summarize = app.add_subcommand("summarize", "Summarize one video with a trained policy");
  summarize->add_option("--checkpoint", sm.checkpoint, "Model checkpoint")->required();
  sm.source.add_to(summarize);
  sm.model.add_to(summarize);
  summarize->add_option("--mode", sm.mode, "greedy (MAP subset and length) or sample")
      ->check(CLI::IsMember({"greedy", "sample"}))
      ->capture_default_str();
  summarize->add_option("--out", sm.out, "Output summary document (default: stdout)");
  summarize->add_option("--dump-trajectory", sm.dump, "Also write a per-step text dump");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a summary against the user summaries");
  evaluate->add_option("--summary", ev.summary, "Summary document from `summarize`");
  evaluate->add_flag("--oracle", ev.oracle, "Evaluate the video's oracle summary instead");
  ev.source.add_to(evaluate);
  evaluate->add_option("--protocol", ev.protocol, "matching (concept bipartite matching) or knapsack (scene budget)")
      ->check(CLI::IsMember({"matching", "knapsack"}))
      ->capture_default_str();
  evaluate->add_option("--windows", ev.windows, "Comma-separated matching windows K; inf disables the window")
      ->capture_default_str();
  evaluate->add_option("--match", ev.match, "Matching weights: weighted or cardinality")
      ->check(CLI::IsMember({"weighted", "cardinality"}))
      ->capture_default_str();
  evaluate->add_option("--hamming-threshold", ev.hamming_threshold, "Cardinality matching: edge iff hamming <= threshold");
  evaluate->add_option("--budget", ev.budget, "Knapsack budget as a fraction of video duration")->capture_default_str();
  evaluate->add_option("--out", ev.out, "Output report (default: stdout)");

  VerifyCliOptions vo;
  auto* verify = app.add_subcommand("verify", "Run the brute-force and finite-difference self-checks");
  verify->add_option("--level", vo.level, "quick skips the 10^5-draw statistical tests")
      ->check(CLI::IsMember({"quick", "full"}))
      ->capture_default_str();
  verify->add_flag("--inject-asymmetry", vo.inject_asymmetry, "Test hook: perturb kernel symmetry (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth) return run_synth(g, so);
    if (*train) return run_train(g, to);
    if (*summarize) return run_summarize(g, sm);
    if (*evaluate) return run_evaluate(g, ev);
    if (*verify) return run_verify(g, vo);
  } catch (const dd::MissingAnnotation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingAnnotation;
  } catch (const dd::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIncompatible;
  } catch (const dd::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dd::InvalidLength& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dd::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dd::VersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIncompatible;
  } catch (const dd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid value: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: value out of range: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
