#include "gzipt/app/run_config.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gzipt/common/error.hpp"

namespace gzipt::app {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json clips_json(const data::ClipPoolConfig& c) {
  return {{"clips_per_class", c.clips_per_class},
          {"min_duration", c.min_duration},
          {"max_duration", c.max_duration},
          {"min_f0", c.min_f0},
          {"max_f0", c.max_f0}};
}

data::ClipPoolConfig clips_from_json(const json& j) {
  const data::ClipPoolConfig d;
  data::ClipPoolConfig c;
  c.clips_per_class = j.value("clips_per_class", d.clips_per_class);
  c.min_duration = j.value("min_duration", d.min_duration);
  c.max_duration = j.value("max_duration", d.max_duration);
  c.min_f0 = j.value("min_f0", d.min_f0);
  c.max_f0 = j.value("max_f0", d.max_f0);
  return c;
}

void check_dir(const fs::path& p, const char* what) {
  require(!p.empty(), std::string("paths.") + what + " is empty");
  if (fs::exists(p)) {
    require(fs::is_directory(p), std::string("paths.") + what + ": " + p.string() + " exists and is not a directory");
    return;
  }
  fs::path parent = p.parent_path();
  while (!parent.empty() && !fs::exists(parent)) parent = parent.parent_path();
  require(parent.empty() || fs::is_directory(parent),
          std::string("paths.") + what + ": cannot create " + p.string() + " under " + parent.string());
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.data.n_train >= 1 && c.data.n_test >= 1, "data.n_train and data.n_test must be at least 1");
  const auto& clips = c.data.clips;
  require(clips.clips_per_class >= 1, "data.clips.clips_per_class must be at least 1");
  require(clips.min_duration >= data::kSynthMinDuration && clips.max_duration <= data::kSynthMaxDuration &&
              clips.min_duration <= clips.max_duration,
          "data.clips durations must satisfy 0.5 <= min <= max <= 3.0");
  require(clips.min_f0 >= data::kSynthMinF0 && clips.max_f0 <= data::kSynthMaxF0 && clips.min_f0 <= clips.max_f0,
          "data.clips f0 range must satisfy 60 <= min <= max <= 1200");
  models::validate(c.ipt);
  models::validate(c.onset);
  require(c.train.lr > 0.0, "train.lr must be positive");
  require(c.train.batch >= 1, "train.batch must be at least 1");
  require(c.train.heldout_fraction >= 0.0 && c.train.heldout_fraction < 1.0,
          "train.heldout_fraction must lie in [0, 1)");
  require(c.eval.threshold >= 0.0 && c.eval.threshold <= 1.0, "eval.threshold must lie in [0, 1]");
  require(c.eval.tol >= 0.0, "eval.tol must be non-negative");
}

json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"data", {{"n_train", c.data.n_train}, {"n_test", c.data.n_test}, {"clips", clips_json(c.data.clips)}}},
          {"ipt", c.ipt},
          {"onset", c.onset},
          {"train",
           {{"lr", c.train.lr},
            {"batch", c.train.batch},
            {"ipt_epochs", c.train.ipt_epochs},
            {"onset_epochs", c.train.onset_epochs},
            {"heldout_fraction", c.train.heldout_fraction}}},
          {"eval",
           {{"fusion", c.eval.fusion},
            {"threshold", c.eval.threshold},
            {"min_onset_gap", c.eval.min_onset_gap},
            {"tol", c.eval.tol}}}};
}

RunConfig run_config_from_json(const json& j) {
  require(j.is_object(), "run config must be a JSON object");
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.corpus = p.value("corpus", c.paths.corpus.string());
      c.paths.checkpoints = p.value("checkpoints", c.paths.checkpoints.string());
      c.paths.reports = p.value("reports", c.paths.reports.string());
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.data.n_train = d.value("n_train", c.data.n_train);
      c.data.n_test = d.value("n_test", c.data.n_test);
      if (d.contains("clips")) c.data.clips = clips_from_json(d.at("clips"));
    }
    if (j.contains("ipt")) c.ipt = j.at("ipt").get<models::IptDetectorConfig>();
    if (j.contains("onset")) c.onset = j.at("onset").get<models::OnsetDetectorConfig>();
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.lr = t.value("lr", c.train.lr);
      c.train.batch = t.value("batch", c.train.batch);
      c.train.ipt_epochs = t.value("ipt_epochs", c.train.ipt_epochs);
      c.train.onset_epochs = t.value("onset_epochs", c.train.onset_epochs);
      c.train.heldout_fraction = t.value("heldout_fraction", c.train.heldout_fraction);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval.fusion = e.value("fusion", c.eval.fusion);
      c.eval.threshold = e.value("threshold", c.eval.threshold);
      c.eval.min_onset_gap = e.value("min_onset_gap", c.eval.min_onset_gap);
      c.eval.tol = e.value("tol", c.eval.tol);
    }
  } catch (const json::exception& e) {
    fail(std::string("run config: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(path.string() + ": " + e.what());
  }
  RunConfig c;
  try {
    c = run_config_from_json(j);
  } catch (const ValidationError& e) {
    fail(path.string() + ": " + e.what());
  }
  resolve_paths(c, fs::absolute(path).parent_path());
  return c;
}

void resolve_paths(RunConfig& c, const fs::path& base) {
  for (auto* p : {&c.paths.corpus, &c.paths.checkpoints, &c.paths.reports})
    if (p->is_relative()) *p = (base / *p).lexically_normal();
  check_dir(c.paths.corpus, "corpus");
  check_dir(c.paths.checkpoints, "checkpoints");
  check_dir(c.paths.reports, "reports");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

}  // namespace gzipt::app
