#include "gzipt/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gzipt/app/figure.hpp"
#include "gzipt/common/error.hpp"
#include "gzipt/data/corpus_io.hpp"
#include "gzipt/dsp/melspec.hpp"
#include "gzipt/dsp/wav.hpp"
#include "gzipt/fusion/fusion.hpp"

namespace gzipt::app {
namespace fs = std::filesystem;
using models::DetectorKind;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot write " + path.string());
  f << text;
  require(f.good(), "write failed: " + path.string());
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<models::TrainingItem> training_items(std::span<const data::StoredSequence> split) {
  std::vector<models::TrainingItem> items(split.size());
  const long n = static_cast<long>(split.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& seq = split[i].sequence;
    items[i] = {models::model_input(dsp::log_mel(seq.audio)), seq.onset_labels, seq.ipt_labels};
  }
  return items;
}

std::uint64_t training_seed(const RunConfig& cfg, DetectorKind kind) {
  return fnv1a64(std::to_string(cfg.seed) + "/train/" + models::to_string(kind));
}

models::Detector load_checked(const fs::path& path, DetectorKind kind) {
  require(fs::exists(path), "missing checkpoint: " + path.string());
  auto loaded = models::load_detector(path);
  require(loaded.detector.kind() == kind,
          path.string() + ": expected a " + models::to_string(kind) + " checkpoint, found " +
              models::to_string(loaded.detector.kind()));
  return std::move(loaded.detector);
}

}  // namespace

fs::path train_dir(const RunConfig& cfg) { return cfg.paths.corpus / "train"; }
fs::path test_dir(const RunConfig& cfg) { return cfg.paths.corpus / "test"; }

fs::path checkpoint_path(const RunConfig& cfg, DetectorKind kind) {
  return cfg.paths.checkpoints / (models::to_string(kind) + ".gzck");
}

fs::path loss_log_path(const RunConfig& cfg, DetectorKind kind) {
  return cfg.paths.checkpoints / (models::to_string(kind) + "_loss.csv");
}

fs::path report_path(const RunConfig& cfg) {
  return cfg.paths.reports / (cfg.eval.fusion ? "report.json" : "report_no_fusion.json");
}

std::string provenance(const RunConfig& cfg) {
  return "seed=" + std::to_string(cfg.seed) + " config=" + config_hash(cfg);
}

void cmd_generate(const RunConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  Rng pool_rng = rng.fork();
  Rng train_rng = rng.fork();
  Rng test_rng = rng.fork();
  const auto pool = data::make_clip_pool(cfg.data.clips, pool_rng);
  const auto train = data::generate_split(pool, cfg.data.n_train, data::SplitMode::train, train_rng);
  const auto test = data::generate_split(pool, cfg.data.n_test, data::SplitMode::test, test_rng);

  const std::string prov = provenance(cfg);
  data::write_clip_corpus(cfg.paths.corpus / "clips", pool, prov);
  data::write_split(train_dir(cfg), train, prov);
  data::write_split(test_dir(cfg), test, prov);
  const json info = {{"seed", cfg.seed},
                     {"config_hash", config_hash(cfg)},
                     {"clips", pool.size()},
                     {"train", train.size()},
                     {"test", test.size()}};
  write_text(cfg.paths.corpus / "corpus.json", info.dump(2) + "\n");
}

models::TrainResult cmd_train(const RunConfig& cfg, DetectorKind kind, bool verbose) {
  validate(cfg);
  require(fs::exists(train_dir(cfg) / "manifest.jsonl"), "no train split at " + train_dir(cfg).string());
  const auto split = data::read_split(train_dir(cfg));
  auto items = training_items(split);
  std::size_t n_heldout = static_cast<std::size_t>(std::floor(cfg.train.heldout_fraction * double(items.size())));
  if (n_heldout >= items.size()) n_heldout = items.size() - 1;
  const std::span<const models::TrainingItem> all(items);
  const auto train = all.first(items.size() - n_heldout);
  const auto heldout = all.last(n_heldout);

  auto det = kind == DetectorKind::ipt ? models::Detector::ipt(cfg.ipt) : models::Detector::onset(cfg.onset);
  models::TrainConfig tc;
  tc.lr = cfg.train.lr;
  tc.batch = cfg.train.batch;
  tc.epochs = kind == DetectorKind::ipt ? cfg.train.ipt_epochs : cfg.train.onset_epochs;
  tc.seed = training_seed(cfg, kind);

  std::string csv = "# " + provenance(cfg) + " detector=" + models::to_string(kind);
  if (kind == DetectorKind::onset) {
    char beta[32];
    std::snprintf(beta, sizeof beta, " beta=%g", cfg.onset.beta);
    csv += beta;
  }
  csv += "\nepoch,train_loss,heldout_loss\n";
  auto result = models::train_detector(det, train, heldout, tc, [&](const models::EpochLog& e) {
    char row[96];
    if (heldout.empty())
      std::snprintf(row, sizeof row, "%zu,%.8f,\n", e.epoch, e.train_loss);
    else
      std::snprintf(row, sizeof row, "%zu,%.8f,%.8f\n", e.epoch, e.train_loss, e.heldout_loss);
    csv += row;
    if (verbose) std::cerr << models::to_string(kind) << " epoch " << e.epoch << " loss " << e.train_loss << '\n';
  });

  json extra = {{"seed", cfg.seed},
                {"config_hash", config_hash(cfg)},
                {"train",
                 {{"lr", tc.lr},
                  {"batch", tc.batch},
                  {"epochs", tc.epochs},
                  {"steps", result.steps},
                  {"sequences", train.size()},
                  {"heldout", heldout.size()}}}};
  if (kind == DetectorKind::onset) extra["beta"] = cfg.onset.beta;
  fs::create_directories(cfg.paths.checkpoints);
  models::save_detector(checkpoint_path(cfg, kind), det, extra);
  write_text(loss_log_path(cfg, kind), csv);
  return result;
}

LoadedModels load_models(const RunConfig& cfg) {
  return {load_checked(checkpoint_path(cfg, DetectorKind::ipt), DetectorKind::ipt),
          load_checked(checkpoint_path(cfg, DetectorKind::onset), DetectorKind::onset)};
}

DetectorOutput run_detectors(const models::Detector& ipt, const models::Detector& onset,
                             const dsp::AudioBuffer& audio) {
  const auto spec = dsp::log_mel(audio);
  require(spec.n_frames >= 1, "audio shorter than one 0.05 s frame");
  const std::vector<nn::Tensor> batch{models::model_input(spec)};
  DetectorOutput out;
  out.ipt_probs = std::move(models::ipt_forward(ipt, batch)[0]);
  out.onset_probs = std::move(models::onset_forward(onset, batch)[0]);
  return out;
}

metrics::EvalReport cmd_eval(const RunConfig& cfg) {
  validate(cfg);
  const auto nets = load_models(cfg);
  require(fs::exists(test_dir(cfg) / "manifest.jsonl"), "no test split at " + test_dir(cfg).string());
  const auto split = data::read_split(test_dir(cfg));
  std::vector<metrics::Piece> pieces(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& seq = split[i].sequence;
    pieces[i].name = split[i].stem;
    pieces[i].ref_events = seq.events;
    pieces[i].ref_frames = seq.ipt_labels;
    pieces[i].outputs = run_detectors(nets.ipt, nets.onset, seq.audio);
  }
  const auto report = metrics::evaluate_corpus(pieces, cfg.eval);

  json j = metrics::report_to_json(report);
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["options"] = {{"fusion", cfg.eval.fusion},
                  {"threshold", cfg.eval.threshold},
                  {"min_onset_gap", cfg.eval.min_onset_gap},
                  {"tol", cfg.eval.tol}};
  const fs::path path = report_path(cfg);
  write_text(path, j.dump(2) + "\n");
  fs::path csv_path = path;
  csv_path.replace_extension(".csv");
  write_text(csv_path, "# " + provenance(cfg) + "\n" +
                           metrics::summary_csv(report, cfg.eval.fusion ? "fused" : "framewise_argmax"));
  return report;
}

std::vector<data::NoteEvent> cmd_infer(const RunConfig& cfg, const fs::path& wav, const std::optional<fs::path>& out,
                                       const std::optional<fs::path>& probs_dir) {
  validate(cfg);
  const auto nets = load_models(cfg);
  const auto audio = dsp::read_wav(wav);
  const auto outputs = run_detectors(nets.ipt, nets.onset, audio);
  const auto events = fusion::segments_to_events(metrics::predict(outputs, cfg.eval));
  if (out) write_text(*out, data::events_to_jsonl(events));
  if (probs_dir) {
    fs::create_directories(*probs_dir);
    write_onset_probs(*probs_dir / "onset.jsonl", outputs.onset_probs);
    write_ipt_probs(*probs_dir / "ipt.jsonl", outputs.ipt_probs);
  }
  return events;
}

std::vector<data::NoteEvent> cmd_fuse(const fs::path& onset_probs, const fs::path& ipt_probs,
                                      const std::optional<fs::path>& out, const metrics::EvalOptions& options) {
  DetectorOutput outputs;
  outputs.onset_probs = read_onset_probs(onset_probs);
  outputs.ipt_probs = read_ipt_probs(ipt_probs);
  require(outputs.onset_probs.size() == outputs.ipt_probs.cols,
          "fuse: " + onset_probs.string() + " has " + std::to_string(outputs.onset_probs.size()) + " frames, " +
              ipt_probs.string() + " has " + std::to_string(outputs.ipt_probs.cols));
  const auto events = fusion::segments_to_events(metrics::predict(outputs, options));
  if (out) write_text(*out, data::events_to_jsonl(events));
  return events;
}

int cmd_visualize(const RunConfig& cfg, const fs::path& wav, const fs::path& png,
                  const std::optional<fs::path>& labels) {
  validate(cfg);
  const auto nets = load_models(cfg);
  const auto audio = dsp::read_wav(wav);
  const auto spec = dsp::log_mel(audio);
  const auto outputs = run_detectors(nets.ipt, nets.onset, audio);

  FigureInput input;
  input.spectrogram = &spec;
  input.onsets = fusion::threshold_onsets(outputs.onset_probs, cfg.eval.threshold);
  input.raw = fusion::framewise_argmax(outputs.ipt_probs).frame_classes();
  metrics::EvalOptions fused = cfg.eval;
  fused.fusion = true;
  input.fused = metrics::predict(outputs, fused).frame_classes();
  if (labels) {
    const std::size_t t = spec.n_frames;
    std::vector<std::uint8_t> target;
    if (labels->extension() == ".bin") {
      target = data::read_labels_bin(*labels).ipt;
    } else {
      const auto events = data::read_events_jsonl(*labels);
      target = data::quantize_labels(events, t).ipt;
    }
    require(target.size() == t, labels->string() + ": " + std::to_string(target.size()) +
                                    " label frames, audio has " + std::to_string(t));
    input.target.emplace(target.begin(), target.end());
  }
  const Figure fig = render_figure(input);
  write_png(png, fig.image,
            {{"gzipt:seed", std::to_string(cfg.seed)},
             {"gzipt:config_hash", config_hash(cfg)},
             {"gzipt:panels", std::to_string(fig.panels)}});
  return fig.panels;
}

void write_onset_probs(const fs::path& path, std::span<const float> probs) {
  std::string text;
  for (std::size_t i = 0; i < probs.size(); ++i) text += json{{"frame", i}, {"p", probs[i]}}.dump() + "\n";
  write_text(path, text);
}

std::vector<float> read_onset_probs(const fs::path& path) {
  std::vector<float> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      require(j.at("frame").get<std::size_t>() == out.size(), path.string() + ": frames out of order");
      const float p = j.at("p").get<float>();
      require(p >= 0.0f && p <= 1.0f, path.string() + ": probability outside [0, 1]");
      out.push_back(p);
    } catch (const json::exception& e) {
      fail(path.string() + ": " + e.what());
    }
  }
  require(!out.empty(), path.string() + ": no frames");
  return out;
}

void write_ipt_probs(const fs::path& path, const ProbMatrix& probs) {
  std::string text;
  std::vector<float> column(probs.rows);
  for (std::size_t t = 0; t < probs.cols; ++t) {
    for (std::size_t c = 0; c < probs.rows; ++c) column[c] = probs.at(c, t);
    text += json{{"frame", t}, {"probs", column}}.dump() + "\n";
  }
  write_text(path, text);
}

ProbMatrix read_ipt_probs(const fs::path& path) {
  std::vector<std::vector<float>> columns;
  for (const auto& j : read_jsonl(path)) {
    try {
      require(j.at("frame").get<std::size_t>() == columns.size(), path.string() + ": frames out of order");
      columns.push_back(j.at("probs").get<std::vector<float>>());
    } catch (const json::exception& e) {
      fail(path.string() + ": " + e.what());
    }
  }
  require(!columns.empty(), path.string() + ": no frames");
  const std::size_t n = columns.front().size();
  require(n >= 1, path.string() + ": empty probability vector");
  ProbMatrix m(n, columns.size());
  for (std::size_t t = 0; t < columns.size(); ++t) {
    require(columns[t].size() == n, path.string() + ": frame " + std::to_string(t) + " has a different class count");
    for (std::size_t c = 0; c < n; ++c) m.at(c, t) = columns[t][c];
  }
  return m;
}

}  // namespace gzipt::app
