#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gzipt/app/commands.hpp"
#include "gzipt/common/error.hpp"
#include "gzipt/data/corpus_io.hpp"

namespace fs = std::filesystem;
using namespace gzipt;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<double> threshold;
  std::string corpus, checkpoints, reports;
  bool no_fusion = false;
  bool no_skip = false;
  bool no_multi_shape = false;
  bool cnn_ipt = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration JSON");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--corpus", o.corpus, "Corpus directory");
  cmd->add_option("--checkpoints", o.checkpoints, "Checkpoint directory");
  cmd->add_option("--reports", o.reports, "Report directory");
  cmd->add_flag("--no-fusion", o.no_fusion, "Score per-frame arg-max instead of onset voting");
  cmd->add_flag("--no-skip", o.no_skip, "Drop the IPT decoder's skip connection");
  cmd->add_flag("--no-multi-shape", o.no_multi_shape, "Use one 3x3 first layer in the onset detector");
  cmd->add_option("--beta", o.beta, "Onset loss positive-class weight, in (0, 2)");
  cmd->add_flag("--cnn-ipt", o.cnn_ipt, "Use the onset CNN topology as the IPT detector");
  cmd->add_option("--threshold", o.threshold, "Onset probability threshold");
}

app::RunConfig make_config(const Overrides& o) {
  app::RunConfig cfg = o.config.empty() ? app::RunConfig{} : app::load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.beta) cfg.onset.beta = *o.beta;
  if (o.threshold) cfg.eval.threshold = *o.threshold;
  if (o.no_fusion) cfg.eval.fusion = false;
  if (o.no_skip) cfg.ipt.skip_connection = false;
  if (o.no_multi_shape) cfg.onset.multi_shape = false;
  if (o.cnn_ipt) cfg.ipt.cnn_topology = true;
  if (!o.corpus.empty()) cfg.paths.corpus = o.corpus;
  if (!o.checkpoints.empty()) cfg.paths.checkpoints = o.checkpoints;
  if (!o.reports.empty()) cfg.paths.reports = o.reports;
  app::resolve_paths(cfg, fs::current_path());
  app::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Guzheng playing-technique detection: data, training, evaluation and inference"};
  cli.require_subcommand(1);
  Overrides o;

  auto* generate = cli.add_subcommand("generate", "Synthesise the train and test corpus");
  add_common(generate, o);

  auto* train = cli.add_subcommand("train", "Train a detector");
  add_common(train, o);
  std::string detector = "both";
  train->add_option("--detector", detector, "ipt, onset or both")->check(CLI::IsMember({"ipt", "onset", "both"}));
  bool quiet = false;
  train->add_flag("--quiet", quiet, "Do not print per-epoch losses");

  auto* eval = cli.add_subcommand("eval", "Score the test split");
  add_common(eval, o);

  auto* infer = cli.add_subcommand("infer", "Detect techniques in a recording");
  add_common(infer, o);
  std::string wav, out, probs_dir;
  infer->add_option("audio", wav, "44.1 kHz WAV file")->required();
  infer->add_option("-o,--out", out, "Events JSONL (stdout when omitted)");
  infer->add_option("--probs-dir", probs_dir, "Also write per-frame probabilities here");

  auto* fuse = cli.add_subcommand("fuse", "Fuse stored per-frame probabilities into events");
  add_common(fuse, o);
  std::string onset_file, ipt_file;
  fuse->add_option("onset_probs", onset_file, "Onset probability JSONL")->required();
  fuse->add_option("ipt_probs", ipt_file, "IPT probability JSONL")->required();
  fuse->add_option("-o,--out", out, "Events JSONL (stdout when omitted)");

  auto* visualize = cli.add_subcommand("visualize", "Render detector outputs as a PNG");
  add_common(visualize, o);
  std::string png, labels;
  visualize->add_option("audio", wav, "44.1 kHz WAV file")->required();
  visualize->add_option("png", png, "Output image")->required();
  visualize->add_option("--labels", labels, "Target labels (.labels.bin or .events.jsonl)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = make_config(o);
    auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
    if (*generate) {
      app::cmd_generate(cfg);
      std::cerr << "wrote corpus to " << cfg.paths.corpus.string() << '\n';
    } else if (*train) {
      if (detector != "onset") app::cmd_train(cfg, models::DetectorKind::ipt, !quiet);
      if (detector != "ipt") app::cmd_train(cfg, models::DetectorKind::onset, !quiet);
    } else if (*eval) {
      const auto report = app::cmd_eval(cfg);
      std::cout << "frame_accuracy " << report.mean_frame_accuracy << "\nnote_precision "
                << report.mean_note_score.precision << "\nnote_recall " << report.mean_note_score.recall
                << "\nnote_f1 " << report.mean_note_score.f1 << '\n';
    } else if (*infer) {
      const auto events = app::cmd_infer(cfg, wav, opt_path(out), opt_path(probs_dir));
      if (out.empty()) std::cout << data::events_to_jsonl(events);
    } else if (*fuse) {
      const auto events = app::cmd_fuse(onset_file, ipt_file, opt_path(out), cfg.eval);
      if (out.empty()) std::cout << data::events_to_jsonl(events);
    } else if (*visualize) {
      const int panels = app::cmd_visualize(cfg, wav, png, opt_path(labels));
      std::cerr << "wrote " << panels << " panels to " << png << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
