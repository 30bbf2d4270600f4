#include "gzipt/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

#include "gzipt/common/error.hpp"

namespace gzipt::metrics {
namespace {

// Hopcroft-Karp on a left-to-right adjacency list.
class BipartiteMatcher {
 public:
  BipartiteMatcher(std::size_t n_left, std::size_t n_right, std::vector<std::vector<std::size_t>> adj)
      : adj_(std::move(adj)), match_l_(n_left, kNone), match_r_(n_right, kNone), dist_(n_left) {}

  std::size_t run() {
    std::size_t matched = 0;
    while (bfs()) {
      for (std::size_t u = 0; u < match_l_.size(); ++u)
        if (match_l_[u] == kNone && dfs(u)) ++matched;
    }
    return matched;
  }

  const std::vector<std::size_t>& left_matches() const { return match_l_; }
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

 private:
  bool bfs() {
    std::queue<std::size_t> q;
    bool found = false;
    for (std::size_t u = 0; u < match_l_.size(); ++u) {
      if (match_l_[u] == kNone) {
        dist_[u] = 0;
        q.push(u);
      } else {
        dist_[u] = kNone;
      }
    }
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj_[u]) {
        const std::size_t w = match_r_[v];
        if (w == kNone) {
          found = true;
        } else if (dist_[w] == kNone) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(std::size_t u) {
    for (std::size_t v : adj_[u]) {
      const std::size_t w = match_r_[v];
      if (w == kNone || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_l_[u] = v;
        match_r_[v] = u;
        return true;
      }
    }
    dist_[u] = kNone;
    return false;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> match_l_, match_r_, dist_;
};

template <typename A, typename B>
double accuracy(std::span<const A> pred, std::span<const B> truth) {
  require(pred.size() == truth.size(), "frame_accuracy: length mismatch (" + std::to_string(pred.size()) + " vs " +
                                           std::to_string(truth.size()) + ")");
  require(!pred.empty(), "frame_accuracy: empty sequence");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (static_cast<long>(pred[i]) == static_cast<long>(truth[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

NoteScore make_score(double precision, double recall) {
  const double s = precision + recall;
  return {precision, recall, s > 0.0 ? 2.0 * precision * recall / s : 0.0};
}

double frame_accuracy(std::span<const int> pred, std::span<const int> truth) { return accuracy(pred, truth); }
double frame_accuracy(std::span<const int> pred, std::span<const std::uint8_t> truth) {
  return accuracy(pred, truth);
}

bool onsets_within(double a, double b, double tol) {
  const double d = std::round(std::abs(a - b) * 1e4) / 1e4;
  return d <= tol;
}

std::vector<std::pair<std::size_t, std::size_t>> match_notes(std::span<const data::NoteEvent> ref,
                                                             std::span<const data::NoteEvent> est, double tol) {
  std::vector<std::vector<std::size_t>> adj(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i)
    for (std::size_t j = 0; j < est.size(); ++j)
      if (ref[i].technique == est[j].technique && onsets_within(ref[i].onset, est[j].onset, tol)) adj[i].push_back(j);
  BipartiteMatcher m(ref.size(), est.size(), std::move(adj));
  m.run();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (m.left_matches()[i] != BipartiteMatcher::kNone) pairs.emplace_back(i, m.left_matches()[i]);
  return pairs;
}

NoteScore note_prf(std::span<const data::NoteEvent> ref, std::span<const data::NoteEvent> est, double tol) {
  const double m = static_cast<double>(match_notes(ref, est, tol).size());
  const double p = est.empty() ? 0.0 : m / static_cast<double>(est.size());
  const double r = ref.empty() ? 0.0 : m / static_cast<double>(ref.size());
  return make_score(p, r);
}

fusion::FusedResult predict(const DetectorOutput& outputs, const EvalOptions& options) {
  if (!options.fusion) return fusion::framewise_argmax(outputs.ipt_probs);
  auto onsets = fusion::threshold_onsets(outputs.onset_probs, options.threshold);
  if (options.min_onset_gap > 0) onsets = fusion::suppress_close_onsets(onsets, options.min_onset_gap);
  return fusion::decision_fusion(onsets, outputs.ipt_probs);
}

PieceResult evaluate_piece(const Piece& piece, const EvalOptions& options) {
  require(piece.outputs.ipt_probs.cols == piece.ref_frames.size(),
          "evaluate: piece '" + piece.name + "' has " + std::to_string(piece.outputs.ipt_probs.cols) +
              " predicted frames but " + std::to_string(piece.ref_frames.size()) + " reference frames");
  const auto fused = predict(piece.outputs, options);
  const auto classes = fused.frame_classes();
  const auto est = fusion::segments_to_events(fused);
  PieceResult r;
  r.name = piece.name;
  r.frame_accuracy = frame_accuracy(classes, piece.ref_frames);
  r.notes = note_prf(piece.ref_events, est, options.tol);
  r.ref_notes = piece.ref_events.size();
  r.est_notes = est.size();
  return r;
}

EvalReport evaluate_corpus(std::span<const Piece> pieces, const EvalOptions& options) {
  require(!pieces.empty(), "evaluate: empty corpus");
  EvalReport report;
  report.per_piece.resize(pieces.size());
  const long n = static_cast<long>(pieces.size());
  std::vector<std::string> errors(pieces.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      report.per_piece[i] = evaluate_piece(pieces[i], options);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) fail(e);
  double acc = 0.0, p = 0.0, r = 0.0, f = 0.0;
  for (const auto& piece : report.per_piece) {
    acc += piece.frame_accuracy;
    p += piece.notes.precision;
    r += piece.notes.recall;
    f += piece.notes.f1;
  }
  const double k = static_cast<double>(pieces.size());
  report.mean_frame_accuracy = acc / k;
  report.mean_note_score = {p / k, r / k, f / k};
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& p : report.per_piece)
    pieces.push_back({{"name", p.name},
                      {"frame_accuracy", p.frame_accuracy},
                      {"precision", p.notes.precision},
                      {"recall", p.notes.recall},
                      {"f1", p.notes.f1},
                      {"ref_notes", p.ref_notes},
                      {"est_notes", p.est_notes}});
  return {{"pieces", report.per_piece.size()},
          {"mean_frame_accuracy", report.mean_frame_accuracy},
          {"mean_precision", report.mean_note_score.precision},
          {"mean_recall", report.mean_note_score.recall},
          {"mean_f1", report.mean_note_score.f1},
          {"per_piece", std::move(pieces)}};
}

std::string summary_csv(const EvalReport& report, const std::string& label) {
  char row[256];
  std::snprintf(row, sizeof row, "%s,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), report.mean_frame_accuracy,
                report.mean_note_score.precision, report.mean_note_score.recall, report.mean_note_score.f1);
  return std::string("system,frame_accuracy,note_precision,note_recall,note_f1\n") + row;
}

}  // namespace gzipt::metrics
