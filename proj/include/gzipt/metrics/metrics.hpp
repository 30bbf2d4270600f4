#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gzipt/common/prob_matrix.hpp"
#include "gzipt/data/events.hpp"
#include "gzipt/fusion/fusion.hpp"

namespace gzipt::metrics {

inline constexpr double kOnsetTolerance = 0.05;

struct NoteScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const NoteScore&, const NoteScore&) = default;
};

// Harmonic mean, 0 when both are 0.
NoteScore make_score(double precision, double recall);

double frame_accuracy(std::span<const int> pred, std::span<const int> truth);
double frame_accuracy(std::span<const int> pred, std::span<const std::uint8_t> truth);

// True when |a - b|, rounded to 4 decimals, is within tol.
bool onsets_within(double a, double b, double tol = kOnsetTolerance);

// Maximum matching between reference and estimated notes; a pair is
// admissible when the onsets are within tolerance and the techniques agree.
// Offsets are ignored. Returns (ref index, est index) pairs sorted by ref.
std::vector<std::pair<std::size_t, std::size_t>> match_notes(std::span<const data::NoteEvent> ref,
                                                             std::span<const data::NoteEvent> est,
                                                             double tol = kOnsetTolerance);

NoteScore note_prf(std::span<const data::NoteEvent> ref, std::span<const data::NoteEvent> est,
                   double tol = kOnsetTolerance);

struct Piece {
  std::string name;
  std::vector<data::NoteEvent> ref_events;
  std::vector<std::uint8_t> ref_frames;  // technique id per frame
  DetectorOutput outputs;
};

struct EvalOptions {
  bool fusion = true;  // off: per-frame arg-max runs become the notes
  double threshold = fusion::kDefaultThreshold;
  std::size_t min_onset_gap = 0;
  double tol = kOnsetTolerance;
};

struct PieceResult {
  std::string name;
  double frame_accuracy = 0.0;
  NoteScore notes;
  std::size_t ref_notes = 0;
  std::size_t est_notes = 0;
};

struct EvalReport {
  std::vector<PieceResult> per_piece;
  double mean_frame_accuracy = 0.0;
  NoteScore mean_note_score;  // arithmetic means of per-piece P, R and F1
};

// Fused (or arg-max) segmentation of one piece's detector outputs.
fusion::FusedResult predict(const DetectorOutput& outputs, const EvalOptions& options);

PieceResult evaluate_piece(const Piece& piece, const EvalOptions& options);

// Scores every piece (in parallel) and averages without length weighting.
EvalReport evaluate_corpus(std::span<const Piece> pieces, const EvalOptions& options);

nlohmann::json report_to_json(const EvalReport& report);
// Header plus one summary row: frame accuracy, note precision, recall, F1.
std::string summary_csv(const EvalReport& report, const std::string& label);

}  // namespace gzipt::metrics
