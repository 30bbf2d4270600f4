#include "gzipt/fusion/fusion.hpp"

#include <algorithm>

#include "gzipt/common/error.hpp"

namespace gzipt::fusion {
namespace {

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t j = 1; j < v.size(); ++j)
    if (v[j] > v[best]) best = static_cast<int>(j);
  return best;
}

void close_segment(FusedResult& r, std::size_t start, std::size_t end, int cls) {
  std::fill(r.one_hot.begin() + static_cast<std::ptrdiff_t>(cls * r.n_frames + start),
            r.one_hot.begin() + static_cast<std::ptrdiff_t>(cls * r.n_frames + end + 1), std::uint8_t{1});
  r.segments.push_back({start, end, cls});
}

}  // namespace

std::vector<int> FusedResult::frame_classes() const {
  std::vector<int> out(n_frames, 0);
  for (const auto& s : segments) std::fill(out.begin() + s.start, out.begin() + s.end + 1, s.class_id);
  return out;
}

std::vector<std::uint8_t> threshold_onsets(std::span<const float> probs, double theta) {
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = static_cast<double>(probs[i]) >= theta ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> suppress_close_onsets(std::span<const std::uint8_t> onsets, std::size_t min_gap) {
  std::vector<std::uint8_t> out(onsets.begin(), onsets.end());
  if (min_gap == 0) return out;
  bool have_last = false;
  std::size_t last = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i]) continue;
    if (have_last && i - last <= min_gap) {
      out[i] = 0;
    } else {
      have_last = true;
      last = i;
    }
  }
  return out;
}

FusedResult decision_fusion(std::span<const std::uint8_t> onsets, const ProbMatrix& ipt) {
  const std::size_t n = ipt.rows, t = ipt.cols;
  require(t >= 1 && n >= 1, "decision_fusion: empty input");
  require(onsets.size() == t, "decision_fusion: onset vector has " + std::to_string(onsets.size()) +
                                  " frames, IPT matrix has " + std::to_string(t));
  FusedResult r;
  r.n_classes = n;
  r.n_frames = t;
  r.one_hot.assign(n * t, 0);

  std::vector<double> votes(n, 0.0);
  std::size_t begin = 0;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < n; ++j) votes[j] += ipt.at(j, i);
    if (i + 1 == t || onsets[i + 1] == 1) {
      close_segment(r, begin, i, argmax_lowest(votes));
      std::fill(votes.begin(), votes.end(), 0.0);
      begin = i + 1;
    }
  }
  return r;
}

FusedResult framewise_argmax(const ProbMatrix& ipt) {
  const std::size_t n = ipt.rows, t = ipt.cols;
  require(t >= 1 && n >= 1, "framewise_argmax: empty input");
  FusedResult r;
  r.n_classes = n;
  r.n_frames = t;
  r.one_hot.assign(n * t, 0);
  std::vector<double> column(n);
  std::size_t begin = 0;
  int current = -1;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < n; ++j) column[j] = ipt.at(j, i);
    const int cls = argmax_lowest(column);
    if (i > 0 && cls != current) {
      close_segment(r, begin, i - 1, current);
      begin = i;
    }
    current = cls;
  }
  close_segment(r, begin, t - 1, current);
  return r;
}

std::vector<data::NoteEvent> segments_to_events(const FusedResult& result, double frame_duration) {
  std::vector<data::NoteEvent> events;
  events.reserve(result.segments.size());
  for (const auto& s : result.segments)
    events.push_back({static_cast<double>(s.start) * frame_duration, static_cast<double>(s.end + 1) * frame_duration,
                      data::technique_from_id(s.class_id)});
  return events;
}

}  // namespace gzipt::fusion
