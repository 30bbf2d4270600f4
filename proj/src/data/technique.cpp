#include "gzipt/data/technique.hpp"

#include <charconv>
#include <cmath>

#include "gzipt/common/error.hpp"
#include "gzipt/data/events.hpp"

namespace gzipt::data {

Technique technique_from_id(int value) {
  require(value >= 0 && value < kNumTechniques, "invalid technique id " + std::to_string(value));
  return static_cast<Technique>(value);
}

Technique parse_technique(std::string_view text) {
  for (int i = 0; i < kNumTechniques; ++i)
    if (kTechniqueNames[i] == text) return static_cast<Technique>(i);
  int value = -1;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc{} && ptr == text.data() + text.size(), "unknown technique '" + std::string(text) + "'");
  return technique_from_id(value);
}

std::size_t frame_of(double seconds, double frame_duration) {
  require(seconds >= 0.0, "negative time");
  // Nudge so onsets placed exactly on a frame edge (e.g. 6.95 s) land on it.
  return static_cast<std::size_t>(std::floor(seconds / frame_duration + 1e-9));
}

void validate_events(std::span<const NoteEvent> events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    require(e.onset >= 0.0 && e.onset < e.offset, "event " + std::to_string(i) + ": need 0 <= onset < offset");
    if (i > 0) {
      require(events[i - 1].onset < e.onset, "events not sorted at " + std::to_string(i));
      require(events[i - 1].offset <= e.onset + 1e-9, "events " + std::to_string(i - 1) + " and " +
                                                          std::to_string(i) + " overlap");
    }
  }
}

}  // namespace gzipt::data
