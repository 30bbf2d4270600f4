#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace gzipt::data {

// Ids are stable across checkpoints, label files and reports.
enum class Technique : std::uint8_t {
  vibrato = 0,
  up_portamento = 1,
  down_portamento = 2,
  return_portamento = 3,
  glissando = 4,
  tremolo = 5,
  harmonic = 6,
  plucks = 7,
};

inline constexpr int kNumTechniques = 8;

inline constexpr std::array<std::string_view, kNumTechniques> kTechniqueNames = {
    "vibrato", "up_portamento", "down_portamento", "return_portamento",
    "glissando", "tremolo", "harmonic", "plucks",
};

inline constexpr int id(Technique t) { return static_cast<int>(t); }
inline constexpr std::string_view name(Technique t) { return kTechniqueNames[id(t)]; }

// Accepts a valid id; throws ValidationError otherwise.
Technique technique_from_id(int id);
// Accepts a canonical name or a decimal id.
Technique parse_technique(std::string_view text);

}  // namespace gzipt::data
