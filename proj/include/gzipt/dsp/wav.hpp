#pragma once

#include <filesystem>
#include <string>

#include "gzipt/dsp/audio.hpp"

namespace gzipt::dsp {

enum class WavEncoding { pcm16, float32 };

// Reads RIFF/WAVE with 16-bit PCM or 32-bit float payloads (plain or
// WAVE_FORMAT_EXTENSIBLE). Multi-channel input is averaged to mono. Anything
// other than 44100 Hz is rejected; no resampling happens here.
AudioBuffer read_wav(const std::filesystem::path& path);

// Writes a mono file. `comment`, when non-empty, is stored in a LIST/INFO ICMT
// chunk, which readers that do not know it skip.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavEncoding encoding = WavEncoding::pcm16, const std::string& comment = {});

}  // namespace gzipt::dsp
