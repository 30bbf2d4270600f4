#include "gzipt/dsp/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "gzipt/common/error.hpp"

namespace gzipt::dsp {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load(const std::vector<char>& bytes, std::size_t at) {
  T v;
  std::memcpy(&v, bytes.data() + at, sizeof(T));
  return v;
}

template <typename T>
void put(std::string& out, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  out.append(raw, sizeof(T));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          where + "not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_at = 0, data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.data() + pos, 4);
    const std::size_t len = load<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    require(body + len <= bytes.size() || id == "data", where + "truncated chunk " + id);
    if (id == "fmt ") {
      require(len >= 16, where + "short fmt chunk");
      format = load<std::uint16_t>(bytes, body);
      channels = load<std::uint16_t>(bytes, body + 2);
      rate = load<std::uint32_t>(bytes, body + 4);
      bits = load<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) {
        require(len >= 26, where + "short extensible fmt chunk");
        format = load<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_at = body;
      data_len = std::min(len, bytes.size() - body);
      have_data = true;
    }
    pos = body + len + (len & 1u);
  }
  require(have_fmt && have_data, where + "missing fmt or data chunk");
  require(channels >= 1, where + "zero channels");
  require(rate == static_cast<std::uint32_t>(kSampleRate),
          where + "sample rate " + std::to_string(rate) + " Hz is not supported (need 44100, no resampling)");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  require(pcm16 || f32, where + "unsupported encoding (format " + std::to_string(format) + ", " +
                            std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float");

  const std::size_t width = bits / 8;
  const std::size_t n = data_len / (width * channels);
  AudioBuffer audio;
  audio.sample_rate = kSampleRate;
  audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_at + (i * channels + c) * width;
      acc += pcm16 ? load<std::int16_t>(bytes, at) / 32768.0 : static_cast<double>(load<float>(bytes, at));
    }
    audio.samples[i] = static_cast<float>(acc / channels);
  }
  validate(audio);
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding,
               const std::string& comment) {
  validate(audio);
  const bool pcm16 = encoding == WavEncoding::pcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * (bits / 8));

  std::string info;
  if (!comment.empty()) {
    std::string text = comment;
    text.push_back('\0');
    if (text.size() & 1u) text.push_back('\0');
    info = "INFO";
    info += "ICMT";
    put<std::uint32_t>(info, static_cast<std::uint32_t>(text.size()));
    info += text;
  }

  std::string out;
  out.reserve(64 + info.size() + data_len);
  out += "RIFF";
  put<std::uint32_t>(out, 0);  // patched below
  out += "WAVE";
  out += "fmt ";
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, pcm16 ? kFormatPcm : kFormatFloat);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, kSampleRate);
  put<std::uint32_t>(out, kSampleRate * (bits / 8));
  put<std::uint16_t>(out, bits / 8);
  put<std::uint16_t>(out, bits);
  if (!info.empty()) {
    out += "LIST";
    put<std::uint32_t>(out, static_cast<std::uint32_t>(info.size()));
    out += info;
  }
  out += "data";
  put<std::uint32_t>(out, data_len);
  for (float s : audio.samples) {
    if (pcm16) {
      const double scaled = std::clamp(std::round(static_cast<double>(s) * 32768.0), -32768.0, 32767.0);
      put<std::int16_t>(out, static_cast<std::int16_t>(scaled));
    } else {
      put<float>(out, s);
    }
  }
  const std::uint32_t riff_len = static_cast<std::uint32_t>(out.size() - 8);
  std::memcpy(out.data() + 4, &riff_len, 4);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(static_cast<bool>(f), "write failed: " + path.string());
}

}  // namespace gzipt::dsp
