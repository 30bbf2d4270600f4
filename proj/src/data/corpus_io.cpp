#include "gzipt/data/corpus_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "gzipt/common/error.hpp"
#include "gzipt/dsp/wav.hpp"

namespace gzipt::data {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << text;
}

Technique technique_field(const json& j) {
  const auto& t = j.at("technique");
  return t.is_number_integer() ? technique_from_id(t.get<int>()) : parse_technique(t.get<std::string>());
}

std::string stem_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%05zu", i);
  return buf;
}

}  // namespace

std::string events_to_jsonl(std::span<const NoteEvent> events) {
  std::string out;
  for (const auto& e : events) {
    json j = {{"onset_s", e.onset}, {"offset_s", e.offset}, {"technique", std::string(name(e.technique))}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_events_jsonl(const fs::path& path, std::span<const NoteEvent> events) {
  write_text(path, events_to_jsonl(events));
}

std::vector<NoteEvent> read_events_jsonl(const fs::path& path) {
  std::vector<NoteEvent> events;
  for (const auto& j : read_jsonl(path)) {
    try {
      events.push_back({j.at("onset_s").get<double>(), j.at("offset_s").get<double>(), technique_field(j)});
    } catch (const json::exception& e) {
      fail(path.string() + ": " + e.what());
    }
  }
  validate_events(events);
  return events;
}

void write_labels_bin(const fs::path& path, const FrameLabels& labels) {
  require(labels.onset.size() == labels.ipt.size(), "label length mismatch");
  const auto n = static_cast<std::uint32_t>(labels.onset.size());
  std::string out(4, '\0');
  std::memcpy(out.data(), &n, 4);  // host is little-endian (checked in wav.cpp)
  out.append(reinterpret_cast<const char*>(labels.onset.data()), n);
  out.append(reinterpret_cast<const char*>(labels.ipt.data()), n);
  write_text(path, out);
}

FrameLabels read_labels_bin(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(bytes.size() >= 4, path.string() + ": truncated label file");
  std::uint32_t n = 0;
  std::memcpy(&n, bytes.data(), 4);
  require(bytes.size() == 4 + 2 * static_cast<std::size_t>(n), path.string() + ": label file size mismatch");
  FrameLabels labels;
  labels.onset.assign(bytes.begin() + 4, bytes.begin() + 4 + n);
  labels.ipt.assign(bytes.begin() + 4 + n, bytes.end());
  for (auto c : labels.ipt) require(c < kNumTechniques, path.string() + ": invalid class id");
  for (auto o : labels.onset) require(o <= 1, path.string() + ": onset label not binary");
  return labels;
}

void write_clip_corpus(const fs::path& dir, std::span<const Clip> clips, const std::string& provenance) {
  fs::create_directories(dir);
  std::string manifest;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char file[64];
    std::snprintf(file, sizeof file, "clip_%05zu_%s.wav", i, std::string(name(clips[i].technique)).c_str());
    dsp::write_wav(dir / file, clips[i].audio, dsp::WavEncoding::pcm16, provenance);
    manifest += json{{"file", file}, {"technique", std::string(name(clips[i].technique))},
                     {"duration", clips[i].duration()}}
                    .dump();
    manifest += '\n';
  }
  write_text(dir / "manifest.jsonl", manifest);
}

std::vector<Clip> read_clip_corpus(const fs::path& dir) {
  std::vector<Clip> clips;
  for (const auto& j : read_jsonl(dir / "manifest.jsonl")) {
    Clip clip;
    try {
      clip.technique = technique_field(j);
      clip.audio = dsp::read_wav(dir / j.at("file").get<std::string>());
    } catch (const json::exception& e) {
      fail((dir / "manifest.jsonl").string() + ": " + e.what());
    }
    clip.id = clips.size();
    validate(clip);
    clips.push_back(std::move(clip));
  }
  return clips;
}

void write_split(const fs::path& dir, std::span<const SequenceExample> sequences, const std::string& provenance) {
  fs::create_directories(dir);
  std::string manifest;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    const std::string stem = stem_name(i);
    dsp::write_wav(dir / (stem + ".wav"), seq.audio, dsp::WavEncoding::pcm16, provenance);
    write_events_jsonl(dir / (stem + ".events.jsonl"), seq.events);
    write_labels_bin(dir / (stem + ".labels.bin"), {seq.onset_labels, seq.ipt_labels});
    manifest += json{{"file", stem + ".wav"},
                     {"duration", seq.audio.duration()},
                     {"n_frames", seq.frames()},
                     {"clips", seq.clip_ids}}
                    .dump();
    manifest += '\n';
  }
  write_text(dir / "manifest.jsonl", manifest);
}

std::vector<StoredSequence> read_split(const fs::path& dir) {
  std::vector<StoredSequence> out;
  for (const auto& j : read_jsonl(dir / "manifest.jsonl")) {
    StoredSequence item;
    std::string file;
    try {
      file = j.at("file").get<std::string>();
      if (j.contains("clips")) item.sequence.clip_ids = j.at("clips").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      fail((dir / "manifest.jsonl").string() + ": " + e.what());
    }
    item.stem = fs::path(file).stem().string();
    auto& seq = item.sequence;
    seq.audio = dsp::read_wav(dir / file);
    seq.events = read_events_jsonl(dir / (item.stem + ".events.jsonl"));
    const std::size_t n_frames = seq.audio.size() / 2205;
    const fs::path labels_path = dir / (item.stem + ".labels.bin");
    FrameLabels labels = fs::exists(labels_path) ? read_labels_bin(labels_path) : quantize_labels(seq.events, n_frames);
    require(labels.ipt.size() == n_frames, labels_path.string() + ": frame count does not match audio");
    seq.onset_labels = std::move(labels.onset);
    seq.ipt_labels = std::move(labels.ipt);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace gzipt::data
