#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gzipt/data/sequence.hpp"

namespace gzipt::data {

// One JSON object per line: {"onset_s": .., "offset_s": .., "technique": "<name>"}.
void write_events_jsonl(const std::filesystem::path& path, std::span<const NoteEvent> events);
std::vector<NoteEvent> read_events_jsonl(const std::filesystem::path& path);
std::string events_to_jsonl(std::span<const NoteEvent> events);

// Little-endian: u32 T, then T onset bytes, then T class-id bytes.
void write_labels_bin(const std::filesystem::path& path, const FrameLabels& labels);
FrameLabels read_labels_bin(const std::filesystem::path& path);

// Clip corpus: a directory of WAV files plus manifest.jsonl with one
// {"file", "technique", "duration"} record per clip.
void write_clip_corpus(const std::filesystem::path& dir, std::span<const Clip> clips, const std::string& provenance);
std::vector<Clip> read_clip_corpus(const std::filesystem::path& dir);

// A split directory holds <stem>.wav, <stem>.events.jsonl and
// <stem>.labels.bin per sequence, plus manifest.jsonl listing them in order.
void write_split(const std::filesystem::path& dir, std::span<const SequenceExample> sequences,
                 const std::string& provenance);

struct StoredSequence {
  std::string stem;
  SequenceExample sequence;
};

// Reads the sequences listed in manifest.jsonl. Labels come from the cached
// .labels.bin when present and are re-derived from the events otherwise.
std::vector<StoredSequence> read_split(const std::filesystem::path& dir);

}  // namespace gzipt::data
