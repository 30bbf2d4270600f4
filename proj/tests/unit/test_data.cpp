#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "audio_oracles.hpp"
#include "gzipt/common/error.hpp"
#include "gzipt/data/corpus_io.hpp"
#include "gzipt/data/sequence.hpp"
#include "gzipt/data/synth.hpp"
#include "gzipt/dsp/melspec.hpp"

using namespace gzipt;
using namespace gzipt::data;
namespace fs = std::filesystem;

namespace {

Clip noise_clip(double seconds, Technique tech, std::size_t id, std::uint64_t seed, float amp = 0.3f) {
  Rng rng(seed);
  Clip c;
  c.technique = tech;
  c.id = id;
  c.audio.samples.resize(static_cast<std::size_t>(std::llround(seconds * 44100.0)));
  for (auto& s : c.audio.samples) s = amp * static_cast<float>(rng.uniform(-1.0, 1.0));
  return c;
}

double semitones(double a, double b) { return 12.0 * std::log2(b / a); }

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gzipt_test_data" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Clip> small_pool(std::uint64_t seed, int per_class = 3) {
  Rng rng(seed);
  ClipPoolConfig cfg;
  cfg.clips_per_class = per_class;
  return make_clip_pool(cfg, rng);
}

}  // namespace

TEST_CASE("eight techniques with stable ids and names") {
  CHECK(kNumTechniques == 8);
  const char* names[] = {"vibrato", "up_portamento", "down_portamento", "return_portamento",
                         "glissando", "tremolo", "harmonic", "plucks"};
  for (int i = 0; i < 8; ++i) {
    CHECK(name(technique_from_id(i)) == names[i]);
    CHECK(id(parse_technique(names[i])) == i);
    CHECK(id(parse_technique(std::to_string(i))) == i);
  }
  CHECK_THROWS_AS(technique_from_id(8), ValidationError);
  CHECK_THROWS_AS(parse_technique("bend"), ValidationError);
}

TEST_CASE("synth_clip rejects out-of-range pitch and duration") {
  Rng rng(1);
  CHECK_THROWS_AS(synth_clip(Technique::plucks, 59.0, 1.0, rng), ValidationError);
  CHECK_THROWS_AS(synth_clip(Technique::plucks, 1201.0, 1.0, rng), ValidationError);
  CHECK_THROWS_AS(synth_clip(Technique::plucks, 220.0, 0.4, rng), ValidationError);
  CHECK_THROWS_AS(synth_clip(Technique::plucks, 220.0, 3.1, rng), ValidationError);
}

TEST_CASE("synth_clip is deterministic, bounded and of the requested length") {
  for (int c = 0; c < 8; ++c) {
    Rng a(77), b(77);
    const auto x = synth_clip(technique_from_id(c), 330.0, 1.3, a);
    const auto y = synth_clip(technique_from_id(c), 330.0, 1.3, b);
    CHECK(x.audio.samples == y.audio.samples);
    CHECK(x.audio.size() == 57330);
    float peak = 0.0f;
    for (float s : x.audio.samples) peak = std::max(peak, std::abs(s));
    CHECK(peak >= 0.35f - 1e-6f);
    CHECK(peak <= 0.6f + 1e-6f);
  }
}

TEST_CASE("plucks: a single attack and a falling RMS envelope") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    const auto clip = synth_clip(Technique::plucks, 220.0, 1.0, rng);
    const auto flux = oracle::spectral_flux(clip.audio.samples);
    CHECK(oracle::count_peaks(flux) == 1);
    // 50 ms windows from 50 ms on.
    double prev = 1e9;
    for (std::size_t s = 2205; s + 2205 <= clip.audio.size(); s += 2205) {
      double e = 0.0;
      for (std::size_t i = s; i < s + 2205; ++i) e += double(clip.audio.samples[i]) * clip.audio.samples[i];
      const double rms = std::sqrt(e / 2205.0);
      CHECK(rms < prev);
      prev = rms;
    }
  }
}

TEST_CASE("portamento glides: up rises, down falls, both within four semitones") {
  for (std::uint64_t seed : {4, 5, 6, 7}) {
    Rng r1(seed), r2(seed + 100), r3(seed + 200);
    const auto up = synth_clip(Technique::up_portamento, 220.0, 1.5, r1);
    const auto down = synth_clip(Technique::down_portamento, 220.0, 1.5, r2);
    const auto ret = synth_clip(Technique::return_portamento, 220.0, 1.5, r3);
    const std::size_t head = 1000, tail = up.audio.size() - 2048 - 1000;
    const double d_up = semitones(oracle::track_f0(up.audio.samples, head), oracle::track_f0(up.audio.samples, tail));
    const double d_down =
        semitones(oracle::track_f0(down.audio.samples, head), oracle::track_f0(down.audio.samples, tail));
    const double d_ret = semitones(oracle::track_f0(ret.audio.samples, head), oracle::track_f0(ret.audio.samples, tail));
    CHECK(d_up > 0.0);
    CHECK(d_up <= 4.0 + 0.1);
    CHECK(d_down < 0.0);
    CHECK(d_down >= -4.0 - 0.1);
    CHECK(std::abs(d_ret) < 0.3);
    double peak = 0.0;
    for (std::size_t s = head; s < tail; s += 441)
      peak = std::max(peak, semitones(oracle::track_f0(ret.audio.samples, head), oracle::track_f0(ret.audio.samples, s)));
    CHECK(peak > 1.0);
    CHECK(peak <= 4.0 + 0.1);
  }
}

TEST_CASE("portamento pitch keeps moving through the whole note") {
  for (std::uint64_t seed : {11, 12, 13}) {
    Rng r1(seed), r2(seed + 100);
    const auto up = synth_clip(Technique::up_portamento, 262.0, 2.4, r1);
    const auto down = synth_clip(Technique::down_portamento, 262.0, 2.4, r2);
    const std::size_t n = up.audio.size() - 2048;
    std::vector<double> f_up, f_down;
    for (std::size_t k = 1; k <= 4; ++k) {
      f_up.push_back(oracle::track_f0(up.audio.samples, n * k / 5));
      f_down.push_back(oracle::track_f0(down.audio.samples, n * k / 5));
    }
    for (std::size_t k = 1; k < 4; ++k) {
      CHECK(semitones(f_up[k - 1], f_up[k]) > 0.2);
      CHECK(semitones(f_down[k - 1], f_down[k]) < -0.2);
    }
  }
}

TEST_CASE("vibrato: about 5 Hz modulation of about 30 cents") {
  Rng rng(9);
  const auto clip = synth_clip(Technique::vibrato, 330.0, 2.0, rng);
  std::vector<double> cents;
  for (std::size_t s = 0.2 * 44100; s + 2048 + 900 < clip.audio.size(); s += 441)
    cents.push_back(1200.0 * std::log2(oracle::track_f0(clip.audio.samples, s, 1024) / 330.0));
  double mean = 0.0;
  for (double c : cents) mean += c;
  mean /= double(cents.size());
  std::size_t crossings = 0;
  double depth = 0.0;
  for (std::size_t i = 1; i < cents.size(); ++i) {
    if ((cents[i - 1] - mean) * (cents[i] - mean) < 0.0) ++crossings;
    depth = std::max(depth, std::abs(cents[i] - mean));
  }
  const double seconds = double(cents.size()) * 0.01;
  const double rate = double(crossings) / 2.0 / seconds;
  CHECK(rate > 4.0);
  CHECK(rate < 6.5);
  CHECK(depth > 15.0);
  CHECK(depth < 45.0);
}

TEST_CASE("tremolo: at least eight attacks in one second") {
  for (std::uint64_t seed : {10, 11, 12}) {
    Rng rng(seed);
    const auto clip = synth_clip(Technique::tremolo, 440.0, 1.0, rng);
    CHECK(oracle::count_peaks(oracle::spectral_flux(clip.audio.samples)) >= 8);
  }
}

TEST_CASE("glissando: at least five attacks") {
  for (std::uint64_t seed : {13, 14, 15}) {
    Rng rng(seed);
    const auto clip = synth_clip(Technique::glissando, 200.0, 1.0, rng);
    CHECK(oracle::count_peaks(oracle::spectral_flux(clip.audio.samples)) >= 5);
  }
}

TEST_CASE("clip pool: every class equally often, ids in pool order") {
  const auto pool = small_pool(3, 2);
  REQUIRE(pool.size() == 16);
  int counts[8] = {};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(pool[i].id == i);
    ++counts[id(pool[i].technique)];
    CHECK_NOTHROW(validate(pool[i]));
  }
  for (int c : counts) CHECK(c == 2);
}

TEST_CASE("concat: a single long clip is one event at zero") {
  const auto clip = noise_clip(13.0, Technique::vibrato, 0, 1);
  const Clip* clips[] = {&clip};
  const auto seq = concat_clips(clips);
  REQUIRE(seq.events.size() == 1);
  CHECK(seq.events[0].onset == 0.0);
  CHECK(seq.audio.size() == clip.audio.size());
  CHECK(seq.frames() == 260);
}

TEST_CASE("concat: two 7 s clips make 13.95 s with the second onset at 6.95 s") {
  const auto a = noise_clip(7.0, Technique::tremolo, 0, 2);
  const auto b = noise_clip(7.0, Technique::harmonic, 1, 3);
  const Clip* clips[] = {&a, &b};
  const auto seq = concat_clips(clips);
  CHECK(seq.audio.duration() == doctest::Approx(13.95).epsilon(1e-12));
  REQUIRE(seq.events.size() == 2);
  CHECK(seq.events[1].onset == doctest::Approx(6.95).epsilon(1e-12));
  CHECK(seq.events[0].technique == Technique::tremolo);
  CHECK(seq.events[1].technique == Technique::harmonic);
  // floor(6.95 / 0.05) = 139
  CHECK(seq.onset_labels[139] == 1);
  CHECK(seq.ipt_labels[138] == id(Technique::tremolo));
  CHECK(seq.ipt_labels[139] == id(Technique::harmonic));

  // Cross-fade region is a convex mix of the two clips.
  const std::size_t start = a.audio.size() - 2205;
  for (std::size_t i = 0; i < 2205; ++i) {
    const float lim = std::max(std::abs(a.audio.samples[start + i]), std::abs(b.audio.samples[i]));
    CHECK(std::abs(seq.audio.samples[start + i]) <= lim + 1e-7f);
  }
}

TEST_CASE("concat: k clips lose (k - 1) cross-fades") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng.below(8);
    std::vector<Clip> clips;
    std::size_t total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      clips.push_back(noise_clip(rng.uniform(1.0, 3.0), technique_from_id(int(rng.below(8))), i, rng.next_u64()));
      total += clips.back().audio.size();
    }
    std::vector<const Clip*> ptrs;
    for (const auto& c : clips) ptrs.push_back(&c);
    const auto seq = concat_clips(ptrs, kCrossfade, 0.0);
    CHECK(seq.audio.size() == total - (k - 1) * 2205);
    CHECK(double(total) / 44100.0 - seq.audio.duration() == doctest::Approx(double(k - 1) * 0.05).epsilon(1e-9));
  }
}

TEST_CASE("concat: too short overall is an error") {
  const auto a = noise_clip(3.0, Technique::plucks, 0, 1);
  const Clip* clips[] = {&a, &a};
  CHECK_THROWS_AS(concat_clips(clips), ValidationError);
}

TEST_CASE("quantize_labels examples") {
  CHECK(frame_of(0.0) == 0);
  CHECK(frame_of(0.12) == 2);
  const NoteEvent one[] = {{0.0, 0.25, Technique::return_portamento}};
  const auto l = quantize_labels(one, 5);
  CHECK(l.ipt == std::vector<std::uint8_t>{3, 3, 3, 3, 3});
  CHECK(l.onset == std::vector<std::uint8_t>{1, 0, 0, 0, 0});

  const NoteEvent overlap[] = {{0.0, 0.3, Technique::plucks}, {0.2, 0.5, Technique::vibrato}};
  CHECK_THROWS_AS(quantize_labels(overlap, 10), ValidationError);
}

TEST_CASE("quantize_labels agrees with floor(onset / 0.05) on random event lists") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<NoteEvent> events;
    double t = rng.uniform(0.0, 0.3);
    while (t < 12.0) {
      const double len = rng.uniform(0.1, 2.0);
      events.push_back({t, t + len, technique_from_id(int(rng.below(8)))});
      t += len;
    }
    const std::size_t n = static_cast<std::size_t>(std::floor(events.back().offset / 0.05));
    const auto l = quantize_labels(events, n);
    std::size_t ones = 0;
    for (auto o : l.onset) ones += o;
    CHECK(ones == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto f = static_cast<std::size_t>(std::floor(events[i].onset / 0.05));
      CHECK(l.onset[f] == 1);
      const std::size_t end = i + 1 < events.size() ? static_cast<std::size_t>(std::floor(events[i + 1].onset / 0.05)) : n;
      for (std::size_t k = (i == 0 ? 0 : f); k < end; ++k) CHECK(l.ipt[k] == id(events[i].technique));
    }
  }
}

TEST_CASE("labels round-trip to events within one frame and with exact classes") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<NoteEvent> events;
    double t = 0.0;
    while (t < 10.0) {
      const double len = rng.uniform(0.1, 2.0);
      events.push_back({t, t + len, technique_from_id(int(rng.below(8)))});
      t += len;
    }
    const auto n = static_cast<std::size_t>(std::floor(events.back().offset / 0.05));
    const auto l = quantize_labels(events, n);
    const auto back = labels_to_events(l.onset, l.ipt);
    REQUIRE(back.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(std::abs(back[i].onset - events[i].onset) < 0.05);
      CHECK(back[i].technique == events[i].technique);
    }
  }
}

TEST_CASE("generate_split: train sequences are 12.8 s and 256 frames, test sequences longer") {
  const auto pool = small_pool(31);
  Rng rng(8);
  const auto train = generate_split(pool, 12, SplitMode::train, rng);
  const auto test = generate_split(pool, 6, SplitMode::test, rng);
  std::set<std::vector<std::size_t>> signatures;
  for (const auto& s : train) {
    CHECK(s.audio.size() == 564480);
    CHECK(s.frames() == 256);
    CHECK(s.onset_labels.size() == 256);
    CHECK(dsp::log_mel(s.audio).n_frames == 256);
    signatures.insert(s.clip_ids);
    std::set<std::size_t> distinct(s.clip_ids.begin(), s.clip_ids.end());
    CHECK(distinct.size() == s.clip_ids.size());
  }
  CHECK(signatures.size() == train.size());
  for (const auto& s : test) {
    CHECK(s.audio.size() > 564480);
    CHECK(s.audio.duration() > 12.8);
    CHECK(s.frames() == dsp::log_mel(s.audio).n_frames);
    CHECK_NOTHROW(validate_events(s.events));
  }
}

TEST_CASE("generate_split is deterministic per seed") {
  const auto pool = small_pool(32, 2);
  Rng a(3), b(3);
  const auto x = generate_split(pool, 4, SplitMode::test, a);
  const auto y = generate_split(pool, 4, SplitMode::test, b);
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].audio.samples == y[i].audio.samples);
    CHECK(x[i].events == y[i].events);
    CHECK(x[i].ipt_labels == y[i].ipt_labels);
  }
}

TEST_CASE("generate_split: two 7 s clips allow only two orderings") {
  const std::vector<Clip> pool = {noise_clip(7.0, Technique::plucks, 0, 1), noise_clip(7.0, Technique::vibrato, 1, 2)};
  Rng rng(4);
  CHECK(generate_split(pool, 2, SplitMode::test, rng).size() == 2);
  CHECK_THROWS_AS(generate_split(pool, 3, SplitMode::test, rng), ValidationError);
}

TEST_CASE("events, labels and splits survive a disk round trip") {
  const auto dir = temp_dir("split");
  const auto pool = small_pool(33, 2);
  Rng rng(6);
  const auto seqs = generate_split(pool, 3, SplitMode::test, rng);
  write_split(dir, seqs, "seed=6");
  const auto back = read_split(dir);
  REQUIRE(back.size() == seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    CHECK(back[i].stem == "seq_0000" + std::to_string(i));
    CHECK(back[i].sequence.events == seqs[i].events);
    CHECK(back[i].sequence.onset_labels == seqs[i].onset_labels);
    CHECK(back[i].sequence.ipt_labels == seqs[i].ipt_labels);
    CHECK(back[i].sequence.clip_ids == seqs[i].clip_ids);
    CHECK(back[i].sequence.audio.size() == seqs[i].audio.size());
  }
  // Without the cached labels they are re-derived from the events.
  fs::remove(dir / "seq_00001.labels.bin");
  CHECK(read_split(dir)[1].sequence.ipt_labels == seqs[1].ipt_labels);

  const auto clips_dir = temp_dir("clips");
  write_clip_corpus(clips_dir, pool, "seed=6");
  const auto clips = read_clip_corpus(clips_dir);
  REQUIRE(clips.size() == pool.size());
  for (std::size_t i = 0; i < clips.size(); ++i) CHECK(clips[i].technique == pool[i].technique);
}

TEST_CASE("malformed annotation files are rejected with context") {
  const auto dir = temp_dir("bad");
  std::ofstream(dir / "a.events.jsonl") << "{\"onset_s\": 0.0, \"offset_s\": 1.0, \"technique\": \"wobble\"}\n";
  CHECK_THROWS_AS(read_events_jsonl(dir / "a.events.jsonl"), ValidationError);
  std::ofstream(dir / "b.events.jsonl") << "{\"onset_s\": 1.0, \"offset_s\": 0.5, \"technique\": \"plucks\"}\n";
  CHECK_THROWS_AS(read_events_jsonl(dir / "b.events.jsonl"), ValidationError);
  std::ofstream(dir / "c.labels.bin") << "xx";
  CHECK_THROWS_AS(read_labels_bin(dir / "c.labels.bin"), ValidationError);
}
