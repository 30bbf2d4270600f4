#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "gzipt/app/commands.hpp"
#include "gzipt/app/figure.hpp"
#include "gzipt/app/png.hpp"
#include "gzipt/common/rng.hpp"
#include "gzipt/common/error.hpp"
#include "gzipt/data/corpus_io.hpp"
#include "gzipt/dsp/wav.hpp"
#include "gzipt/nn/checkpoint.hpp"
#include "run_fixture.hpp"

using namespace gzipt;
using namespace gzipt::app;
using fixture::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Bitwise CRC-32 (polynomial 0xEDB88320), independent of zlib's table.
std::uint32_t crc32_bitwise(const std::uint8_t* p, std::size_t n) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) {
    c ^= p[i];
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return c ^ 0xFFFFFFFFu;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

struct PngChunk {
  std::string type;
  std::vector<std::uint8_t> data;
};

std::vector<PngChunk> parse_png(const std::vector<std::uint8_t>& bytes) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  REQUIRE(bytes.size() > 8);
  REQUIRE(std::equal(sig, sig + 8, bytes.begin()));
  std::vector<PngChunk> chunks;
  std::size_t pos = 8;
  while (pos < bytes.size()) {
    REQUIRE(pos + 12 <= bytes.size());
    const std::uint32_t len = be32(&bytes[pos]);
    REQUIRE(pos + 12 + len <= bytes.size());
    CHECK(be32(&bytes[pos + 8 + len]) == crc32_bitwise(&bytes[pos + 4], 4 + len));
    chunks.push_back({std::string(bytes.begin() + pos + 4, bytes.begin() + pos + 8),
                      {bytes.begin() + pos + 8, bytes.begin() + pos + 8 + len}});
    pos += 12 + len;
  }
  return chunks;
}

Image decode_rgb(const std::vector<PngChunk>& chunks) {
  REQUIRE(chunks.front().type == "IHDR");
  const auto& h = chunks.front().data;
  const std::size_t w = be32(&h[0]), ht = be32(&h[4]);
  CHECK(h[8] == 8);
  CHECK(h[9] == 2);
  std::vector<std::uint8_t> packed;
  for (const auto& c : chunks)
    if (c.type == "IDAT") packed.insert(packed.end(), c.data.begin(), c.data.end());
  std::vector<std::uint8_t> raw(ht * (1 + 3 * w));
  uLongf raw_len = raw.size();
  REQUIRE(uncompress(raw.data(), &raw_len, packed.data(), packed.size()) == Z_OK);
  REQUIRE(raw_len == raw.size());
  Image img(w, ht);
  for (std::size_t y = 0; y < ht; ++y) {
    const std::uint8_t* row = &raw[y * (1 + 3 * w)];
    REQUIRE(row[0] == 0);
    for (std::size_t x = 0; x < w; ++x) img.at(x, y) = {row[1 + 3 * x], row[2 + 3 * x], row[3 + 3 * x]};
  }
  return img;
}

std::map<std::string, std::string> png_text(const std::vector<PngChunk>& chunks) {
  std::map<std::string, std::string> out;
  for (const auto& c : chunks) {
    if (c.type != "tEXt") continue;
    const auto nul = std::find(c.data.begin(), c.data.end(), 0);
    out[std::string(c.data.begin(), nul)] = std::string(nul + 1, c.data.end());
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  const auto s = fixture::slurp(p);
  return {s.begin(), s.end()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GZIPT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config JSON round-trips and the hash ignores paths") {
  RunConfig a;
  a.seed = 7;
  a.onset.beta = 1.5;
  a.ipt.skip_connection = false;
  a.eval.fusion = false;
  const RunConfig b = run_config_from_json(to_json(a));
  CHECK(to_json(b) == to_json(a));
  CHECK(config_hash(b) == config_hash(a));
  CHECK(config_hash(a).size() == 16);

  RunConfig moved = a;
  moved.paths.corpus = "/somewhere/else";
  CHECK(config_hash(moved) == config_hash(a));
  RunConfig reseeded = a;
  reseeded.seed = 8;
  CHECK(config_hash(reseeded) != config_hash(a));
}

TEST_CASE("FNV-1a matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("invalid run configs are rejected") {
  CHECK_THROWS_AS(run_config_from_json(json{{"onset", {{"beta", 2.5}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json{{"onset", {{"beta", 0.0}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json{{"train", {{"batch", 0}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json{{"data", {{"n_train", "many"}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json::array()), ValidationError);
  CHECK_NOTHROW(run_config_from_json(json{{"onset", {{"beta", 1.0}}}}));
}

TEST_CASE("config file paths resolve against the file's directory") {
  TempDir dir("cfg");
  {
    std::ofstream f(dir.path() / "run.json");
    f << R"({"seed": 3, "paths": {"corpus": "data/c"}})";
  }
  const auto cfg = load_run_config(dir.path() / "run.json");
  CHECK(cfg.seed == 3);
  CHECK(cfg.paths.corpus == (dir.path() / "data/c").lexically_normal());
  CHECK(cfg.paths.reports == (dir.path() / "reports").lexically_normal());

  {
    std::ofstream f(dir.path() / "blocker");
    f << "x";
  }
  RunConfig bad;
  bad.paths.corpus = dir.path() / "blocker" / "corpus";
  CHECK_THROWS_AS(resolve_paths(bad, dir.path()), ValidationError);
  CHECK_THROWS_AS(load_run_config(dir.path() / "missing.json"), ValidationError);
}

TEST_CASE("PNG encoding decodes back to the same pixels and text") {
  Image img(7, 5, {10, 20, 30});
  img.fill_rect(2, 1, 3, 2, {255, 0, 128});
  img.at(6, 4) = {1, 2, 3};
  const auto bytes = encode_png(img, {{"gzipt:seed", "42"}, {"note", "hello"}});
  const auto chunks = parse_png(bytes);
  CHECK(chunks.front().type == "IHDR");
  CHECK(chunks.back().type == "IEND");
  const Image back = decode_rgb(chunks);
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.pixels == img.pixels);
  const auto text = png_text(chunks);
  CHECK(text.at("gzipt:seed") == "42");
  CHECK(text.at("note") == "hello");
  CHECK_THROWS_AS(encode_png(Image{}), ValidationError);
}

TEST_CASE("figures have four panels, or five with a target") {
  dsp::Spectrogram spec;
  spec.n_mels = 128;
  spec.n_frames = 10;
  spec.values.assign(128 * 10, 0.0);
  for (std::size_t i = 0; i < spec.values.size(); ++i) spec.values[i] = double(i % 17);
  FigureInput in;
  in.spectrogram = &spec;
  in.onsets = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0};
  in.raw = {0, 1, 2, 3, 4, 5, 6, 7, 0, 1};
  in.fused = {0, 0, 0, 0, 0, 5, 5, 5, 5, 5};
  const auto four = render_figure(in);
  CHECK(four.panels == 4);
  CHECK(four.image.width == 10 * kPixelsPerFrame);
  in.target = std::vector<int>(10, 2);
  const auto five = render_figure(in);
  CHECK(five.panels == 5);
  CHECK(five.image.height == four.image.height + kPanelGap + 8 * kClassRowHeight);

  // The fused panel lights class 5's row from frame 5 onwards.
  const std::size_t fused_top = 128 + kPanelGap + kOnsetStripHeight + kPanelGap + 8 * kClassRowHeight + kPanelGap;
  const auto& im = five.image;
  CHECK(im.at(5 * kPixelsPerFrame, fused_top + 5 * kClassRowHeight) ==
        im.at(9 * kPixelsPerFrame, fused_top + 5 * kClassRowHeight));
  CHECK_FALSE(im.at(4 * kPixelsPerFrame, fused_top + 5 * kClassRowHeight) ==
              im.at(5 * kPixelsPerFrame, fused_top + 5 * kClassRowHeight));

  in.raw.pop_back();
  CHECK_THROWS_AS(render_figure(in), ValidationError);
}

TEST_CASE("probability files round-trip and fuse into events") {
  TempDir dir("probs");
  const std::vector<float> onset{0.9f, 0.1f, 0.2f, 0.7f, 0.3f};
  ProbMatrix ipt(8, 5, 0.0f);
  for (std::size_t t = 0; t < 5; ++t) ipt.at(t < 3 ? 1 : 6, t) = 1.0f;
  write_onset_probs(dir.path() / "onset.jsonl", onset);
  write_ipt_probs(dir.path() / "ipt.jsonl", ipt);
  CHECK(read_onset_probs(dir.path() / "onset.jsonl") == onset);
  const auto back = read_ipt_probs(dir.path() / "ipt.jsonl");
  CHECK(back.rows == 8);
  CHECK(back.values == ipt.values);

  const auto events = cmd_fuse(dir.path() / "onset.jsonl", dir.path() / "ipt.jsonl", dir.path() / "ev.jsonl", {});
  REQUIRE(events.size() == 2);
  CHECK(events[0].technique == data::Technique::up_portamento);
  CHECK(events[0].onset == 0.0);
  CHECK(events[1].technique == data::Technique::harmonic);
  CHECK(events[1].onset == doctest::Approx(0.15));
  CHECK(data::read_events_jsonl(dir.path() / "ev.jsonl").size() == 2);

  write_onset_probs(dir.path() / "short.jsonl", std::vector<float>{0.5f});
  CHECK_THROWS_AS(cmd_fuse(dir.path() / "short.jsonl", dir.path() / "ipt.jsonl", std::nullopt, {}), ValidationError);
  {
    std::ofstream f(dir.path() / "bad.jsonl");
    f << "{\"frame\": 0, \"p\": 1.5}\n";
  }
  CHECK_THROWS_AS(read_onset_probs(dir.path() / "bad.jsonl"), ValidationError);
}

TEST_CASE("generate writes the expected corpus and is reproducible") {
  TempDir a("gen_a"), b("gen_b");
  const auto cfg_a = fixture::tiny_config(a.path()), cfg_b = fixture::tiny_config(b.path());
  cmd_generate(cfg_a);
  cmd_generate(cfg_b);
  CHECK(fixture::tree_bytes(a.path() / "corpus") == fixture::tree_bytes(b.path() / "corpus"));

  const auto train = data::read_split(train_dir(cfg_a));
  const auto test = data::read_split(test_dir(cfg_a));
  REQUIRE(train.size() == 6);
  REQUIRE(test.size() == 2);
  for (const auto& s : train) {
    CHECK(s.sequence.audio.size() == 564480);
    CHECK(s.sequence.ipt_labels.size() == 256);
  }
  for (const auto& s : test) CHECK(s.sequence.audio.size() > 564480);
  const auto info = json::parse(fixture::slurp(cfg_a.paths.corpus / "corpus.json"));
  CHECK(info.at("config_hash") == config_hash(cfg_a));
  CHECK(info.at("clips") == 24);

  TempDir c("gen_c");
  cmd_generate(fixture::tiny_config(c.path(), 6));
  CHECK(fixture::slurp(c.path() / "corpus/train/seq_00000.wav") !=
        fixture::slurp(a.path() / "corpus/train/seq_00000.wav"));
}

TEST_CASE("train, eval, infer and visualize on a tiny run") {
  TempDir dir("pipeline");
  auto cfg = fixture::tiny_config(dir.path());
  cfg.onset.beta = 1.0;
  cfg.ipt.skip_connection = false;
  cmd_generate(cfg);

  CHECK_THROWS_WITH_AS(load_models(cfg), doctest::Contains("missing checkpoint"), ValidationError);

  const auto ipt = cmd_train(cfg, models::DetectorKind::ipt);
  const auto onset = cmd_train(cfg, models::DetectorKind::onset);
  CHECK(ipt.epochs.size() == 2);
  CHECK(onset.epochs.size() == 2);

  const auto log = lines(fixture::slurp(loss_log_path(cfg, models::DetectorKind::onset)));
  REQUIRE(log.size() == 4);
  CHECK(log[0].find("beta=1") != std::string::npos);
  CHECK(log[0].find("config=" + config_hash(cfg)) != std::string::npos);
  CHECK(log[1] == "epoch,train_loss,heldout_loss");
  CHECK(log[2].rfind("1,", 0) == 0);

  const auto ck = nn::load_checkpoint(checkpoint_path(cfg, models::DetectorKind::ipt));
  bool has_skip = false;
  for (const auto& layer : ck.header.at("layers")) has_skip |= layer.value("kind", "") == "add";
  CHECK_FALSE(has_skip);
  CHECK(ck.header.at("config_hash") == config_hash(cfg));

  const auto report = cmd_eval(cfg);
  CHECK(report.per_piece.size() == 2);
  CHECK(report.mean_frame_accuracy >= 0.0);
  CHECK(report.mean_frame_accuracy <= 1.0);
  const auto j = json::parse(fixture::slurp(report_path(cfg)));
  CHECK(j.at("seed") == cfg.seed);
  CHECK(fs::exists(cfg.paths.reports / "report.csv"));

  const auto onset_ck = nn::load_checkpoint(checkpoint_path(cfg, models::DetectorKind::onset));
  CHECK(onset_ck.header.at("beta") == 1.0);
  CHECK(onset_ck.header.at("seed") == cfg.seed);

  // Events tile the recording: first at 0, each ends where the next starts.
  const fs::path wav = test_dir(cfg) / "seq_00000.wav";
  const auto events = cmd_infer(cfg, wav, dir.path() / "out.jsonl", dir.path() / "probs");
  REQUIRE_FALSE(events.empty());
  CHECK(events.front().onset == 0.0);
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i - 1].offset == doctest::Approx(events[i].onset));
  const double frames = double(dsp::read_wav(wav).size() / 2205);
  CHECK(events.back().offset == doctest::Approx(frames * 0.05));

  // A 30 s recording goes through in one pass.
  dsp::AudioBuffer long_audio;
  long_audio.samples.resize(30 * 44100);
  Rng noise(9);
  for (auto& v : long_audio.samples) v = float(0.1 * noise.normal());
  dsp::write_wav(dir.path() / "long.wav", long_audio);
  const auto long_events = cmd_infer(cfg, dir.path() / "long.wav", std::nullopt);
  REQUIRE_FALSE(long_events.empty());
  CHECK(long_events.back().offset == doctest::Approx(30.0));
  const auto refused =
      cmd_fuse(dir.path() / "probs/onset.jsonl", dir.path() / "probs/ipt.jsonl", std::nullopt, cfg.eval);
  CHECK(refused == events);

  // With no frame reaching the threshold the whole recording is one note.
  dsp::AudioBuffer silence;
  silence.samples.assign(44100, 0.0f);
  dsp::write_wav(dir.path() / "silence.wav", silence);
  auto strict = cfg;
  strict.eval.threshold = 1.0;
  const auto one = cmd_infer(strict, dir.path() / "silence.wav", std::nullopt);
  REQUIRE(one.size() == 1);
  CHECK(one[0].onset == 0.0);
  CHECK(one[0].offset == doctest::Approx(1.0));

  CHECK(cmd_visualize(cfg, wav, dir.path() / "v4.png") == 4);
  const fs::path labels = test_dir(cfg) / "seq_00000.labels.bin";
  CHECK(cmd_visualize(cfg, wav, dir.path() / "v5.png", labels) == 5);
  CHECK(cmd_visualize(cfg, wav, dir.path() / "v5_again.png", labels) == 5);
  CHECK(read_bytes(dir.path() / "v5.png") == read_bytes(dir.path() / "v5_again.png"));
  const auto text = png_text(parse_png(read_bytes(dir.path() / "v5.png")));
  CHECK(text.at("gzipt:panels") == "5");
  CHECK(text.at("gzipt:config_hash") == config_hash(cfg));
}

TEST_CASE("command-line exit codes") {
  TempDir dir("cli");
  const std::string d = dir.path().string();
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("eval --corpus " + d + "/c --checkpoints " + d + "/k --reports " + d + "/r") == 2);
  CHECK(run_cli("generate --beta 2.5 --corpus " + d + "/c") == 2);
  CHECK(run_cli("infer " + d + "/missing.wav --checkpoints " + d + "/k") == 2);
  CHECK(run_cli("fuse " + d + "/a.jsonl " + d + "/b.jsonl") == 2);
  CHECK(run_cli("--help") == 0);
}
