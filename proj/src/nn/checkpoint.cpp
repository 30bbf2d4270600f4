#include "gzipt/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gzipt/common/error.hpp"

namespace gzipt::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
constexpr char kMagic[8] = {'G', 'Z', 'I', 'P', 'T', 'C', 'K', '1'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                     std::span<const Tensor* const> params) {
  auto shapes = nlohmann::json::array();
  for (const auto* p : params) shapes.push_back(p->shape());
  header["params"] = shapes;
  const std::string text = header.dump();
  const auto len = static_cast<std::uint64_t>(text.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : params)
    out.write(reinterpret_cast<const char*>(p->data().data()), static_cast<std::streamsize>(p->size() * sizeof(float)));
  require(static_cast<bool>(out), "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open checkpoint " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 8) == 0, where + "not a checkpoint file");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  require(16 + len <= bytes.size(), where + "truncated header");

  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    fail(where + e.what());
  }
  std::size_t pos = 16 + len;
  for (const auto& s : ck.header.at("params")) {
    Tensor t(s.get<Shape>());
    const std::size_t nbytes = t.size() * sizeof(float);
    require(pos + nbytes <= bytes.size(), where + "truncated payload");
    std::memcpy(t.data().data(), bytes.data() + pos, nbytes);
    pos += nbytes;
    ck.params.push_back(std::move(t));
  }
  require(pos == bytes.size(), where + "trailing bytes after payload");
  return ck;
}

}  // namespace gzipt::nn
