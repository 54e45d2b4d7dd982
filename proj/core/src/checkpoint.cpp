#include "srcattr/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "srcattr/error.hpp"

namespace srcattr::contrastive {
namespace {

constexpr const char* kMagic = "srcattr-checkpoint";

void put_float(std::string& buf, double v) {
  const auto f = static_cast<float>(v);
  auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_float(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return static_cast<double>(std::bit_cast<float>(bits));
}

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::CorruptCheckpoint, what);
}

std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) corrupt("truncated header, expected '" + key + "'");
  if (line.rfind(key + "=", 0) != 0) corrupt("expected '" + key + "=', got '" + line + "'");
  return line.substr(key.size() + 1);
}

std::size_t to_size(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) corrupt("bad value for " + key);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    corrupt("bad value for " + key);
  }
}

}  // namespace

void checkpoint_save(const ProjectionParams& params, const std::filesystem::path& path,
                     const std::string& meta) {
  params.validate();
  if (meta.find('\n') != std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "checkpoint meta must be a single line");
  }
  std::ostringstream header;
  header << kMagic << '\n'
         << "version=" << kCheckpointVersion << '\n'
         << "activation=relu\n"
         << "base_dim=" << params.input_dim() << '\n'
         << "d=" << params.output_dim() << '\n'
         << "layers=" << params.layers.size() << '\n';
  for (const auto& l : params.layers) header << "layer=" << l.in << 'x' << l.out << '\n';
  header << "meta=" << meta << '\n' << "end\n";

  std::string payload = header.str();
  for (const auto& l : params.layers) {
    for (double w : l.weight) put_float(payload, w);
    for (double b : l.bias) put_float(payload, b);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != kMagic) corrupt("not a srcattr checkpoint");
  const auto version = expect_key(in, "version");
  if (version != std::to_string(kCheckpointVersion)) {
    corrupt("unsupported checkpoint version " + version + " (expected " +
            std::to_string(kCheckpointVersion) + ")");
  }
  if (expect_key(in, "activation") != "relu") corrupt("unsupported activation");
  const auto base_dim = to_size(expect_key(in, "base_dim"), "base_dim");
  const auto d = to_size(expect_key(in, "d"), "d");
  const auto n_layers = to_size(expect_key(in, "layers"), "layers");
  if (n_layers == 0 || n_layers > 64) corrupt("implausible layer count");

  Checkpoint ck;
  std::size_t floats = 0;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto shape = expect_key(in, "layer");
    const auto x = shape.find('x');
    if (x == std::string::npos) corrupt("bad layer shape '" + shape + "'");
    DenseLayer l;
    l.in = to_size(shape.substr(0, x), "layer");
    l.out = to_size(shape.substr(x + 1), "layer");
    if (l.in == 0 || l.out == 0 || l.in > (1u << 24) || l.out > (1u << 24)) {
      corrupt("implausible layer shape '" + shape + "'");
    }
    floats += l.in * l.out + l.out;
    ck.params.layers.push_back(std::move(l));
  }
  ck.meta = expect_key(in, "meta");
  if (!std::getline(in, line) || line != "end") corrupt("missing header terminator");
  if (ck.params.input_dim() != base_dim || ck.params.output_dim() != d) {
    corrupt("layer shapes disagree with base_dim/d");
  }

  std::vector<unsigned char> payload(floats * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) corrupt("truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) corrupt("trailing bytes after payload");

  const unsigned char* p = payload.data();
  for (auto& l : ck.params.layers) {
    l.weight.resize(l.in * l.out);
    l.bias.resize(l.out);
    for (double& w : l.weight) { w = get_float(p); p += 4; }
    for (double& b : l.bias) { b = get_float(p); p += 4; }
  }
  try {
    ck.params.validate();
  } catch (const Error& e) {
    corrupt(e.what());
  }
  return ck;
}

}  // namespace srcattr::contrastive
