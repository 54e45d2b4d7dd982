#include "srcattr/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srcattr/error.hpp"
#include "srcattr/io_util.hpp"

namespace srcattr::encoder {
namespace {

constexpr std::uint64_t kSignSalt = 0x9e3779b97f4a7c15ULL;

std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

std::string key_string(const corpus::WindowKey& k) {
  return k.source + "/" + k.doc_id + "/" + std::to_string(k.window_index);
}

}  // namespace

std::uint64_t hash_string(std::string_view s, std::uint64_t seed) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ fmix64(seed + 1);
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmix64(h);
}

void EncoderSpec::validate() const {
  if (base_dim == 0) throw Error(ErrorCode::InvalidConfig, "base_dim must be positive");
  if (kind == EncoderKind::HashedNgram) {
    if (ngram_orders.empty()) {
      throw Error(ErrorCode::InvalidConfig, "ngram_orders must not be empty");
    }
    for (auto n : ngram_orders) {
      if (n == 0) throw Error(ErrorCode::InvalidConfig, "n-gram order must be positive");
    }
  }
}

HashedNgramEncoder::HashedNgramEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::sort(spec_.ngram_orders.begin(), spec_.ngram_orders.end());
  spec_.ngram_orders.erase(
      std::unique(spec_.ngram_orders.begin(), spec_.ngram_orders.end()),
      spec_.ngram_orders.end());
}

BaseVector HashedNgramEncoder::accumulate(std::span<const std::string> tokens) const {
  BaseVector v(spec_.base_dim, 0.0);
  std::string gram;
  for (std::size_t order : spec_.ngram_orders) {
    if (order > tokens.size()) continue;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      gram.clear();
      for (std::size_t j = 0; j < order; ++j) {
        if (j) gram.push_back(' ');
        gram += tokens[i + j];
      }
      const std::uint64_t h = hash_string(gram, spec_.hash_seed);
      const std::uint64_t s = hash_string(gram, spec_.hash_seed ^ kSignSalt);
      v[h % spec_.base_dim] += (s >> 63) ? -1.0 : 1.0;
    }
  }
  return v;
}

BaseVector HashedNgramEncoder::encode(const corpus::Window& w) const {
  if (w.tokens.empty()) throw Error(ErrorCode::EmptyWindow, "cannot encode an empty window");
  BaseVector v = accumulate(w.tokens);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  // Colliding +1/-1 contributions can cancel exactly; fall back to a fixed
  // unit axis so the vector stays well defined.
  if (norm == 0.0) {
    v[hash_string(w.tokens.front(), spec_.hash_seed) % v.size()] = 1.0;
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

BaseVector encode(const corpus::Window& w, const EncoderSpec& spec) {
  return HashedNgramEncoder(spec).encode(w);
}

ExternalEncoder::ExternalEncoder(ExternalTable table) : table_(std::move(table)) {}

BaseVector ExternalEncoder::encode(const corpus::Window& w) const {
  auto it = table_.rows.find(corpus::key_of(w));
  if (it == table_.rows.end()) {
    throw Error(ErrorCode::MissingWindow, key_string(corpus::key_of(w)));
  }
  return it->second;
}

void ExternalEncoder::require_coverage(std::span<const corpus::Window> windows) const {
  for (const auto& w : windows) {
    if (!table_.rows.contains(corpus::key_of(w))) {
      throw Error(ErrorCode::MissingWindow, key_string(corpus::key_of(w)));
    }
  }
}

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec) {
  spec.validate();
  if (spec.kind == EncoderKind::ExternalFile) {
    auto table = load_external(spec.external_path);
    return std::make_unique<ExternalEncoder>(std::move(table));
  }
  return std::make_unique<HashedNgramEncoder>(spec);
}

ExternalTable load_external(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  ExternalTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_dim = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_dim) {
      if (line.rfind("dim=", 0) != 0) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "expected 'dim=<D>' header");
      }
      table.dim = io::parse_size(std::string_view(line).substr(4), line_no);
      if (table.dim == 0) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "dim must be positive");
      }
      have_dim = true;
      continue;
    }
    const auto fields = io::split(line, '\t');
    if (fields.size() != 4 && !(fields.size() == 5 && fields[4].rfind("label=", 0) == 0)) {
      throw RecordError(ErrorCode::MalformedRecord, line_no,
                        "expected source_id, doc_id, window_index, values");
    }
    corpus::WindowKey key{fields[0], fields[1], io::parse_size(fields[2], line_no)};
    BaseVector values;
    for (const auto& tok : io::split(fields[3], ',')) {
      values.push_back(io::parse_double(tok, line_no));
    }
    if (values.size() != table.dim) {
      throw RecordError(ErrorCode::DimensionMismatch, line_no,
                        "row has " + std::to_string(values.size()) +
                            " values, header says " + std::to_string(table.dim));
    }
    if (fields.size() == 5) table.labels.emplace(key, fields[4].substr(6));
    if (!table.rows.emplace(std::move(key), std::move(values)).second) {
      throw RecordError(ErrorCode::MalformedRecord, line_no, "duplicate window key");
    }
  }
  if (!have_dim) throw Error(ErrorCode::MalformedRecord, path.string() + ": missing dim header");
  return table;
}

void save_external(const std::filesystem::path& path, std::size_t dim,
                   std::span<const ExportRow> rows, const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  out << "dim=" << dim << '\n';
  for (const auto& row : rows) {
    if (row.values.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, key_string(row.key));
    }
    out << row.key.source << '\t' << row.key.doc_id << '\t' << row.key.window_index << '\t';
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (i) out << ',';
      out << io::format_double(row.values[i]);
    }
    if (!row.label.empty()) out << "\tlabel=" << row.label;
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace srcattr::encoder
