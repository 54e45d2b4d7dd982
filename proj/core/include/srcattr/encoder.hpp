#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "srcattr/corpus.hpp"

namespace srcattr::encoder {

/// Raw encoder output for one window.
using BaseVector = std::vector<double>;

enum class EncoderKind { HashedNgram, ExternalFile };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::HashedNgram;
  std::size_t base_dim = 256;
  std::vector<std::size_t> ngram_orders = {1, 2};
  std::uint64_t hash_seed = 0;
  std::filesystem::path external_path;  // ExternalFile only

  void validate() const;
};

/// Frozen base encoder; maps a window to a fixed-dimension vector.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dim() const noexcept = 0;
  virtual BaseVector encode(const corpus::Window& w) const = 0;
};

/// Signed feature hashing of token n-grams followed by L2 normalization.
class HashedNgramEncoder final : public Encoder {
 public:
  explicit HashedNgramEncoder(EncoderSpec spec);

  std::size_t dim() const noexcept override { return spec_.base_dim; }
  BaseVector encode(const corpus::Window& w) const override;

  /// Un-normalized signed counts; exposed for structural tests.
  BaseVector accumulate(std::span<const std::string> tokens) const;

 private:
  EncoderSpec spec_;
};

/// Vectors computed elsewhere, keyed by window identity.
struct ExternalTable {
  std::size_t dim = 0;
  std::map<corpus::WindowKey, BaseVector> rows;
  std::map<corpus::WindowKey, std::string> labels;  // rows that carried one
};

/// Embedding exchange format: a `dim=<D>` line, then rows of
/// `source_id<TAB>doc_id<TAB>window_index<TAB>v1,...,vD`. Lines starting
/// with `#` are comments. An optional trailing `label=<source_id>` column is
/// accepted and kept in `labels`. Throws DimensionMismatch on ragged rows.
ExternalTable load_external(const std::filesystem::path& path);

struct ExportRow {
  corpus::WindowKey key;
  std::span<const double> values;
  std::string label;  // written as `label=<...>` when non-empty
};

void save_external(const std::filesystem::path& path, std::size_t dim,
                   std::span<const ExportRow> rows,
                   const std::string& header_json = {});

class ExternalEncoder final : public Encoder {
 public:
  explicit ExternalEncoder(ExternalTable table);

  std::size_t dim() const noexcept override { return table_.dim; }
  /// Throws MissingWindow when the window has no stored vector.
  BaseVector encode(const corpus::Window& w) const override;

  /// Throws MissingWindow naming the first uncovered window.
  void require_coverage(std::span<const corpus::Window> windows) const;

 private:
  ExternalTable table_;
};

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec);

/// Convenience wrapper over HashedNgramEncoder.
BaseVector encode(const corpus::Window& w, const EncoderSpec& spec);

/// 64-bit seeded string hash (FNV-1a with a murmur-style finalizer).
std::uint64_t hash_string(std::string_view s, std::uint64_t seed) noexcept;

}  // namespace srcattr::encoder
