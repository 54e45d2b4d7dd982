#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srcattr/corpus.hpp"
#include "srcattr/encoder.hpp"
#include "srcattr/principal.hpp"
#include "srcattr/projection.hpp"

namespace srcattr::index {

/// One projected principal window.
struct IndexEntry {
  std::vector<double> z;
  SourceId source;
  std::string doc_id;
  std::size_t window_index = 0;
  std::string text;
};

/// Sum of a source's normalized embeddings and its unit direction. The sum
/// maximizes total cosine similarity to the members among all directions.
struct Centroid {
  SourceId source;
  std::vector<double> sum;
  std::vector<double> direction;
  double norm = 0.0;
};

constexpr double kDegenerateNorm = 1e-9;
constexpr double kUnitTolerance = 1e-6;

/// Throws DegenerateCluster when the members cancel out (||sum|| < 1e-9).
Centroid centroid_of(std::span<const std::vector<double>> members, SourceId source = {});

enum class Method { HardKnn, SoftKnn, Centroid };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct Evidence {
  std::string doc_id;
  std::size_t window_index = 0;
  std::string text;
  double similarity = 0.0;
};

struct RankedSource {
  SourceId source;
  double similarity = 0.0;
  std::size_t votes = 0;  // hard kNN only
  Evidence evidence;
};

struct AttributionResult {
  Method method = Method::SoftKnn;
  std::size_t k = 0;
  std::vector<RankedSource> ranked;
};

struct Neighbor {
  std::size_t entry = 0;
  double distance = 0.0;  // 1 - cosine similarity
};

/// Exact cosine-distance index over unit-norm embeddings. Immutable after
/// construction; all queries are const and thread-safe.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;

  /// Validates unit norm and dimensions, then precomputes one centroid per
  /// source (sources ordered by first appearance).
  explicit EmbeddingIndex(std::vector<IndexEntry> entries);

  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  const std::vector<Centroid>& centroids() const noexcept { return centroids_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t source_count() const noexcept { return centroids_.size(); }

  /// Every entry ordered by (distance, insertion order).
  std::vector<Neighbor> rank_entries(std::span<const double> q) const;

  /// Majority vote among the k nearest entries. Vote ties go to the smaller
  /// summed distance, then to the lexicographically smaller source id.
  /// Throws KTooLarge if k exceeds the entry count.
  AttributionResult hard_knn(std::span<const double> q, std::size_t k) const;

  /// First `k_sources` distinct sources met in ascending distance order, each
  /// scored by the similarity of its first entry. Throws KTooLarge.
  AttributionResult soft_knn(std::span<const double> q, std::size_t k_sources) const;

  /// All sources ranked by cosine similarity to their centroid direction,
  /// ties by source id.
  AttributionResult nearest_centroid(std::span<const double> q, bool with_evidence = true) const;

  AttributionResult attribute(std::span<const double> q, Method method, std::size_t k) const;

  /// Closest entry of `source` to q.
  Evidence evidence_for(std::span<const double> q, const SourceId& source) const;

 private:
  double distance(std::span<const double> q, std::size_t entry) const;
  std::size_t centroid_slot(const SourceId& source) const;

  std::vector<IndexEntry> entries_;
  std::vector<Centroid> centroids_;
  std::vector<std::vector<std::size_t>> members_;  // per centroid slot
  std::size_t dim_ = 0;
};

/// Projects every principal window and indexes it.
EmbeddingIndex build_index(const principal::PrincipalSet& principal,
                           const contrastive::ProjectionParams& params,
                           const encoder::Encoder& encoder);

/// Turns free text into one unit-norm query embedding: normalize, tokenize,
/// split into windows, project each, mean-pool and renormalize.
class QueryEmbedder {
 public:
  QueryEmbedder(const contrastive::ProjectionParams& params, const encoder::Encoder& encoder,
                std::size_t window_size);

  /// Throws EmptyQuery if nothing survives normalization.
  std::vector<double> embed(std::string_view text, std::string_view query_id = "query") const;

  /// Number of windows `text` is split into.
  std::size_t window_count(std::string_view text) const;

 private:
  const contrastive::ProjectionParams* params_;
  const encoder::Encoder* encoder_;
  std::size_t window_size_;
};

/// Source id used in window keys of query windows (relevant for
/// external-file encoders, which look query windows up by key).
inline constexpr std::string_view kQuerySource = "query";

/// Index file: `#config` line, `srcattr-index v1`, `dim=<D>`, then rows of
/// source_id, doc_id, window_index, comma-separated z (exact decimal), text.
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path,
                const std::string& header_json = {});
EmbeddingIndex load_index(const std::filesystem::path& path);

/// Embedding exchange format with a trailing `label=<source_id>` column.
void export_embeddings(const EmbeddingIndex& index, const std::filesystem::path& path,
                       const std::string& header_json = {});

}  // namespace srcattr::index
