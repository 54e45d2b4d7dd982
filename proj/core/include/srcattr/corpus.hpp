#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srcattr {

/// Identifier of a data provider. Opaque and non-empty.
struct SourceId {
  std::string value;

  friend auto operator<=>(const SourceId&, const SourceId&) = default;
};

}  // namespace srcattr

template <>
struct std::hash<srcattr::SourceId> {
  std::size_t operator()(const srcattr::SourceId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};

namespace srcattr::corpus {

struct Document {
  SourceId source;
  std::string doc_id;
  std::string raw_text;
  std::vector<std::string> tokens;  // normalized, filled by from_documents
};

/// Contiguous token span of one document; the unit fed to the encoder.
struct Window {
  SourceId source;
  std::string doc_id;
  std::size_t window_index = 0;
  std::vector<std::string> tokens;
  std::string text;  // tokens joined by single spaces
};

/// Stable identity of a window across pipeline stages.
struct WindowKey {
  std::string source;
  std::string doc_id;
  std::size_t window_index = 0;

  friend auto operator<=>(const WindowKey&, const WindowKey&) = default;
};

WindowKey key_of(const Window& w);

struct CorpusConfig {
  std::size_t window_size = 30;
  std::size_t stride = 30;

  void validate() const;
};

struct SourceGroup {
  SourceId source;
  std::vector<Document> documents;
  std::vector<Window> windows;
  std::size_t token_count = 0;
};

/// Immutable collection of documents grouped by source in first-seen order.
class Corpus {
 public:
  Corpus() = default;

  /// Normalizes, tokenizes and segments `docs`. Throws DuplicateDocId,
  /// EmptyDocument or MalformedRecord (empty source id).
  static Corpus from_documents(std::vector<Document> docs, CorpusConfig cfg);

  const std::vector<SourceGroup>& sources() const noexcept { return groups_; }
  const CorpusConfig& config() const noexcept { return config_; }
  std::size_t document_count() const noexcept;
  std::size_t window_count() const noexcept;
  const SourceGroup* find(const SourceId& id) const noexcept;

 private:
  std::vector<SourceGroup> groups_;
  CorpusConfig config_;
};

/// Lowercases, maps every character outside [a-z0-9] to a separator and
/// collapses runs of separators into single spaces. Idempotent.
std::string normalize_text(std::string_view raw);

std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

/// Splits a normalized document into windows. A trailing partial window is
/// kept only when it holds at least half a window of tokens; scanning stops
/// at the first window that reaches the end of the document.
std::vector<Window> segment(const Document& doc, const CorpusConfig& cfg);

/// Splits a query into non-overlapping chunks of `window_size` tokens. A short
/// tail is kept when it holds at least half a window or is the only chunk.
std::vector<std::vector<std::string>> chunk_query(
    std::span<const std::string> tokens, std::size_t window_size);

/// Reads the line-delimited ingestion format: one JSON object per line with
/// string fields `source_id`, `doc_id` and `text`. Blank lines and lines
/// starting with `#` are skipped.
Corpus load_corpus(const std::filesystem::path& path, const CorpusConfig& cfg);
std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path,
                     std::span<const Document> docs, const std::string& header_json = {});

}  // namespace srcattr::corpus
