#include "srcattr/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "srcattr/error.hpp"

namespace srcattr::corpus {

WindowKey key_of(const Window& w) {
  return {w.source.value, w.doc_id, w.window_index};
}

void CorpusConfig::validate() const {
  if (window_size == 0) {
    throw Error(ErrorCode::InvalidConfig, "window_size must be positive");
  }
  if (stride == 0 || stride > window_size) {
    throw Error(ErrorCode::InvalidConfig,
                "stride must satisfy 1 <= stride <= window_size");
  }
}

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (!keep) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] != ' ') ++pos;
    if (pos > start) tokens.emplace_back(text.substr(start, pos - start));
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<Window> segment(const Document& doc, const CorpusConfig& cfg) {
  cfg.validate();
  const auto& tokens = doc.tokens;
  if (tokens.empty()) {
    throw Error(ErrorCode::EmptyDocument, "document '" + doc.doc_id + "' has no tokens");
  }
  std::vector<Window> windows;
  const std::size_t n = tokens.size();
  for (std::size_t start = 0; start < n; start += cfg.stride) {
    const std::size_t end = std::min(start + cfg.window_size, n);
    const std::size_t len = end - start;
    if (2 * len >= cfg.window_size) {
      Window w;
      w.source = doc.source;
      w.doc_id = doc.doc_id;
      w.window_index = windows.size();
      w.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                      tokens.begin() + static_cast<std::ptrdiff_t>(end));
      w.text = join_tokens(w.tokens);
      windows.push_back(std::move(w));
    }
    if (end == n) break;
  }
  return windows;
}

std::vector<std::vector<std::string>> chunk_query(
    std::span<const std::string> tokens, std::size_t window_size) {
  std::vector<std::vector<std::string>> chunks;
  for (std::size_t start = 0; start < tokens.size(); start += window_size) {
    const std::size_t end = std::min(start + window_size, tokens.size());
    const std::size_t len = end - start;
    if (start == 0 || 2 * len >= window_size) {
      chunks.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                          tokens.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return chunks;
}

Corpus Corpus::from_documents(std::vector<Document> docs, CorpusConfig cfg) {
  cfg.validate();
  Corpus c;
  c.config_ = cfg;
  std::unordered_map<std::string, std::size_t> group_of;
  std::set<std::string> seen_ids;
  for (auto& doc : docs) {
    if (doc.source.value.empty()) {
      throw Error(ErrorCode::MalformedRecord,
                  "document '" + doc.doc_id + "' has an empty source_id");
    }
    if (!seen_ids.insert(doc.doc_id).second) {
      throw Error(ErrorCode::DuplicateDocId, "doc_id '" + doc.doc_id + "'");
    }
    doc.tokens = tokenize(normalize_text(doc.raw_text));
    auto windows = segment(doc, cfg);

    auto [it, inserted] = group_of.try_emplace(doc.source.value, c.groups_.size());
    if (inserted) c.groups_.push_back(SourceGroup{doc.source, {}, {}, 0});
    auto& group = c.groups_[it->second];
    group.token_count += doc.tokens.size();
    std::move(windows.begin(), windows.end(), std::back_inserter(group.windows));
    group.documents.push_back(std::move(doc));
  }
  return c;
}

std::size_t Corpus::document_count() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.documents.size();
  return n;
}

std::size_t Corpus::window_count() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.windows.size();
  return n;
}

const SourceGroup* Corpus::find(const SourceId& id) const noexcept {
  for (const auto& g : groups_) {
    if (g.source == id) return &g;
  }
  return nullptr;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw RecordError(ErrorCode::MalformedRecord, line_no, "not a JSON object");
    }
    for (const char* field : {"source_id", "doc_id", "text"}) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        throw RecordError(ErrorCode::MalformedRecord, line_no,
                          std::string("missing string field '") + field + "'");
      }
    }
    Document d;
    d.source.value = rec["source_id"].get<std::string>();
    d.doc_id = rec["doc_id"].get<std::string>();
    d.raw_text = rec["text"].get<std::string>();
    if (d.source.value.empty()) {
      throw RecordError(ErrorCode::MalformedRecord, line_no, "empty source_id");
    }
    if (normalize_text(d.raw_text).empty()) {
      throw RecordError(ErrorCode::EmptyDocument, line_no,
                        "text is empty after normalization");
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusConfig& cfg) {
  return Corpus::from_documents(read_documents(path), cfg);
}

void write_documents(const std::filesystem::path& path,
                     std::span<const Document> docs, const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  for (const auto& d : docs) {
    nlohmann::ordered_json rec;
    rec["source_id"] = d.source.value;
    rec["doc_id"] = d.doc_id;
    rec["text"] = d.raw_text;
    out << rec.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace srcattr::corpus
