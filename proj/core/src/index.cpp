#include "srcattr/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "srcattr/error.hpp"
#include "srcattr/io_util.hpp"

namespace srcattr::index {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_of(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

Centroid centroid_of(std::span<const std::vector<double>> members, SourceId source) {
  if (members.empty()) {
    throw Error(ErrorCode::DegenerateCluster, "cluster '" + source.value + "' has no members");
  }
  Centroid c;
  c.source = std::move(source);
  c.sum.assign(members.front().size(), 0.0);
  for (const auto& m : members) {
    if (m.size() != c.sum.size()) throw Error(ErrorCode::DimensionMismatch, "ragged cluster");
    const double n = norm_of(m);
    if (n == 0.0) throw Error(ErrorCode::DegenerateCluster, "zero-length member vector");
    for (std::size_t i = 0; i < m.size(); ++i) c.sum[i] += m[i] / n;
  }
  c.norm = norm_of(c.sum);
  if (c.norm < kDegenerateNorm) {
    throw Error(ErrorCode::DegenerateCluster,
                "members of '" + c.source.value + "' cancel out");
  }
  c.direction = c.sum;
  for (double& x : c.direction) x /= c.norm;
  return c;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::HardKnn: return "hard-knn";
    case Method::SoftKnn: return "soft-knn";
    case Method::Centroid: return "centroid";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "hard-knn") return Method::HardKnn;
  if (name == "soft-knn") return Method::SoftKnn;
  if (name == "centroid") return Method::Centroid;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(name) +
                                            "' (expected hard-knn, soft-knn or centroid)");
}

EmbeddingIndex::EmbeddingIndex(std::vector<IndexEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::EmptyCorpus, "index needs at least one entry");
  dim_ = entries_.front().z.size();
  std::unordered_map<std::string, std::size_t> slot_of;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.z.size() != dim_ || dim_ == 0) {
      throw Error(ErrorCode::DimensionMismatch, "entry " + std::to_string(i) + " has wrong dim");
    }
    if (std::abs(norm_of(e.z) - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::InvalidConfig, "entry " + std::to_string(i) + " is not unit norm");
    }
    auto [it, inserted] = slot_of.try_emplace(e.source.value, members_.size());
    if (inserted) members_.emplace_back();
    members_[it->second].push_back(i);
  }
  centroids_.reserve(members_.size());
  for (const auto& slot : members_) {
    std::vector<std::vector<double>> zs;
    zs.reserve(slot.size());
    for (auto idx : slot) zs.push_back(entries_[idx].z);
    centroids_.push_back(centroid_of(zs, entries_[slot.front()].source));
  }
}

double EmbeddingIndex::distance(std::span<const double> q, std::size_t entry) const {
  return 1.0 - dot(q, entries_[entry].z);
}

std::size_t EmbeddingIndex::centroid_slot(const SourceId& source) const {
  for (std::size_t s = 0; s < centroids_.size(); ++s) {
    if (centroids_[s].source == source) return s;
  }
  throw Error(ErrorCode::UnknownSource, source.value);
}

std::vector<Neighbor> EmbeddingIndex::rank_entries(std::span<const double> q) const {
  if (q.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "query dim differs from index");
  std::vector<Neighbor> all(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) all[i] = {i, distance(q, i)};
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.entry < b.entry;
  });
  return all;
}

Evidence EmbeddingIndex::evidence_for(std::span<const double> q, const SourceId& source) const {
  const auto& slot = members_[centroid_slot(source)];
  std::size_t best = slot.front();
  double best_d = distance(q, best);
  for (std::size_t idx : slot) {
    const double d = distance(q, idx);
    if (d < best_d) {
      best = idx;
      best_d = d;
    }
  }
  const auto& e = entries_[best];
  return {e.doc_id, e.window_index, e.text, 1.0 - best_d};
}

AttributionResult EmbeddingIndex::hard_knn(std::span<const double> q, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
  if (k > entries_.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " +
                                          std::to_string(entries_.size()) + " entries");
  }
  const auto ranked = rank_entries(q);

  struct Tally {
    std::size_t votes = 0;
    double distance_sum = 0.0;
    std::size_t nearest = 0;  // position in `ranked`
  };
  std::vector<std::pair<std::string, Tally>> tallies;
  for (std::size_t r = 0; r < k; ++r) {
    const auto& src = entries_[ranked[r].entry].source.value;
    auto it = std::find_if(tallies.begin(), tallies.end(),
                           [&](const auto& t) { return t.first == src; });
    if (it == tallies.end()) {
      tallies.push_back({src, Tally{0, 0.0, r}});
      it = std::prev(tallies.end());
    }
    ++it->second.votes;
    it->second.distance_sum += ranked[r].distance;
  }
  const auto winner = std::min_element(tallies.begin(), tallies.end(), [](const auto& a, const auto& b) {
    if (a.second.votes != b.second.votes) return a.second.votes > b.second.votes;
    if (a.second.distance_sum != b.second.distance_sum) {
      return a.second.distance_sum < b.second.distance_sum;
    }
    return a.first < b.first;
  });

  const auto& nearest = ranked[winner->second.nearest];
  const auto& e = entries_[nearest.entry];
  const double sim = 1.0 - nearest.distance;
  AttributionResult out{Method::HardKnn, k, {}};
  out.ranked.push_back({e.source, sim, winner->second.votes, {e.doc_id, e.window_index, e.text, sim}});
  return out;
}

AttributionResult EmbeddingIndex::soft_knn(std::span<const double> q, std::size_t k_sources) const {
  if (k_sources == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
  if (k_sources > centroids_.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k_sources) + " exceeds " +
                                          std::to_string(centroids_.size()) + " sources");
  }
  AttributionResult out{Method::SoftKnn, k_sources, {}};
  for (const auto& n : rank_entries(q)) {
    const auto& e = entries_[n.entry];
    const bool seen = std::any_of(out.ranked.begin(), out.ranked.end(),
                                  [&](const RankedSource& r) { return r.source == e.source; });
    if (seen) continue;
    const double sim = 1.0 - n.distance;
    out.ranked.push_back({e.source, sim, 0, {e.doc_id, e.window_index, e.text, sim}});
    if (out.ranked.size() == k_sources) break;
  }
  return out;
}

AttributionResult EmbeddingIndex::nearest_centroid(std::span<const double> q, bool with_evidence) const {
  if (q.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "query dim differs from index");
  AttributionResult out{Method::Centroid, centroids_.size(), {}};
  out.ranked.reserve(centroids_.size());
  for (const auto& c : centroids_) out.ranked.push_back({c.source, dot(q, c.direction), 0, {}});
  std::sort(out.ranked.begin(), out.ranked.end(), [](const RankedSource& a, const RankedSource& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.source < b.source;
  });
  if (with_evidence) {
    for (auto& r : out.ranked) r.evidence = evidence_for(q, r.source);
  }
  return out;
}

AttributionResult EmbeddingIndex::attribute(std::span<const double> q, Method method,
                                            std::size_t k) const {
  switch (method) {
    case Method::HardKnn: return hard_knn(q, k);
    case Method::SoftKnn: return soft_knn(q, k);
    case Method::Centroid: {
      auto r = nearest_centroid(q);
      if (k > 0 && k < r.ranked.size()) r.ranked.resize(k);
      return r;
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown method");
}

EmbeddingIndex build_index(const principal::PrincipalSet& principal,
                           const contrastive::ProjectionParams& params,
                           const encoder::Encoder& encoder) {
  std::vector<IndexEntry> entries;
  entries.reserve(principal.total_selected());
  for (const auto& s : principal.sources) {
    for (const auto& sw : s.selected) {
      const auto base = encoder.encode(sw.window);
      entries.push_back({contrastive::project(base, params), s.source, sw.window.doc_id,
                         sw.window.window_index, sw.window.text});
    }
  }
  return EmbeddingIndex(std::move(entries));
}

QueryEmbedder::QueryEmbedder(const contrastive::ProjectionParams& params,
                             const encoder::Encoder& encoder, std::size_t window_size)
    : params_(&params), encoder_(&encoder), window_size_(window_size) {
  if (window_size_ == 0) throw Error(ErrorCode::InvalidConfig, "window_size must be positive");
}

std::size_t QueryEmbedder::window_count(std::string_view text) const {
  const auto tokens = corpus::tokenize(corpus::normalize_text(text));
  return corpus::chunk_query(tokens, window_size_).size();
}

std::vector<double> QueryEmbedder::embed(std::string_view text, std::string_view query_id) const {
  const auto tokens = corpus::tokenize(corpus::normalize_text(text));
  if (tokens.empty()) throw Error(ErrorCode::EmptyQuery, "query has no tokens after normalization");
  const auto chunks = corpus::chunk_query(tokens, window_size_);

  std::vector<double> pooled;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    corpus::Window w;
    w.source.value = std::string(kQuerySource);
    w.doc_id = std::string(query_id);
    w.window_index = i;
    w.tokens = chunks[i];
    w.text = corpus::join_tokens(w.tokens);
    auto z = contrastive::project(encoder_->encode(w), *params_);
    if (chunks.size() == 1) return z;
    if (pooled.empty()) pooled.assign(z.size(), 0.0);
    for (std::size_t k = 0; k < z.size(); ++k) pooled[k] += z[k];
  }
  for (double& x : pooled) x /= static_cast<double>(chunks.size());
  const double n = norm_of(pooled) + contrastive::kNormEpsilon;
  for (double& x : pooled) x /= n;
  return pooled;
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path,
                const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  out << "srcattr-index v1\n" << "dim=" << index.dim() << '\n';
  for (const auto& e : index.entries()) {
    out << e.source.value << '\t' << e.doc_id << '\t' << e.window_index << '\t';
    for (std::size_t i = 0; i < e.z.size(); ++i) {
      if (i) out << ',';
      out << io::format_double(e.z[i]);
    }
    out << '\t' << e.text << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open index " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool have_magic = false;
  std::vector<IndexEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!have_magic) {
      if (line != "srcattr-index v1") {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "not a srcattr index file");
      }
      have_magic = true;
      continue;
    }
    if (dim == 0) {
      if (line.rfind("dim=", 0) != 0) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "expected dim=<D>");
      }
      dim = io::parse_size(std::string_view(line).substr(4), line_no);
      continue;
    }
    const auto f = io::split(line, '\t');
    if (f.size() != 5) throw RecordError(ErrorCode::MalformedRecord, line_no, "expected 5 fields");
    IndexEntry e;
    e.source.value = f[0];
    e.doc_id = f[1];
    e.window_index = io::parse_size(f[2], line_no);
    for (const auto& v : io::split(f[3], ',')) e.z.push_back(io::parse_double(v, line_no));
    if (e.z.size() != dim) throw RecordError(ErrorCode::DimensionMismatch, line_no, "row dim");
    e.text = f[4];
    entries.push_back(std::move(e));
  }
  return EmbeddingIndex(std::move(entries));
}

void export_embeddings(const EmbeddingIndex& index, const std::filesystem::path& path,
                       const std::string& header_json) {
  std::vector<encoder::ExportRow> rows;
  rows.reserve(index.entries().size());
  for (const auto& e : index.entries()) {
    rows.push_back({{e.source.value, e.doc_id, e.window_index}, e.z, e.source.value});
  }
  encoder::save_external(path, index.dim(), rows, header_json);
}

}  // namespace srcattr::index
