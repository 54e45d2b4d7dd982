#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "srcattr/corpus.hpp"

namespace srcattr::principal {

/// Inverse document frequencies where each source's concatenated text is one
/// document: idf(t) = ln(n_sources / df(t)).
struct TfidfModel {
  std::unordered_map<std::string, double> idf;
  std::size_t n_sources = 0;

  double idf_of(const std::string& token) const;
};

/// Term frequencies of one source: count(token) / source token count.
struct TermFrequencies {
  std::unordered_map<std::string, double> tf;
};

TfidfModel fit_tfidf(const corpus::Corpus& corpus);

TermFrequencies term_frequencies(const corpus::SourceGroup& group);

/// Mean over the window's tokens of tf(token, source) * idf(token).
double score_window(const corpus::Window& w, const TfidfModel& model,
                    const TermFrequencies& tf_scope);

struct ScoredWindow {
  corpus::Window window;
  double score = 0.0;
};

struct SourceSelection {
  SourceId source;
  std::size_t candidate_count = 0;  // windows the source offered
  std::vector<ScoredWindow> selected;  // score descending
};

struct PrincipalSet {
  std::vector<SourceSelection> sources;
  double selection_fraction = 0.15;

  std::size_t total_selected() const noexcept;
};

constexpr double kDefaultFraction = 0.15;

/// max(1, round-half-up(fraction * n)), capped at n.
std::size_t selection_count(double fraction, std::size_t n);

/// Picks the top-scoring windows of every source. Ties are broken by
/// (doc_id, window_index) ascending so the result does not depend on input
/// order. Throws InvalidFraction unless 0 < fraction <= 1.
PrincipalSet select_principal(const corpus::Corpus& corpus,
                              const TfidfModel& model,
                              double fraction = kDefaultFraction);

/// Audit/exchange file: `#`-prefixed header lines, then one row per selected
/// window: source_id, doc_id, window_index, score, text (tab separated).
void save_principal(const std::filesystem::path& path, const PrincipalSet& set,
                    const std::string& header_json = {});
PrincipalSet load_principal(const std::filesystem::path& path);

}  // namespace srcattr::principal
