#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "srcattr/corpus.hpp"

namespace srcattr::corpus {

/// Parameters of the synthetic multi-source corpus generator.
///
/// Each source owns a random topic set of `topic_size` vocabulary words. A
/// token is drawn from the source's topic set with probability
/// `topic_fraction`, otherwise from a Zipf-distributed background over the
/// whole vocabulary shared by all sources. Text is emitted with sentence
/// capitalization and punctuation so ingestion exercises normalization.
struct SyntheticSpec {
  std::size_t n_sources = 25;
  std::size_t docs_per_source = 20;
  std::size_t heldout_docs_per_source = 1;
  std::size_t tokens_per_doc = 600;
  std::size_t vocabulary_size = 5000;
  double topic_fraction = 0.5;
  std::size_t topic_size = 40;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<Document> train;
  std::vector<Document> heldout;
};

SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

/// Deterministic pseudo-word for vocabulary slot `index`.
std::string vocabulary_word(std::size_t index, std::size_t vocabulary_size);

std::string source_name(std::size_t index);

}  // namespace srcattr::corpus
