#include "srcattr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "srcattr/error.hpp"

namespace srcattr::corpus {
namespace {

constexpr std::array<const char*, 20> kSyllables = {
    "ka", "lo", "mi", "ne", "ru", "ta", "vo", "shi", "da", "pe",
    "gu", "zo", "bri", "fa", "ti", "mo", "sel", "an", "qu", "dri"};

std::size_t syllables_needed(std::size_t vocabulary_size) {
  std::size_t len = 2;
  std::size_t capacity = kSyllables.size() * kSyllables.size();
  while (capacity < vocabulary_size) {
    capacity *= kSyllables.size();
    ++len;
  }
  return len;
}

class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) : cumulative_(n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += 1.0 / static_cast<double>(i + 1);
      cumulative_[i] = total;
    }
    for (auto& c : cumulative_) c /= total;
  }

  template <class Rng>
  std::size_t operator()(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

std::string render_text(const std::vector<std::size_t>& ids,
                        std::size_t vocabulary_size, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> sentence_len(6, 18);
  std::string text;
  int remaining = sentence_len(rng);
  bool sentence_start = true;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::string word = vocabulary_word(ids[i], vocabulary_size);
    if (sentence_start) {
      word[0] = static_cast<char>(word[0] - 'a' + 'A');
      sentence_start = false;
    }
    if (!text.empty()) text.push_back(' ');
    text += word;
    if (--remaining == 0 || i + 1 == ids.size()) {
      text.push_back(i % 5 == 0 ? '!' : '.');
      remaining = sentence_len(rng);
      sentence_start = true;
    } else if (remaining % 7 == 0) {
      text.push_back(',');
    }
  }
  return text;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_sources == 0 || docs_per_source == 0 || tokens_per_doc == 0) {
    throw Error(ErrorCode::InvalidConfig,
                "n_sources, docs_per_source and tokens_per_doc must be positive");
  }
  if (vocabulary_size < 2 || topic_size == 0 || topic_size > vocabulary_size) {
    throw Error(ErrorCode::InvalidConfig,
                "need vocabulary_size >= 2 and 1 <= topic_size <= vocabulary_size");
  }
  if (!(topic_fraction >= 0.0 && topic_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "topic_fraction must lie in [0, 1]");
  }
}

std::string vocabulary_word(std::size_t index, std::size_t vocabulary_size) {
  const std::size_t len = syllables_needed(vocabulary_size);
  std::string word;
  for (std::size_t i = 0; i < len; ++i) {
    word += kSyllables[index % kSyllables.size()];
    index /= kSyllables.size();
  }
  return word;
}

std::string source_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "source-%03zu", index);
  return buf;
}

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const ZipfSampler background(spec.vocabulary_size);

  // Background ranks are a fixed permutation of the vocabulary so frequent
  // words are not simply the lowest indices.
  std::vector<std::size_t> rank_to_word(spec.vocabulary_size);
  std::iota(rank_to_word.begin(), rank_to_word.end(), std::size_t{0});
  std::shuffle(rank_to_word.begin(), rank_to_word.end(), rng);

  SyntheticCorpus out;
  std::bernoulli_distribution from_topic(spec.topic_fraction);
  std::uniform_int_distribution<std::size_t> pick_topic(0, spec.topic_size - 1);
  std::vector<std::size_t> all_words(spec.vocabulary_size);
  std::iota(all_words.begin(), all_words.end(), std::size_t{0});

  for (std::size_t s = 0; s < spec.n_sources; ++s) {
    std::vector<std::size_t> topic;
    std::sample(all_words.begin(), all_words.end(), std::back_inserter(topic),
                static_cast<std::ptrdiff_t>(spec.topic_size), rng);
    std::shuffle(topic.begin(), topic.end(), rng);

    const std::size_t total_docs = spec.docs_per_source + spec.heldout_docs_per_source;
    for (std::size_t d = 0; d < total_docs; ++d) {
      std::vector<std::size_t> ids(spec.tokens_per_doc);
      for (auto& id : ids) {
        id = from_topic(rng) ? topic[pick_topic(rng)] : rank_to_word[background(rng)];
      }
      Document doc;
      doc.source.value = source_name(s);
      const bool heldout = d >= spec.docs_per_source;
      char buf[64];
      std::snprintf(buf, sizeof buf, "s%03zu-%s%02zu", s, heldout ? "h" : "d",
                    heldout ? d - spec.docs_per_source : d);
      doc.doc_id = buf;
      doc.raw_text = render_text(ids, spec.vocabulary_size, rng);
      (heldout ? out.heldout : out.train).push_back(std::move(doc));
    }
  }
  return out;
}

}  // namespace srcattr::corpus
