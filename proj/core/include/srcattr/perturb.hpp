#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srcattr::perturb {

enum class AttackKind { Deletion, Synonym, Paraphrase };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

struct AttackSpec {
  AttackKind kind = AttackKind::Deletion;
  double ratio = 0.0;  // ignored for paraphrase
  std::uint64_t seed = 0;
  std::filesystem::path lexicon_path;  // synonym
  std::string command;                 // paraphrase, run through /bin/sh -c
  std::chrono::milliseconds timeout{30000};
  std::size_t max_parallel = 1;        // concurrent paraphrase processes

  void validate() const;
};

/// token -> non-empty list of replacement tokens, all normalized.
struct SynonymLexicon {
  std::map<std::string, std::vector<std::string>> entries;
};

/// Line format: `token<TAB>syn1,syn2,...`. Entries are normalized and a
/// token's own spelling is dropped from its list. Throws EmptyLexicon when no
/// usable entry remains, MalformedRecord when a token maps only to itself.
SynonymLexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const std::filesystem::path& path, const SynonymLexicon& lexicon,
                  const std::string& header_json = {});

/// Synonyms drawn from the vocabulary of a synthetic corpus, for tests and
/// demos. Each word gets `per_word` other words.
SynonymLexicon synthetic_lexicon(std::size_t vocabulary_size, std::size_t per_word,
                                 std::uint64_t seed);

struct Edit {
  std::size_t position = 0;  // token position in the input
  std::string before;
  std::string after;  // empty for deletions
};

struct PerturbResult {
  std::string text;
  std::vector<Edit> edits;
  std::size_t target = 0;     // floor(ratio * n_tokens)
  std::size_t shortfall = 0;  // targets that could not be applied
};

/// floor(ratio * n) with a small slack so 0.15 * 20 yields 3.
std::size_t target_count(double ratio, std::size_t n_tokens);

/// Removes floor(ratio * n) distinct uniformly chosen token positions.
/// Operates on normalized tokens; survivors keep their order. With a zero
/// target the input is returned untouched.
PerturbResult delete_words(std::string_view text, double ratio, std::uint64_t seed);

/// Replaces floor(ratio * n) tokens that have a lexicon entry, positions and
/// replacements chosen uniformly. Missing eligible positions are recorded as
/// shortfall. Throws EmptyLexicon for an empty lexicon.
PerturbResult substitute_synonyms(std::string_view text, double ratio, std::uint64_t seed,
                                  const SynonymLexicon& lexicon);

/// Pipes `text` to `/bin/sh -c command` and returns its normalized stdout.
/// Throws HookFailed on spawn failure, nonzero exit, timeout or empty output.
std::string paraphrase(std::string_view text, const std::string& command,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds{30000});

struct QueryText {
  std::string query_id;
  std::string text;
};

struct ManifestEntry {
  std::string query_id;
  AttackKind kind = AttackKind::Deletion;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t target = 0;
  std::size_t shortfall = 0;
  std::vector<Edit> edits;
};

struct AttackBatch {
  std::vector<QueryText> perturbed;
  std::vector<ManifestEntry> manifest;
};

/// Applies `spec` to every query; query i uses seed spec.seed + i. The
/// lexicon is required for synonym attacks.
AttackBatch attack_batch(std::span<const QueryText> queries, const AttackSpec& spec,
                         const SynonymLexicon* lexicon = nullptr);

/// One JSON object per line: query_id, kind, ratio, seed, target, shortfall,
/// edits ([position, before, after] triples).
void save_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> manifest,
                   const std::string& header_json = {});

}  // namespace srcattr::perturb
