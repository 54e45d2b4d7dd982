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
#include "srcattr/encoder.hpp"
#include "srcattr/index.hpp"
#include "srcattr/perturb.hpp"
#include "srcattr/pipeline.hpp"
#include "srcattr/principal.hpp"
#include "srcattr/projection.hpp"
#include "srcattr/trainer.hpp"

namespace srcattr::eval {

struct EvalQuery {
  std::string query_id;
  SourceId truth;
  std::string text;
};

using EvalSet = std::vector<EvalQuery>;

/// Samples up to `per_source` windows from each source's held-out documents
/// (sources in first-seen order). Query ids are `q0000`, `q0001`, ...
EvalSet make_evalset(std::span<const corpus::Document> heldout, const corpus::CorpusConfig& cfg,
                     std::size_t per_source, std::uint64_t seed);

/// One JSON object per line with `query_id`, `source_id`, `text`.
void save_evalset(const std::filesystem::path& path, const EvalSet& set,
                  const std::string& header_json = {});
EvalSet load_evalset(const std::filesystem::path& path);

struct MethodSpec {
  index::Method method = index::Method::SoftKnn;
  std::size_t k = 5;

  std::string label() const;  // e.g. "soft-knn", "hard-knn@10", "centroid"
};

/// Soft kNN (ranked up to 5 sources), hard kNN at k=10 and k=20, centroid.
std::vector<MethodSpec> default_methods();

struct MethodMetrics {
  std::string label;
  index::Method method = index::Method::SoftKnn;
  std::size_t k_used = 0;
  double top1 = 0.0;
  double top3 = 0.0;
  double top5 = 0.0;
  /// truth -> predicted top-1 -> count
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
  double mean_similarity_correct = 0.0;
  double mean_similarity_incorrect = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double centroid_agreement = 0.0;  // top-1 equal to nearest centroid's
  double seconds_per_query = 0.0;   // wall clock; excluded from metric files
};

struct EvalReport {
  std::size_t n_queries = 0;
  std::size_t n_sources = 0;
  std::vector<MethodMetrics> methods;

  const MethodMetrics& at(const std::string& label) const;
};

/// Everything needed to attribute text: frozen encoder, trained projection
/// and the index built from them.
struct AttributionModel {
  std::unique_ptr<encoder::Encoder> encoder;
  contrastive::ProjectionParams params;
  index::EmbeddingIndex index;
  std::size_t window_size = 30;

  index::QueryEmbedder embedder() const { return {params, *encoder, window_size}; }
};

/// Embeds each query, in parallel when threads > 1. Output order follows
/// the input.
std::vector<std::vector<double>> embed_queries(const EvalSet& set,
                                               const index::QueryEmbedder& embedder,
                                               std::size_t threads = 1);

/// Top-1/3/5 accuracy, confusion counts and similarity summaries per
/// method. k values are clamped to what the index can serve. Throws
/// EmptyEvalSet, UnknownSource when a ground truth is not indexed.
EvalReport accuracy(const EvalSet& set, const AttributionModel& model,
                    std::span<const MethodSpec> methods, std::size_t threads = 1);

EvalReport accuracy_from_embeddings(const EvalSet& set,
                                    std::span<const std::vector<double>> embeddings,
                                    const index::EmbeddingIndex& index,
                                    std::span<const MethodSpec> methods,
                                    std::size_t threads = 1);

/// Component-wise mean of reports over repeats; confusion counts are summed.
EvalReport average_reports(std::span<const EvalReport> reports);

struct PipelineRun {
  PipelineConfig config;
  principal::PrincipalSet principal;
  contrastive::LossTrace trace;
  AttributionModel model;
  EvalSet evalset;
  double train_seconds = 0.0;
};

/// Generate or load the corpus, select principal windows, train, index and
/// build the evaluation set, all in memory. A single-source corpus skips
/// training and keeps the initial projection.
PipelineRun run_pipeline(const PipelineConfig& cfg);

struct SweepPoint {
  std::size_t value = 0;  // n_sources or window size
  EvalReport report;
  contrastive::LossTrace trace;
  double train_seconds = 0.0;
};

/// Full pipeline per source count on synthetic corpora. With repeats > 1 the
/// train seed is offset per repeat and reports are averaged.
std::vector<SweepPoint> sweep_sources(const PipelineConfig& cfg,
                                      std::span<const std::size_t> n_sources);

/// Retrains per window size (stride follows the window size).
std::vector<SweepPoint> sweep_window(const PipelineConfig& cfg,
                                     std::span<const std::size_t> window_sizes);

struct AttackDrop {
  perturb::AttackKind kind = perturb::AttackKind::Deletion;
  double ratio = 0.0;
  // Accuracy before and after, soft kNN top-1/3/5 and nearest centroid.
  double baseline_top1 = 0.0, baseline_top3 = 0.0, baseline_top5 = 0.0, baseline_centroid = 0.0;
  double attacked_top1 = 0.0, attacked_top3 = 0.0, attacked_top5 = 0.0, attacked_centroid = 0.0;

  double drop_top1() const { return baseline_top1 - attacked_top1; }
  double drop_top3() const { return baseline_top3 - attacked_top3; }
  double drop_top5() const { return baseline_top5 - attacked_top5; }
  double drop_centroid() const { return baseline_centroid - attacked_centroid; }
};

/// Baseline minus attacked accuracy for every attack spec.
std::vector<AttackDrop> robustness_eval(const EvalSet& set, const AttributionModel& model,
                                        std::span<const perturb::AttackSpec> attacks,
                                        const perturb::SynonymLexicon* lexicon,
                                        std::size_t threads = 1);

/// Aligned plain-text tables. Wall-clock figures are left out so that
/// reruns produce identical tables; see timing_summary.
std::string format_report(const EvalReport& report);
/// Rows top-1/top-3/top-5/centroid, one column per attack, "↓x.x%" cells.
std::string format_robustness(std::span<const AttackDrop> drops);
std::string format_sweep(std::span<const SweepPoint> points, const std::string& value_name);

/// Single-line wall-clock summaries: per-query latency of every method, and
/// training seconds of every sweep point.
std::string timing_summary(const EvalReport& report);
std::string timing_summary(std::span<const SweepPoint> points, const std::string& value_name);

/// Deterministic line-delimited metrics (no wall-clock fields).
std::string metrics_jsonl(const EvalReport& report, const std::string& header_json = {});
std::string robustness_jsonl(std::span<const AttackDrop> drops);

/// Plot-ready CSV: value,epoch,loss and value,top1,top3,top5,centroid.
std::string loss_curves_csv(std::span<const SweepPoint> points);
std::string sweep_accuracy_csv(std::span<const SweepPoint> points, const std::string& value_name);
/// value,train_seconds. Wall clock, so it differs between runs.
std::string sweep_timing_csv(std::span<const SweepPoint> points, const std::string& value_name);

}  // namespace srcattr::eval
