// srcattr: stage-by-stage command line for the attribution pipeline.
//
//   srcattr gen        synthetic corpus, held-out eval set and lexicon
//   srcattr ingest     principal windows from a corpus
//   srcattr train      projection network checkpoint
//   srcattr index      embedding index over the principal windows
//   srcattr attribute  rank sources for free text
//   srcattr eval       accuracy report, attack drops, sweeps
//   srcattr attack     perturbed copies of the eval set
//   srcattr export     embeddings in the exchange format
//
// Every stage reads its inputs from and writes its artifacts to the output
// directory (--out-dir, or SRCATTR_OUT_DIR, default "."). Options may also be
// given in a key=value file passed with --config; flags win.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "srcattr/checkpoint.hpp"
#include "srcattr/error.hpp"
#include "srcattr/evalharness.hpp"
#include "srcattr/io_util.hpp"
#include "srcattr/perturb.hpp"
#include "srcattr/pipeline.hpp"

namespace fs = std::filesystem;
using srcattr::Error;
using srcattr::ErrorCode;
using namespace srcattr;

namespace {

struct Options {
  std::string preset = "paper";
  fs::path out_dir = ".";

  std::optional<std::size_t> n_sources, docs_per_source, heldout_docs, tokens_per_doc,
      vocabulary_size, topic_size;
  std::optional<double> topic_fraction;
  std::optional<std::uint64_t> corpus_seed;
  std::size_t synonyms_per_word = 3;

  std::optional<fs::path> corpus, evalset;
  std::optional<std::size_t> window_size, stride;
  std::optional<double> fraction;

  std::optional<std::string> encoder_kind;
  std::optional<std::size_t> base_dim;
  std::optional<std::vector<std::size_t>> ngram_orders;
  std::optional<std::uint64_t> hash_seed;
  std::optional<fs::path> embeddings;

  std::optional<double> temperature, learning_rate;
  std::optional<std::size_t> batch_size, epochs, output_dim;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::vector<std::size_t>> hidden_dims;

  std::optional<std::string> method;
  std::optional<std::size_t> k, queries_per_source, repeats, threads;
  std::optional<std::uint64_t> eval_seed;

  std::vector<std::string> attacks;
  std::uint64_t attack_seed = 0;
  std::optional<fs::path> lexicon;
  std::string paraphrase_command;
  std::size_t paraphrase_timeout_ms = 30000;
  std::size_t max_parallel = 1;
};

/// Stage failures carry the stage name into the diagnostic.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

PipelineConfig resolve(const Options& o) {
  PipelineConfig c = o.preset == "desk" ? desk_preset() : PipelineConfig{};
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(c.synthetic.n_sources, o.n_sources);
  set(c.synthetic.docs_per_source, o.docs_per_source);
  set(c.synthetic.heldout_docs_per_source, o.heldout_docs);
  set(c.synthetic.tokens_per_doc, o.tokens_per_doc);
  set(c.synthetic.vocabulary_size, o.vocabulary_size);
  set(c.synthetic.topic_fraction, o.topic_fraction);
  set(c.synthetic.topic_size, o.topic_size);
  set(c.synthetic.seed, o.corpus_seed);
  c.corpus_path = o.corpus ? *o.corpus : o.out_dir / "corpus.jsonl";
  c.evalset_path = o.evalset ? *o.evalset : o.out_dir / "evalset.jsonl";
  set(c.corpus.window_size, o.window_size);
  c.corpus.stride = o.stride ? *o.stride : c.corpus.window_size;
  set(c.fraction, o.fraction);
  if (o.encoder_kind) {
    if (*o.encoder_kind == "hashed-ngram") {
      c.encoder.kind = encoder::EncoderKind::HashedNgram;
    } else if (*o.encoder_kind == "external-file") {
      c.encoder.kind = encoder::EncoderKind::ExternalFile;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown encoder '" + *o.encoder_kind + "'");
    }
  }
  set(c.encoder.base_dim, o.base_dim);
  set(c.encoder.ngram_orders, o.ngram_orders);
  set(c.encoder.hash_seed, o.hash_seed);
  set(c.encoder.external_path, o.embeddings);
  set(c.train.temperature, o.temperature);
  set(c.train.learning_rate, o.learning_rate);
  set(c.train.batch_size, o.batch_size);
  set(c.train.epochs, o.epochs);
  set(c.train.seed, o.train_seed);
  set(c.train.hidden_dims, o.hidden_dims);
  set(c.train.output_dim, o.output_dim);
  if (o.method) c.method = index::parse_method(*o.method);
  set(c.k, o.k);
  set(c.queries_per_source, o.queries_per_source);
  set(c.eval_seed, o.eval_seed);
  set(c.repeats, o.repeats);
  set(c.threads, o.threads);
  return c;
}

fs::path require(const fs::path& p, const std::string& what, const std::string& producer) {
  if (!fs::exists(p)) {
    throw StageError("missing " + what + " '" + p.string() + "' (run `srcattr " + producer +
                     "` first)");
  }
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

std::vector<perturb::AttackSpec> parse_attacks(const Options& o) {
  std::vector<perturb::AttackSpec> specs;
  for (const auto& item : o.attacks) {
    perturb::AttackSpec s;
    const auto colon = item.find(':');
    s.kind = perturb::parse_attack_kind(item.substr(0, colon));
    if (colon != std::string::npos) s.ratio = io::parse_double(item.substr(colon + 1), 0);
    s.seed = o.attack_seed;
    s.command = o.paraphrase_command;
    s.timeout = std::chrono::milliseconds(o.paraphrase_timeout_ms);
    s.max_parallel = o.max_parallel;
    s.validate();
    specs.push_back(s);
  }
  return specs;
}

std::string attack_tag(const perturb::AttackSpec& s) {
  std::string tag(perturb::to_string(s.kind));
  if (s.kind != perturb::AttackKind::Paraphrase) tag += "-" + io::format_double(s.ratio);
  return tag;
}

fs::path lexicon_path(const Options& o) {
  return o.lexicon ? *o.lexicon : o.out_dir / "lexicon.tsv";
}

/// Rebuilds the model from the checkpoint and index artifacts. The encoder
/// and window size come from the config stored in the checkpoint so queries
/// are embedded exactly as the training windows were.
eval::AttributionModel load_model(const Options& o, const PipelineConfig& fallback) {
  const auto ckpt = contrastive::checkpoint_load(
      require(o.out_dir / "model.ckpt", "checkpoint", "train"));
  const PipelineConfig trained =
      ckpt.meta.empty() ? fallback : pipeline_config_from_json(ckpt.meta);
  eval::AttributionModel m;
  m.encoder = encoder::make_encoder(trained.encoder);
  m.params = ckpt.params;
  m.window_size = trained.corpus.window_size;
  m.index = index::load_index(require(o.out_dir / "index.tsv", "index", "index"));
  if (m.encoder->dim() != m.params.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "encoder dim " + std::to_string(m.encoder->dim()) +
                                                  " does not match checkpoint input dim " +
                                                  std::to_string(m.params.input_dim()));
  }
  return m;
}

int cmd_gen(const Options& o, const PipelineConfig& c) {
  const auto json = to_json(c);
  const auto synth = corpus::generate_corpus(c.synthetic);
  fs::create_directories(o.out_dir);
  corpus::write_documents(o.out_dir / "corpus.jsonl", synth.train, json);
  corpus::write_documents(o.out_dir / "heldout.jsonl", synth.heldout, json);
  const auto set = eval::make_evalset(synth.heldout, c.corpus, c.queries_per_source, c.eval_seed);
  eval::save_evalset(o.out_dir / "evalset.jsonl", set, json);
  const auto lex =
      perturb::synthetic_lexicon(c.synthetic.vocabulary_size, o.synonyms_per_word, c.synthetic.seed);
  perturb::save_lexicon(o.out_dir / "lexicon.tsv", lex, json);
  std::printf("wrote %zu training and %zu held-out documents, %zu queries, %zu lexicon entries to %s\n",
              synth.train.size(), synth.heldout.size(), set.size(), lex.entries.size(),
              o.out_dir.string().c_str());
  return 0;
}

int cmd_ingest(const Options& o, const PipelineConfig& c) {
  const auto docs = corpus::read_documents(require(c.corpus_path, "corpus", "gen"));
  const auto corpus = corpus::Corpus::from_documents(docs, c.corpus);
  const auto tfidf = principal::fit_tfidf(corpus);
  const auto set = principal::select_principal(corpus, tfidf, c.fraction);
  fs::create_directories(o.out_dir);
  principal::save_principal(o.out_dir / "principal.tsv", set, to_json(c));
  std::printf("%zu sources, %zu documents, %zu windows, %zu principal windows\n",
              corpus.sources().size(), corpus.document_count(), corpus.window_count(),
              set.total_selected());
  return 0;
}

int cmd_train(const Options& o, const PipelineConfig& c) {
  const auto set = principal::load_principal(require(o.out_dir / "principal.tsv",
                                                     "principal set", "ingest"));
  const auto enc = encoder::make_encoder(c.encoder);
  const auto result = contrastive::train(set, *enc, c.train);
  const auto json = to_json(c);
  contrastive::checkpoint_save(result.params, o.out_dir / "model.ckpt", json);
  std::string csv = "#config " + json + "\nepoch,loss\n";
  for (std::size_t e = 0; e < result.trace.epoch_mean_loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + io::format_double(result.trace.epoch_mean_loss[e]) + "\n";
  }
  write_text(o.out_dir / "loss.csv", csv);
  const auto& trace = result.trace.epoch_mean_loss;
  std::printf("trained %zu epochs, loss %.4f -> %.4f\n", trace.size(),
              trace.empty() ? 0.0 : trace.front(), trace.empty() ? 0.0 : trace.back());
  return 0;
}

int cmd_index(const Options& o, const PipelineConfig& c) {
  const auto ckpt = contrastive::checkpoint_load(
      require(o.out_dir / "model.ckpt", "checkpoint", "train"));
  const auto set = principal::load_principal(require(o.out_dir / "principal.tsv",
                                                     "principal set", "ingest"));
  const PipelineConfig trained = ckpt.meta.empty() ? c : pipeline_config_from_json(ckpt.meta);
  const auto enc = encoder::make_encoder(trained.encoder);
  const auto idx = index::build_index(set, ckpt.params, *enc);
  index::save_index(idx, o.out_dir / "index.tsv", ckpt.meta.empty() ? to_json(c) : ckpt.meta);
  std::printf("indexed %zu windows from %zu sources\n", idx.entries().size(), idx.source_count());
  return 0;
}

int cmd_attribute(const Options& o, const PipelineConfig& c, const std::vector<std::string>& texts,
                  const std::optional<fs::path>& query_file) {
  std::vector<std::string> queries = texts;
  if (query_file) {
    std::ifstream in(require(*query_file, "query file", "gen"));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) queries.push_back(line);
    }
  }
  if (queries.empty()) throw Error(ErrorCode::EmptyQuery, "no query text given (--text or --query-file)");
  const auto model = load_model(o, c);
  const auto embedder = model.embedder();
  std::ofstream records(o.out_dir / "attributions.jsonl");
  if (!records) throw Error(ErrorCode::IoError, "cannot write " + (o.out_dir / "attributions.jsonl").string());
  records << "#config " << to_json(c) << '\n';
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    char query_id[16];
    std::snprintf(query_id, sizeof query_id, "a%04zu", qi);
    const auto q = embedder.embed(queries[qi], query_id);
    const auto r = model.index.attribute(q, c.method, c.k);
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      const auto& s = r.ranked[i];
      nlohmann::ordered_json rec = {{"query_id", query_id},
                                    {"method", index::to_string(c.method)},
                                    {"rank", i + 1},
                                    {"source_id", s.source.value},
                                    {"similarity", s.similarity},
                                    {"evidence_doc_id", s.evidence.doc_id},
                                    {"evidence_window_index", s.evidence.window_index}};
      records << rec.dump() << '\n';
    }
    std::printf("query %zu  method=%s k=%zu\n", qi, std::string(index::to_string(c.method)).c_str(), c.k);
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      const auto& s = r.ranked[i];
      std::printf("  %zu. %s  similarity=%.4f", i + 1, s.source.value.c_str(), s.similarity);
      if (c.method == index::Method::HardKnn) std::printf("  votes=%zu", s.votes);
      std::printf("\n");
      if (!s.evidence.doc_id.empty()) {
        std::printf("     evidence %s#%zu (%.4f): %s\n", s.evidence.doc_id.c_str(),
                    s.evidence.window_index, s.evidence.similarity, s.evidence.text.c_str());
      }
    }
  }
  return 0;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int cmd_eval(const Options& o, const PipelineConfig& c, const std::vector<std::size_t>& sweep_sources,
             const std::vector<std::size_t>& sweep_windows) {
  const auto start = std::chrono::steady_clock::now();
  const auto json = to_json(c);
  std::string body;
  std::string timing;
  bool any = false;

  if (!sweep_sources.empty()) {
    const auto points = eval::sweep_sources(c, sweep_sources);
    body += "\nsource-count sweep (soft kNN, repeats=" + std::to_string(c.repeats) + ")\n" +
            eval::format_sweep(points, "sources");
    write_text(o.out_dir / "sweep_sources.csv", "#config " + json + "\n" +
                                                    eval::sweep_accuracy_csv(points, "sources"));
    write_text(o.out_dir / "loss_curves_sources.csv",
               "#config " + json + "\n" + eval::loss_curves_csv(points));
    write_text(o.out_dir / "timing_sources.csv", eval::sweep_timing_csv(points, "sources"));
    timing += " " + eval::timing_summary(points, "sources");
    any = true;
  }
  if (!sweep_windows.empty()) {
    const auto points = eval::sweep_window(c, sweep_windows);
    body += "\nwindow-size sweep (soft kNN, repeats=" + std::to_string(c.repeats) + ")\n" +
            eval::format_sweep(points, "window");
    write_text(o.out_dir / "sweep_window.csv",
               "#config " + json + "\n" + eval::sweep_accuracy_csv(points, "window"));
    write_text(o.out_dir / "loss_curves_window.csv",
               "#config " + json + "\n" + eval::loss_curves_csv(points));
    write_text(o.out_dir / "timing_window.csv", eval::sweep_timing_csv(points, "window"));
    timing += " " + eval::timing_summary(points, "window");
    any = true;
  }

  const bool have_model = fs::exists(o.out_dir / "model.ckpt") || !any;
  if (have_model) {
    const auto set = eval::load_evalset(require(c.evalset_path, "eval set", "gen"));
    const auto model = load_model(o, c);
    const auto methods = eval::default_methods();
    const auto report = eval::accuracy(set, model, methods, c.threads);
    body += "\nattribution accuracy\n" + eval::format_report(report);
    timing += " " + eval::timing_summary(report);
    write_text(o.out_dir / "metrics.jsonl", eval::metrics_jsonl(report, json));

    const auto attacks = parse_attacks(o);
    if (!attacks.empty()) {
      std::optional<perturb::SynonymLexicon> lex;
      for (const auto& a : attacks) {
        if (a.kind == perturb::AttackKind::Synonym && !lex) {
          lex = perturb::load_lexicon(require(lexicon_path(o), "lexicon", "gen"));
        }
      }
      const auto drops = eval::robustness_eval(set, model, attacks, lex ? &*lex : nullptr, c.threads);
      body += "\naccuracy drop under attack (soft kNN k=5, nearest centroid)\n" +
              eval::format_robustness(drops);
      write_text(o.out_dir / "robustness.jsonl", "#config " + json + "\n" + eval::robustness_jsonl(drops));
    }
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Everything that varies between reruns stays on this first line.
  char elapsed[32];
  std::snprintf(elapsed, sizeof elapsed, "elapsed=%.2fs", secs);
  const std::string head = "# srcattr eval report " + utc_now() + " " + elapsed + timing + "\n";
  write_text(o.out_dir / "report.txt", head + "#config " + json + "\n" + body);
  std::fputs(body.c_str() + (body.empty() ? 0 : 1), stdout);
  std::printf("\n%s", head.c_str() + 2);
  return 0;
}

int cmd_attack(const Options& o, const PipelineConfig& c) {
  const auto attacks = parse_attacks(o);
  if (attacks.empty()) throw Error(ErrorCode::InvalidConfig, "no attacks given (--attacks kind[:ratio])");
  const auto set = eval::load_evalset(require(c.evalset_path, "eval set", "gen"));
  std::vector<perturb::QueryText> queries;
  for (const auto& q : set) queries.push_back({q.query_id, q.text});
  std::optional<perturb::SynonymLexicon> lex;
  const auto json = to_json(c);
  for (const auto& spec : attacks) {
    if (spec.kind == perturb::AttackKind::Synonym && !lex) {
      lex = perturb::load_lexicon(require(lexicon_path(o), "lexicon", "gen"));
    }
    const auto batch = perturb::attack_batch(queries, spec, lex ? &*lex : nullptr);
    eval::EvalSet attacked = set;
    for (std::size_t i = 0; i < attacked.size(); ++i) attacked[i].text = batch.perturbed[i].text;
    const auto tag = attack_tag(spec);
    eval::save_evalset(o.out_dir / ("evalset-" + tag + ".jsonl"), attacked, json);
    perturb::save_manifest(o.out_dir / ("manifest-" + tag + ".jsonl"), batch.manifest, json);
    std::size_t shortfall = 0;
    for (const auto& m : batch.manifest) shortfall += m.shortfall;
    std::printf("%s: %zu queries, shortfall %zu\n", tag.c_str(), attacked.size(), shortfall);
  }
  return 0;
}

int cmd_export(const Options& o, const PipelineConfig& c) {
  const auto idx = index::load_index(require(o.out_dir / "index.tsv", "index", "index"));
  index::export_embeddings(idx, o.out_dir / "embeddings.tsv", to_json(c));
  std::printf("exported %zu embeddings of dim %zu\n", idx.entries().size(), idx.dim());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source attribution with contrastive window embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file with option defaults");

  Options o;
  app.add_option("--preset", o.preset, "Base settings: paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--out-dir", o.out_dir, "Artifact directory")->envname("SRCATTR_OUT_DIR");
  app.add_option("--threads", o.threads, "Cap on worker threads");

  app.add_option("--n-sources", o.n_sources, "Synthetic sources")->group("Generator");
  app.add_option("--docs-per-source", o.docs_per_source, "Training documents per source")->group("Generator");
  app.add_option("--heldout-docs", o.heldout_docs, "Held-out documents per source")->group("Generator");
  app.add_option("--tokens-per-doc", o.tokens_per_doc, "Tokens per document")->group("Generator");
  app.add_option("--vocabulary-size", o.vocabulary_size, "Vocabulary size")->group("Generator");
  app.add_option("--topic-fraction", o.topic_fraction, "Share of tokens drawn from the source topic")
      ->group("Generator");
  app.add_option("--topic-size", o.topic_size, "Words per source topic")->group("Generator");
  app.add_option("--corpus-seed", o.corpus_seed, "Generator seed")->group("Generator");
  app.add_option("--synonyms-per-word", o.synonyms_per_word, "Synthetic lexicon width")->group("Generator");

  app.add_option("--corpus", o.corpus, "Corpus JSONL (default <out-dir>/corpus.jsonl)")->group("Corpus");
  app.add_option("--evalset", o.evalset, "Eval set JSONL (default <out-dir>/evalset.jsonl)")->group("Corpus");
  app.add_option("--window-size", o.window_size, "Tokens per window")->group("Corpus");
  app.add_option("--stride", o.stride, "Window stride (default: window size)")->group("Corpus");
  app.add_option("--fraction", o.fraction, "Principal window fraction")->group("Corpus");

  app.add_option("--encoder", o.encoder_kind, "hashed-ngram or external-file")->group("Encoder");
  app.add_option("--base-dim", o.base_dim, "Hashed vector dimension")->group("Encoder");
  app.add_option("--ngram-orders", o.ngram_orders, "N-gram orders")->group("Encoder")->delimiter(',');
  app.add_option("--hash-seed", o.hash_seed, "Hash seed")->group("Encoder");
  app.add_option("--embeddings", o.embeddings, "Precomputed window embeddings")->group("Encoder");

  app.add_option("--temperature", o.temperature, "Contrastive temperature")->group("Training");
  app.add_option("--learning-rate", o.learning_rate, "SGD learning rate")->group("Training");
  app.add_option("--batch-size", o.batch_size, "Batch size")->group("Training");
  app.add_option("--epochs", o.epochs, "Epochs")->group("Training");
  app.add_option("--train-seed", o.train_seed, "Initialization and batching seed")->group("Training");
  app.add_option("--hidden-dims", o.hidden_dims, "Hidden layer widths")->group("Training")->delimiter(',');
  app.add_option("--output-dim", o.output_dim, "Embedding dimension")->group("Training");

  app.add_option("--method", o.method, "hard-knn, soft-knn or centroid")->group("Inference");
  app.add_option("--k", o.k, "Neighbors (hard kNN) or ranked sources (soft kNN)")->group("Inference");
  app.add_option("--queries-per-source", o.queries_per_source, "Eval queries per source")->group("Evaluation");
  app.add_option("--eval-seed", o.eval_seed, "Eval sampling seed")->group("Evaluation");
  app.add_option("--repeats", o.repeats, "Training repeats averaged in sweeps")->group("Evaluation");

  app.add_option("--attacks", o.attacks, "kind[:ratio] list, e.g. deletion:0.1,synonym:0.05")
      ->group("Attacks")->delimiter(',');
  app.add_option("--attack-seed", o.attack_seed, "Attack seed")->group("Attacks");
  app.add_option("--lexicon", o.lexicon, "Synonym lexicon (default <out-dir>/lexicon.tsv)")->group("Attacks");
  app.add_option("--paraphrase-command", o.paraphrase_command, "Shell command reading stdin")->group("Attacks");
  app.add_option("--paraphrase-timeout-ms", o.paraphrase_timeout_ms, "Per-query hook timeout")->group("Attacks");
  app.add_option("--max-parallel", o.max_parallel, "Concurrent paraphrase processes")->group("Attacks");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus, eval set and lexicon");
  auto* ingest = app.add_subcommand("ingest", "Segment a corpus and select principal windows");
  auto* train = app.add_subcommand("train", "Train the projection network");
  auto* index_cmd = app.add_subcommand("index", "Embed principal windows into an index");
  auto* attribute = app.add_subcommand("attribute", "Attribute text to sources");
  std::vector<std::string> texts;
  std::optional<fs::path> query_file;
  attribute->add_option("--text", texts, "Query text (repeatable)");
  attribute->add_option("--query-file", query_file, "One query per line");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate accuracy, attacks and sweeps");
  std::vector<std::size_t> sweep_sources, sweep_windows;
  eval_cmd->add_option("--sweep-sources", sweep_sources, "Source counts to sweep")->delimiter(',');
  eval_cmd->add_option("--sweep-window", sweep_windows, "Window sizes to sweep")->delimiter(',');
  auto* attack = app.add_subcommand("attack", "Write perturbed copies of the eval set");
  auto* export_cmd = app.add_subcommand("export", "Export index embeddings");

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = resolve(o);
    cfg.validate();
    if (gen->parsed()) return cmd_gen(o, cfg);
    if (ingest->parsed()) return cmd_ingest(o, cfg);
    if (train->parsed()) return cmd_train(o, cfg);
    if (index_cmd->parsed()) return cmd_index(o, cfg);
    if (attribute->parsed()) return cmd_attribute(o, cfg, texts, query_file);
    if (eval_cmd->parsed()) return cmd_eval(o, cfg, sweep_sources, sweep_windows);
    if (attack->parsed()) return cmd_attack(o, cfg);
    if (export_cmd->parsed()) return cmd_export(o, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "srcattr %s: %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 2;
}
