#include "srcattr/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "srcattr/error.hpp"
#include "srcattr/io_util.hpp"

namespace srcattr::eval {
namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Renders rows as columns padded to the widest cell.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  auto display_width = [](const std::string& s) {
    // UTF-8 continuation bytes do not take a column.
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
  };
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], display_width(r[c]));
  }
  std::string out;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    const auto& r = rows[ri];
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out += "  ";
      out += r[c];
      if (c + 1 < r.size()) out.append(width[c] - display_width(r[c]), ' ');
    }
    out += '\n';
    if (ri == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out.append(total + 2 * (width.size() - 1), '-');
      out += '\n';
    }
  }
  return out;
}

bool in_top(const index::AttributionResult& r, const SourceId& truth, std::size_t m) {
  const std::size_t n = std::min(m, r.ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (r.ranked[i].source == truth) return true;
  }
  return false;
}

}  // namespace

EvalSet make_evalset(std::span<const corpus::Document> heldout, const corpus::CorpusConfig& cfg,
                     std::size_t per_source, std::uint64_t seed) {
  std::vector<std::pair<SourceId, std::vector<corpus::Window>>> by_source;
  for (const auto& raw : heldout) {
    corpus::Document doc = raw;
    doc.tokens = corpus::tokenize(corpus::normalize_text(doc.raw_text));
    if (doc.tokens.empty()) continue;
    auto windows = corpus::segment(doc, cfg);
    auto it = std::find_if(by_source.begin(), by_source.end(),
                           [&](const auto& p) { return p.first == doc.source; });
    if (it == by_source.end()) {
      by_source.emplace_back(doc.source, std::vector<corpus::Window>{});
      it = std::prev(by_source.end());
    }
    std::move(windows.begin(), windows.end(), std::back_inserter(it->second));
  }
  std::mt19937_64 rng(seed);
  EvalSet set;
  for (const auto& [source, windows] : by_source) {
    std::vector<const corpus::Window*> picked;
    std::vector<const corpus::Window*> all;
    for (const auto& w : windows) all.push_back(&w);
    std::sample(all.begin(), all.end(), std::back_inserter(picked),
                static_cast<std::ptrdiff_t>(per_source), rng);
    for (const auto* w : picked) {
      char id[32];
      std::snprintf(id, sizeof id, "q%04zu", set.size());
      set.push_back({id, source, w->text});
    }
  }
  return set;
}

void save_evalset(const std::filesystem::path& path, const EvalSet& set,
                  const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  for (const auto& q : set) {
    nlohmann::ordered_json rec;
    rec["query_id"] = q.query_id;
    rec["source_id"] = q.truth.value;
    rec["text"] = q.text;
    out << rec.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

EvalSet load_evalset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open evalset " + path.string());
  EvalSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw RecordError(ErrorCode::MalformedRecord, line_no, "not a JSON object");
    }
    for (const char* field : {"query_id", "source_id", "text"}) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        throw RecordError(ErrorCode::MalformedRecord, line_no,
                          std::string("missing string field '") + field + "'");
      }
    }
    set.push_back({rec["query_id"].get<std::string>(), SourceId{rec["source_id"].get<std::string>()},
                   rec["text"].get<std::string>()});
  }
  return set;
}

std::string MethodSpec::label() const {
  switch (method) {
    case index::Method::SoftKnn: return "soft-knn";
    case index::Method::HardKnn: return "hard-knn@" + std::to_string(k);
    case index::Method::Centroid: return "centroid";
  }
  return "unknown";
}

std::vector<MethodSpec> default_methods() {
  return {{index::Method::SoftKnn, 5},
          {index::Method::HardKnn, 10},
          {index::Method::HardKnn, 20},
          {index::Method::Centroid, 0}};
}

const MethodMetrics& EvalReport::at(const std::string& label) const {
  for (const auto& m : methods) {
    if (m.label == label) return m;
  }
  throw Error(ErrorCode::InvalidConfig, "report has no method '" + label + "'");
}

std::vector<std::vector<double>> embed_queries(const EvalSet& set,
                                               const index::QueryEmbedder& embedder,
                                               std::size_t threads) {
  std::vector<std::vector<double>> out(set.size());
  parallel_for(set.size(), threads,
               [&](std::size_t i) { out[i] = embedder.embed(set[i].text, set[i].query_id); });
  return out;
}

EvalReport accuracy_from_embeddings(const EvalSet& set,
                                    std::span<const std::vector<double>> embeddings,
                                    const index::EmbeddingIndex& index,
                                    std::span<const MethodSpec> methods, std::size_t threads) {
  if (set.empty()) throw Error(ErrorCode::EmptyEvalSet, "evaluation set is empty");
  if (embeddings.size() != set.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one embedding per query required");
  }
  std::set<SourceId> indexed;
  for (const auto& c : index.centroids()) indexed.insert(c.source);
  for (const auto& q : set) {
    if (!indexed.contains(q.truth)) {
      throw Error(ErrorCode::UnknownSource, "ground truth '" + q.truth.value + "' is not indexed");
    }
  }

  EvalReport report;
  report.n_queries = set.size();
  report.n_sources = index.source_count();

  std::vector<SourceId> centroid_top(set.size());
  parallel_for(set.size(), threads, [&](std::size_t i) {
    centroid_top[i] = index.nearest_centroid(embeddings[i], false).ranked.front().source;
  });

  for (const auto& spec : methods) {
    MethodMetrics m;
    m.label = spec.label();
    m.method = spec.method;
    m.total = set.size();
    switch (spec.method) {
      case index::Method::SoftKnn: m.k_used = std::min(spec.k, index.source_count()); break;
      case index::Method::HardKnn: m.k_used = std::min(spec.k, index.entries().size()); break;
      case index::Method::Centroid: m.k_used = index.source_count(); break;
    }
    if (m.k_used == 0) m.k_used = 1;

    std::vector<index::AttributionResult> results(set.size());
    const auto start = Clock::now();
    parallel_for(set.size(), threads, [&](std::size_t i) {
      results[i] = spec.method == index::Method::Centroid
                       ? index.nearest_centroid(embeddings[i], false)
                       : index.attribute(embeddings[i], spec.method, m.k_used);
    });
    const std::chrono::duration<double> elapsed = Clock::now() - start;
    m.seconds_per_query = elapsed.count() / static_cast<double>(set.size());

    std::size_t hit1 = 0, hit3 = 0, hit5 = 0, agree = 0, wrong = 0;
    double sim_ok = 0.0, sim_bad = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& r = results[i];
      const auto& truth = set[i].truth;
      const auto& top = r.ranked.front();
      ++m.confusion[truth.value][top.source.value];
      if (top.source == centroid_top[i]) ++agree;
      if (top.source == truth) {
        ++hit1;
        sim_ok += top.similarity;
      } else {
        ++wrong;
        sim_bad += top.similarity;
      }
      hit3 += in_top(r, truth, 3) ? 1 : 0;
      hit5 += in_top(r, truth, 5) ? 1 : 0;
    }
    const auto n = static_cast<double>(set.size());
    m.correct = hit1;
    m.top1 = static_cast<double>(hit1) / n;
    m.top3 = static_cast<double>(hit3) / n;
    m.top5 = static_cast<double>(hit5) / n;
    m.centroid_agreement = static_cast<double>(agree) / n;
    m.mean_similarity_correct = hit1 ? sim_ok / static_cast<double>(hit1) : 0.0;
    m.mean_similarity_incorrect = wrong ? sim_bad / static_cast<double>(wrong) : 0.0;
    report.methods.push_back(std::move(m));
  }
  return report;
}

EvalReport accuracy(const EvalSet& set, const AttributionModel& model,
                    std::span<const MethodSpec> methods, std::size_t threads) {
  if (set.empty()) throw Error(ErrorCode::EmptyEvalSet, "evaluation set is empty");
  const auto embedder = model.embedder();
  const auto embeddings = embed_queries(set, embedder, threads);
  return accuracy_from_embeddings(set, embeddings, model.index, methods, threads);
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyEvalSet, "no reports to average");
  EvalReport out = reports.front();
  if (reports.size() == 1) return out;
  const auto n = static_cast<double>(reports.size());
  for (std::size_t mi = 0; mi < out.methods.size(); ++mi) {
    auto& m = out.methods[mi];
    MethodMetrics fresh;
    fresh.label = m.label;
    fresh.method = m.method;
    fresh.k_used = m.k_used;
    m = std::move(fresh);
    for (const auto& r : reports) {
      const auto& src = r.methods.at(mi);
      m.top1 += src.top1 / n;
      m.top3 += src.top3 / n;
      m.top5 += src.top5 / n;
      m.mean_similarity_correct += src.mean_similarity_correct / n;
      m.mean_similarity_incorrect += src.mean_similarity_incorrect / n;
      m.centroid_agreement += src.centroid_agreement / n;
      m.seconds_per_query += src.seconds_per_query / n;
      m.correct += src.correct;
      m.total += src.total;
      for (const auto& [truth, row] : src.confusion) {
        for (const auto& [pred, c] : row) m.confusion[truth][pred] += c;
      }
    }
  }
  out.n_queries = 0;
  for (const auto& r : reports) out.n_queries += r.n_queries;
  return out;
}

PipelineRun run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  PipelineRun run;
  run.config = cfg;

  std::vector<corpus::Document> train_docs;
  std::vector<corpus::Document> heldout_docs;
  if (cfg.corpus_path.empty()) {
    auto synth = corpus::generate_corpus(cfg.synthetic);
    train_docs = std::move(synth.train);
    heldout_docs = std::move(synth.heldout);
  } else {
    train_docs = corpus::read_documents(cfg.corpus_path);
  }
  const auto corpus = corpus::Corpus::from_documents(std::move(train_docs), cfg.corpus);
  const auto tfidf = principal::fit_tfidf(corpus);
  run.principal = principal::select_principal(corpus, tfidf, cfg.fraction);

  run.model.encoder = encoder::make_encoder(cfg.encoder);
  run.model.window_size = cfg.corpus.window_size;
  if (run.principal.sources.size() == 1) {
    // Nothing to contrast against; any projection attributes everything to
    // the one source.
    run.model.params = contrastive::ProjectionParams::xavier(
        run.model.encoder->dim(), cfg.train.hidden_dims, cfg.train.output_dim, cfg.train.seed);
  } else {
    const auto start = Clock::now();
    auto trained = contrastive::train(run.principal, *run.model.encoder, cfg.train);
    run.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    run.model.params = std::move(trained.params);
    run.trace = std::move(trained.trace);
  }
  run.model.index = index::build_index(run.principal, run.model.params, *run.model.encoder);

  if (!cfg.evalset_path.empty()) {
    run.evalset = load_evalset(cfg.evalset_path);
  } else {
    run.evalset = make_evalset(heldout_docs, cfg.corpus, cfg.queries_per_source, cfg.eval_seed);
  }
  return run;
}

namespace {

SweepPoint run_point(PipelineConfig cfg, std::size_t value) {
  const auto methods = default_methods();
  std::vector<EvalReport> reports;
  SweepPoint point;
  point.value = value;
  const auto base_seed = cfg.train.seed;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    cfg.train.seed = base_seed + r;
    auto run = run_pipeline(cfg);
    reports.push_back(accuracy(run.evalset, run.model, methods, cfg.threads));
    point.train_seconds += run.train_seconds / static_cast<double>(cfg.repeats);
    if (r == 0) point.trace = std::move(run.trace);
  }
  point.report = average_reports(reports);
  return point;
}

}  // namespace

std::vector<SweepPoint> sweep_sources(const PipelineConfig& cfg,
                                      std::span<const std::size_t> n_sources) {
  std::vector<SweepPoint> out;
  for (std::size_t n : n_sources) {
    PipelineConfig c = cfg;
    c.synthetic.n_sources = n;
    out.push_back(run_point(c, n));
  }
  return out;
}

std::vector<SweepPoint> sweep_window(const PipelineConfig& cfg,
                                     std::span<const std::size_t> window_sizes) {
  std::vector<SweepPoint> out;
  for (std::size_t w : window_sizes) {
    PipelineConfig c = cfg;
    c.corpus.window_size = w;
    c.corpus.stride = w;
    out.push_back(run_point(c, w));
  }
  return out;
}

std::vector<AttackDrop> robustness_eval(const EvalSet& set, const AttributionModel& model,
                                        std::span<const perturb::AttackSpec> attacks,
                                        const perturb::SynonymLexicon* lexicon,
                                        std::size_t threads) {
  const std::vector<MethodSpec> methods = {{index::Method::SoftKnn, 5},
                                           {index::Method::Centroid, 0}};
  const auto baseline = accuracy(set, model, methods, threads);

  std::vector<perturb::QueryText> queries;
  queries.reserve(set.size());
  for (const auto& q : set) queries.push_back({q.query_id, q.text});

  std::vector<AttackDrop> out;
  for (const auto& spec : attacks) {
    const auto batch = perturb::attack_batch(queries, spec, lexicon);
    EvalSet attacked = set;
    for (std::size_t i = 0; i < attacked.size(); ++i) attacked[i].text = batch.perturbed[i].text;
    const auto report = accuracy(attacked, model, methods, threads);

    AttackDrop d;
    d.kind = spec.kind;
    d.ratio = spec.kind == perturb::AttackKind::Paraphrase ? 0.0 : spec.ratio;
    d.baseline_top1 = baseline.methods[0].top1;
    d.baseline_top3 = baseline.methods[0].top3;
    d.baseline_top5 = baseline.methods[0].top5;
    d.baseline_centroid = baseline.methods[1].top1;
    d.attacked_top1 = report.methods[0].top1;
    d.attacked_top3 = report.methods[0].top3;
    d.attacked_top5 = report.methods[0].top5;
    d.attacked_centroid = report.methods[1].top1;
    out.push_back(d);
  }
  return out;
}

std::string format_report(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"method", "k", "top-1", "top-3", "top-5", "agree(centroid)", "sim(correct)",
                  "sim(wrong)"});
  for (const auto& m : report.methods) {
    rows.push_back({m.label, std::to_string(m.k_used), pct(m.top1), pct(m.top3), pct(m.top5),
                    pct(m.centroid_agreement), fixed(m.mean_similarity_correct, 4),
                    fixed(m.mean_similarity_incorrect, 4)});
  }
  std::string out = "queries=" + std::to_string(report.n_queries) +
                    " sources=" + std::to_string(report.n_sources) + "\n";
  return out + render_table(rows);
}

std::string format_robustness(std::span<const AttackDrop> drops) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"inference method"};
  for (const auto& d : drops) {
    std::string col(perturb::to_string(d.kind));
    if (d.kind != perturb::AttackKind::Paraphrase) col += " " + pct(d.ratio);
    header.push_back(col);
  }
  rows.push_back(header);
  auto arrow = [](double drop) {
    return (drop >= 0.0 ? "↓" : "↑") + pct(std::abs(drop));
  };
  const std::vector<std::pair<std::string, double (AttackDrop::*)() const>> metrics = {
      {"top-1 acc. drop", &AttackDrop::drop_top1},
      {"top-3 acc. drop", &AttackDrop::drop_top3},
      {"top-5 acc. drop", &AttackDrop::drop_top5},
      {"nearest centroid drop", &AttackDrop::drop_centroid}};
  for (const auto& [name, fn] : metrics) {
    std::vector<std::string> row = {name};
    for (const auto& d : drops) row.push_back(arrow((d.*fn)()));
    rows.push_back(row);
  }
  return render_table(rows);
}

std::string format_sweep(std::span<const SweepPoint> points, const std::string& value_name) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({value_name, "top-1", "top-3", "top-5", "centroid", "final loss"});
  for (const auto& p : points) {
    const auto& soft = p.report.at("soft-knn");
    const auto& cen = p.report.at("centroid");
    const double loss = p.trace.epoch_mean_loss.empty() ? 0.0 : p.trace.epoch_mean_loss.back();
    rows.push_back({std::to_string(p.value), pct(soft.top1), pct(soft.top3), pct(soft.top5),
                    pct(cen.top1), fixed(loss, 4)});
  }
  return render_table(rows);
}

std::string timing_summary(const EvalReport& report) {
  std::string out = "us_per_query";
  for (const auto& m : report.methods) out += " " + m.label + "=" + fixed(m.seconds_per_query * 1e6, 1);
  return out;
}

std::string timing_summary(std::span<const SweepPoint> points, const std::string& value_name) {
  std::string out = "train_s";
  for (const auto& p : points) {
    out += " " + value_name + "=" + std::to_string(p.value) + ":" + fixed(p.train_seconds, 2);
  }
  return out;
}

std::string metrics_jsonl(const EvalReport& report, const std::string& header_json) {
  std::string out;
  if (!header_json.empty()) out += "#config " + header_json + "\n";
  for (const auto& m : report.methods) {
    nlohmann::ordered_json rec;
    rec["method"] = m.label;
    rec["k"] = m.k_used;
    rec["queries"] = m.total;
    rec["sources"] = report.n_sources;
    rec["top1"] = m.top1;
    rec["top3"] = m.top3;
    rec["top5"] = m.top5;
    rec["correct"] = m.correct;
    rec["centroid_agreement"] = m.centroid_agreement;
    rec["mean_similarity_correct"] = m.mean_similarity_correct;
    rec["mean_similarity_incorrect"] = m.mean_similarity_incorrect;
    rec["confusion"] = m.confusion;
    out += rec.dump() + "\n";
  }
  return out;
}

std::string robustness_jsonl(std::span<const AttackDrop> drops) {
  std::string out;
  for (const auto& d : drops) {
    nlohmann::ordered_json rec;
    rec["kind"] = std::string(perturb::to_string(d.kind));
    rec["ratio"] = d.ratio;
    rec["drop_top1"] = d.drop_top1();
    rec["drop_top3"] = d.drop_top3();
    rec["drop_top5"] = d.drop_top5();
    rec["drop_centroid"] = d.drop_centroid();
    rec["baseline"] = {d.baseline_top1, d.baseline_top3, d.baseline_top5, d.baseline_centroid};
    rec["attacked"] = {d.attacked_top1, d.attacked_top3, d.attacked_top5, d.attacked_centroid};
    out += rec.dump() + "\n";
  }
  return out;
}

std::string loss_curves_csv(std::span<const SweepPoint> points) {
  std::string out = "value,epoch,loss\n";
  for (const auto& p : points) {
    for (std::size_t e = 0; e < p.trace.epoch_mean_loss.size(); ++e) {
      out += std::to_string(p.value) + "," + std::to_string(e + 1) + "," +
             io::format_double(p.trace.epoch_mean_loss[e]) + "\n";
    }
  }
  return out;
}

std::string sweep_accuracy_csv(std::span<const SweepPoint> points, const std::string& value_name) {
  std::string out = value_name + ",top1,top3,top5,centroid\n";
  for (const auto& p : points) {
    const auto& soft = p.report.at("soft-knn");
    out += std::to_string(p.value) + "," + io::format_double(soft.top1) + "," +
           io::format_double(soft.top3) + "," + io::format_double(soft.top5) + "," +
           io::format_double(p.report.at("centroid").top1) + "\n";
  }
  return out;
}

std::string sweep_timing_csv(std::span<const SweepPoint> points, const std::string& value_name) {
  std::string out = value_name + ",train_seconds\n";
  for (const auto& p : points) out += std::to_string(p.value) + "," + fixed(p.train_seconds, 3) + "\n";
  return out;
}

}  // namespace srcattr::eval
