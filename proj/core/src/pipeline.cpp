#include "srcattr/pipeline.hpp"

#include "json.hpp"
#include "srcattr/error.hpp"

namespace srcattr {

void PipelineConfig::validate() const {
  if (corpus_path.empty()) synthetic.validate();
  corpus.validate();
  principal::selection_count(fraction, 1);
  encoder.validate();
  train.validate();
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
  if (queries_per_source == 0) throw Error(ErrorCode::InvalidConfig, "queries_per_source must be positive");
  if (repeats == 0) throw Error(ErrorCode::InvalidConfig, "repeats must be positive");
  if (threads == 0) throw Error(ErrorCode::InvalidConfig, "threads must be positive");
}

PipelineConfig desk_preset() {
  PipelineConfig cfg;
  cfg.train.epochs = 50;
  cfg.train.learning_rate = 0.005;
  return cfg;
}

std::string to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["synthetic"] = {
      {"n_sources", cfg.synthetic.n_sources},
      {"docs_per_source", cfg.synthetic.docs_per_source},
      {"heldout_docs_per_source", cfg.synthetic.heldout_docs_per_source},
      {"tokens_per_doc", cfg.synthetic.tokens_per_doc},
      {"vocabulary_size", cfg.synthetic.vocabulary_size},
      {"topic_fraction", cfg.synthetic.topic_fraction},
      {"topic_size", cfg.synthetic.topic_size},
      {"seed", cfg.synthetic.seed},
  };
  j["corpus_path"] = cfg.corpus_path.string();
  j["evalset_path"] = cfg.evalset_path.string();
  j["window_size"] = cfg.corpus.window_size;
  j["stride"] = cfg.corpus.stride;
  j["fraction"] = cfg.fraction;
  j["encoder"] = {
      {"kind", cfg.encoder.kind == encoder::EncoderKind::HashedNgram ? "hashed-ngram" : "external-file"},
      {"base_dim", cfg.encoder.base_dim},
      {"ngram_orders", cfg.encoder.ngram_orders},
      {"hash_seed", cfg.encoder.hash_seed},
      {"external_path", cfg.encoder.external_path.string()},
  };
  j["train"] = {
      {"temperature", cfg.train.temperature},
      {"learning_rate", cfg.train.learning_rate},
      {"batch_size", cfg.train.batch_size},
      {"epochs", cfg.train.epochs},
      {"seed", cfg.train.seed},
      {"hidden_dims", cfg.train.hidden_dims},
      {"output_dim", cfg.train.output_dim},
  };
  j["method"] = std::string(index::to_string(cfg.method));
  j["k"] = cfg.k;
  j["queries_per_source"] = cfg.queries_per_source;
  j["eval_seed"] = cfg.eval_seed;
  j["repeats"] = cfg.repeats;
  j["threads"] = cfg.threads;
  return j.dump();
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "pipeline config is not a JSON object");
  }
  PipelineConfig cfg;
  try {
    const auto& s = j.at("synthetic");
    cfg.synthetic.n_sources = s.at("n_sources");
    cfg.synthetic.docs_per_source = s.at("docs_per_source");
    cfg.synthetic.heldout_docs_per_source = s.at("heldout_docs_per_source");
    cfg.synthetic.tokens_per_doc = s.at("tokens_per_doc");
    cfg.synthetic.vocabulary_size = s.at("vocabulary_size");
    cfg.synthetic.topic_fraction = s.at("topic_fraction");
    cfg.synthetic.topic_size = s.at("topic_size");
    cfg.synthetic.seed = s.at("seed");
    cfg.corpus_path = j.at("corpus_path").get<std::string>();
    cfg.evalset_path = j.at("evalset_path").get<std::string>();
    cfg.corpus.window_size = j.at("window_size");
    cfg.corpus.stride = j.at("stride");
    cfg.fraction = j.at("fraction");
    const auto& e = j.at("encoder");
    cfg.encoder.kind = e.at("kind").get<std::string>() == "external-file"
                           ? encoder::EncoderKind::ExternalFile
                           : encoder::EncoderKind::HashedNgram;
    cfg.encoder.base_dim = e.at("base_dim");
    cfg.encoder.ngram_orders = e.at("ngram_orders").get<std::vector<std::size_t>>();
    cfg.encoder.hash_seed = e.at("hash_seed");
    cfg.encoder.external_path = e.at("external_path").get<std::string>();
    const auto& t = j.at("train");
    cfg.train.temperature = t.at("temperature");
    cfg.train.learning_rate = t.at("learning_rate");
    cfg.train.batch_size = t.at("batch_size");
    cfg.train.epochs = t.at("epochs");
    cfg.train.seed = t.at("seed");
    cfg.train.hidden_dims = t.at("hidden_dims").get<std::vector<std::size_t>>();
    cfg.train.output_dim = t.at("output_dim");
    cfg.method = index::parse_method(j.at("method").get<std::string>());
    cfg.k = j.at("k");
    cfg.queries_per_source = j.at("queries_per_source");
    cfg.eval_seed = j.at("eval_seed");
    cfg.repeats = j.at("repeats");
    cfg.threads = j.at("threads");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, std::string("pipeline config: ") + ex.what());
  }
  return cfg;
}

}  // namespace srcattr
