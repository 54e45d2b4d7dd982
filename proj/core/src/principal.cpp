#include "srcattr/principal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "srcattr/error.hpp"
#include "srcattr/io_util.hpp"

namespace srcattr::principal {

double TfidfModel::idf_of(const std::string& token) const {
  auto it = idf.find(token);
  return it == idf.end() ? 0.0 : it->second;
}

std::size_t PrincipalSet::total_selected() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sources) n += s.selected.size();
  return n;
}

TfidfModel fit_tfidf(const corpus::Corpus& corpus) {
  if (corpus.sources().empty()) {
    throw Error(ErrorCode::EmptyCorpus, "corpus has no sources");
  }
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& group : corpus.sources()) {
    std::set<std::string> present;
    for (const auto& doc : group.documents) {
      present.insert(doc.tokens.begin(), doc.tokens.end());
    }
    for (const auto& t : present) ++df[t];
  }
  TfidfModel model;
  model.n_sources = corpus.sources().size();
  const auto n = static_cast<double>(model.n_sources);
  model.idf.reserve(df.size());
  for (const auto& [token, count] : df) {
    model.idf.emplace(token, std::log(n / static_cast<double>(count)));
  }
  return model;
}

TermFrequencies term_frequencies(const corpus::SourceGroup& group) {
  TermFrequencies out;
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& doc : group.documents) {
    for (const auto& t : doc.tokens) ++counts[t];
    total += doc.tokens.size();
  }
  out.tf.reserve(counts.size());
  for (const auto& [token, c] : counts) {
    out.tf.emplace(token, static_cast<double>(c) / static_cast<double>(total));
  }
  return out;
}

double score_window(const corpus::Window& w, const TfidfModel& model,
                    const TermFrequencies& tf_scope) {
  if (w.tokens.empty()) {
    throw Error(ErrorCode::EmptyWindow, "cannot score an empty window");
  }
  double sum = 0.0;
  for (const auto& t : w.tokens) {
    auto it = tf_scope.tf.find(t);
    if (it == tf_scope.tf.end()) continue;
    sum += it->second * model.idf_of(t);
  }
  return sum / static_cast<double>(w.tokens.size());
}

std::size_t selection_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidFraction,
                "fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  // Half-up rounding; the small slack absorbs products like 0.15 * 10 that
  // land a few ulps below the half.
  const auto rounded = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
  return std::min(n, std::max<std::size_t>(1, rounded));
}

PrincipalSet select_principal(const corpus::Corpus& corpus,
                              const TfidfModel& model, double fraction) {
  selection_count(fraction, 1);  // validates the fraction
  PrincipalSet out;
  out.selection_fraction = fraction;
  for (const auto& group : corpus.sources()) {
    const auto tf = term_frequencies(group);
    std::vector<ScoredWindow> scored;
    scored.reserve(group.windows.size());
    for (const auto& w : group.windows) {
      scored.push_back({w, score_window(w, model, tf)});
    }
    std::sort(scored.begin(), scored.end(),
              [](const ScoredWindow& a, const ScoredWindow& b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.window.doc_id != b.window.doc_id) {
                  return a.window.doc_id < b.window.doc_id;
                }
                return a.window.window_index < b.window.window_index;
              });
    SourceSelection sel;
    sel.source = group.source;
    sel.candidate_count = scored.size();
    if (!scored.empty()) {
      scored.resize(selection_count(fraction, scored.size()));
    }
    sel.selected = std::move(scored);
    out.sources.push_back(std::move(sel));
  }
  return out;
}

void save_principal(const std::filesystem::path& path, const PrincipalSet& set,
                    const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  out << "#fraction " << io::format_double(set.selection_fraction) << '\n';
  for (const auto& s : set.sources) {
    out << "#source " << s.source.value << '\t' << s.candidate_count << '\n';
  }
  for (const auto& s : set.sources) {
    for (const auto& sw : s.selected) {
      out << s.source.value << '\t' << sw.window.doc_id << '\t'
          << sw.window.window_index << '\t' << io::format_double(sw.score) << '\t'
          << sw.window.text << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

PrincipalSet load_principal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  PrincipalSet set;
  std::string line;
  std::size_t line_no = 0;
  auto group_for = [&](const std::string& id) -> SourceSelection& {
    for (auto& s : set.sources) {
      if (s.source.value == id) return s;
    }
    set.sources.push_back(SourceSelection{SourceId{id}, 0, {}});
    return set.sources.back();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("#fraction ", 0) == 0) {
      set.selection_fraction = std::stod(line.substr(10));
      continue;
    }
    if (line.rfind("#source ", 0) == 0) {
      const auto fields = io::split(line.substr(8), '\t');
      if (fields.size() != 2) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "bad #source line");
      }
      group_for(fields[0]).candidate_count = io::parse_size(fields[1], line_no);
      continue;
    }
    if (line[0] == '#') continue;
    const auto fields = io::split(line, '\t');
    if (fields.size() != 5) {
      throw RecordError(ErrorCode::MalformedRecord, line_no,
                        "expected 5 tab-separated fields");
    }
    ScoredWindow sw;
    sw.window.source.value = fields[0];
    sw.window.doc_id = fields[1];
    sw.window.window_index = io::parse_size(fields[2], line_no);
    sw.score = io::parse_double(fields[3], line_no);
    sw.window.text = fields[4];
    sw.window.tokens = corpus::tokenize(sw.window.text);
    if (sw.window.tokens.empty()) {
      throw RecordError(ErrorCode::EmptyWindow, line_no, "window has no tokens");
    }
    group_for(fields[0]).selected.push_back(std::move(sw));
  }
  return set;
}

}  // namespace srcattr::principal
