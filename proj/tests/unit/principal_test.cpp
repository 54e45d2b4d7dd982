#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "srcattr/error.hpp"
#include "srcattr/principal.hpp"
#include "srcattr/synthetic.hpp"
#include "temp_dir.hpp"

using namespace srcattr;
using namespace srcattr::principal;
using corpus::Corpus;
using corpus::CorpusConfig;
using corpus::Document;

namespace {

Document doc(const std::string& src, const std::string& id, const std::string& text) {
  Document d;
  d.source.value = src;
  d.doc_id = id;
  d.raw_text = text;
  return d;
}

// Scores every window of `c` by summing tf * idf token by token, with tf and
// df recounted from the raw windows' documents.
std::map<corpus::WindowKey, double> brute_force_scores(const Corpus& c) {
  std::map<std::string, std::set<std::string>> vocab_by_source;
  std::map<std::string, std::map<std::string, double>> counts;
  std::map<std::string, double> totals;
  for (const auto& g : c.sources()) {
    for (const auto& d : g.documents) {
      for (const auto& t : corpus::tokenize(corpus::normalize_text(d.raw_text))) {
        vocab_by_source[g.source.value].insert(t);
        counts[g.source.value][t] += 1.0;
        totals[g.source.value] += 1.0;
      }
    }
  }
  const double n = static_cast<double>(c.sources().size());
  std::map<corpus::WindowKey, double> out;
  for (const auto& g : c.sources()) {
    for (const auto& w : g.windows) {
      double sum = 0.0;
      for (const auto& t : w.tokens) {
        double df = 0.0;
        for (const auto& [_, v] : vocab_by_source) df += v.count(t) ? 1.0 : 0.0;
        sum += counts[g.source.value][t] / totals[g.source.value] * std::log(n / df);
      }
      out[corpus::key_of(w)] = sum / static_cast<double>(w.tokens.size());
    }
  }
  return out;
}

}  // namespace

TEST(FitTfidf, IdfValues) {
  const auto c = Corpus::from_documents(
      {doc("a", "1", "common rare"), doc("b", "2", "common"), doc("c", "3", "common"),
       doc("d", "4", "common")},
      {});
  const auto m = fit_tfidf(c);
  EXPECT_EQ(m.n_sources, 4u);
  EXPECT_EQ(m.idf_of("common"), 0.0);
  EXPECT_NEAR(m.idf_of("rare"), 1.3862943611198906, 1e-15);
  EXPECT_EQ(m.idf_of("unseen"), 0.0);
}

TEST(FitTfidf, SingleSourceAllZero) {
  const auto c = Corpus::from_documents({doc("a", "1", "x y z"), doc("a", "2", "y w")}, {});
  for (const auto& [_, v] : fit_tfidf(c).idf) EXPECT_EQ(v, 0.0);
}

TEST(FitTfidf, EmptyCorpus) {
  try {
    fit_tfidf(Corpus{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(ScoreWindow, SharedTokensScoreZero) {
  const auto c = Corpus::from_documents({doc("a", "1", "p q r"), doc("b", "2", "r q p")}, {3, 3});
  ASSERT_EQ(c.sources()[0].windows.size(), 1u);
  const auto m = fit_tfidf(c);
  const auto tf = term_frequencies(c.sources()[0]);
  EXPECT_EQ(score_window(c.sources()[0].windows[0], m, tf), 0.0);
}

TEST(ScoreWindow, EmptyWindowGuarded) {
  const TfidfModel m;
  const TermFrequencies tf;
  try {
    score_window(corpus::Window{}, m, tf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyWindow);
  }
}

TEST(ScoreWindow, FixtureMatchesBruteForce) {
  const auto c = corpus::load_corpus(testutil::fixture("toy_two_source.jsonl"), {4, 4});
  const auto m = fit_tfidf(c);
  const auto expected = brute_force_scores(c);
  std::size_t checked = 0;
  for (const auto& g : c.sources()) {
    const auto tf = term_frequencies(g);
    for (const auto& w : g.windows) {
      EXPECT_NEAR(score_window(w, m, tf), expected.at(corpus::key_of(w)), 1e-15);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10u);
}

TEST(SelectionCount, Rounding) {
  EXPECT_EQ(selection_count(0.15, 10), 2u);
  EXPECT_EQ(selection_count(0.1, 3), 1u);
  EXPECT_EQ(selection_count(1.0, 7), 7u);
  EXPECT_EQ(selection_count(0.15, 120), 18u);
  EXPECT_EQ(selection_count(0.25, 2), 1u);   // 0.5 rounds up
  EXPECT_EQ(selection_count(0.05, 30), 2u);  // 1.5 rounds up
  for (double bad : {0.0, -0.1, 1.01, std::nan("")}) {
    try {
      selection_count(bad, 5);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidFraction);
    }
  }
}

TEST(SelectPrincipal, FractionOneSelectsEverything) {
  const auto c = corpus::load_corpus(testutil::fixture("toy_two_source.jsonl"), {3, 3});
  const auto p = select_principal(c, fit_tfidf(c), 1.0);
  EXPECT_EQ(p.total_selected(), c.window_count());
}

TEST(SelectPrincipal, SortedAndSized) {
  corpus::SyntheticSpec spec;
  spec.n_sources = 5;
  spec.docs_per_source = 2;
  spec.tokens_per_doc = 150;
  const auto c = Corpus::from_documents(corpus::generate_corpus(spec).train, {});
  const auto p = select_principal(c, fit_tfidf(c), 0.15);
  ASSERT_EQ(p.sources.size(), 5u);
  for (const auto& s : p.sources) {
    EXPECT_EQ(s.candidate_count, 10u);
    EXPECT_EQ(s.selected.size(), 2u);
    for (std::size_t i = 1; i < s.selected.size(); ++i) {
      EXPECT_GE(s.selected[i - 1].score, s.selected[i].score);
    }
    for (const auto& w : s.selected) {
      EXPECT_TRUE(std::isfinite(w.score));
      EXPECT_GE(w.score, 0.0);
    }
  }
}

TEST(SelectPrincipal, TiesBrokenByDocThenWindow) {
  // Every window of source a has the same tokens, hence the same score.
  const auto c = Corpus::from_documents(
      {doc("a", "z", "u v u v"), doc("a", "m", "u v u v"), doc("b", "q", "k l")}, {2, 2});
  const auto p = select_principal(c, fit_tfidf(c), 0.5);
  ASSERT_EQ(p.sources[0].selected.size(), 2u);
  EXPECT_EQ(p.sources[0].selected[0].window.doc_id, "m");
  EXPECT_EQ(p.sources[0].selected[0].window.window_index, 0u);
  EXPECT_EQ(p.sources[0].selected[1].window.doc_id, "m");
  EXPECT_EQ(p.sources[0].selected[1].window.window_index, 1u);
}

TEST(SelectPrincipal, PermutationInvariantAndMonotone) {
  corpus::SyntheticSpec spec;
  spec.n_sources = 4;
  spec.docs_per_source = 4;
  spec.tokens_per_doc = 120;
  auto docs = corpus::generate_corpus(spec).train;
  const auto c1 = Corpus::from_documents(docs, {});
  std::mt19937_64 rng(9);
  std::shuffle(docs.begin(), docs.end(), rng);
  const auto c2 = Corpus::from_documents(docs, {});

  auto keys = [](const PrincipalSet& p) {
    std::map<std::string, std::set<corpus::WindowKey>> out;
    for (const auto& s : p.sources) {
      for (const auto& w : s.selected) out[s.source.value].insert(corpus::key_of(w.window));
    }
    return out;
  };
  const auto k1 = keys(select_principal(c1, fit_tfidf(c1), 0.15));
  EXPECT_EQ(k1, keys(select_principal(c2, fit_tfidf(c2), 0.15)));

  auto prev = keys(select_principal(c1, fit_tfidf(c1), 0.05));
  for (double f : {0.1, 0.15, 0.3, 0.6, 1.0}) {
    const auto cur = keys(select_principal(c1, fit_tfidf(c1), f));
    for (const auto& [src, set] : prev) {
      EXPECT_TRUE(std::includes(cur.at(src).begin(), cur.at(src).end(), set.begin(), set.end()));
    }
    prev = cur;
  }
}

TEST(PrincipalFile, RoundTrip) {
  const auto c = corpus::load_corpus(testutil::fixture("toy_two_source.jsonl"), {4, 4});
  const auto p = select_principal(c, fit_tfidf(c), 0.5);
  testutil::TempDir dir;
  save_principal(dir / "p.tsv", p, "{\"fraction\":0.5}");
  const auto q = load_principal(dir / "p.tsv");
  EXPECT_EQ(q.selection_fraction, 0.5);
  ASSERT_EQ(q.sources.size(), p.sources.size());
  for (std::size_t s = 0; s < p.sources.size(); ++s) {
    EXPECT_EQ(q.sources[s].source, p.sources[s].source);
    EXPECT_EQ(q.sources[s].candidate_count, p.sources[s].candidate_count);
    ASSERT_EQ(q.sources[s].selected.size(), p.sources[s].selected.size());
    for (std::size_t i = 0; i < p.sources[s].selected.size(); ++i) {
      const auto& a = p.sources[s].selected[i];
      const auto& b = q.sources[s].selected[i];
      EXPECT_EQ(corpus::key_of(a.window), corpus::key_of(b.window));
      EXPECT_EQ(a.window.tokens, b.window.tokens);
      EXPECT_EQ(a.score, b.score);
    }
  }
  save_principal(dir / "p2.tsv", q, "{\"fraction\":0.5}");
  EXPECT_EQ(testutil::slurp(dir / "p.tsv"), testutil::slurp(dir / "p2.tsv"));
}
