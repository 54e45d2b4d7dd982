#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "srcattr/encoder.hpp"
#include "srcattr/error.hpp"
#include "srcattr/index.hpp"
#include "srcattr/principal.hpp"
#include "srcattr/synthetic.hpp"
#include "temp_dir.hpp"

using namespace srcattr;
using namespace srcattr::index;

namespace {

using Vec = std::vector<double>;

Vec at_degrees(double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  return {std::cos(r), std::sin(r)};
}

// A 2-D unit vector whose cosine with (1, 0) is `sim`.
Vec with_similarity(double sim) { return {sim, std::sqrt(1.0 - sim * sim)}; }

IndexEntry entry(Vec z, const std::string& src, std::size_t i = 0) {
  IndexEntry e;
  e.z = std::move(z);
  e.source.value = src;
  e.doc_id = src + "-doc";
  e.window_index = i;
  e.text = src + " text " + std::to_string(i);
  return e;
}

const Vec kQuery = {1.0, 0.0};

std::vector<std::string> sources_of(const AttributionResult& r) {
  std::vector<std::string> out;
  for (const auto& x : r.ranked) out.push_back(x.source.value);
  return out;
}

struct RandomIndex {
  EmbeddingIndex index;
  std::vector<oracle::Entry> flat;
};

RandomIndex random_index(std::mt19937_64& rng, std::size_t n_sources, std::size_t per_source,
                         std::size_t dim) {
  std::vector<IndexEntry> entries;
  std::vector<oracle::Entry> flat;
  for (std::size_t i = 0; i < n_sources * per_source; ++i) {
    const std::string src = std::string(1, static_cast<char>('a' + (i * 7) % n_sources));
    auto z = oracle::random_unit(dim, rng);
    flat.push_back({z, src});
    entries.push_back(entry(z, src, i));
  }
  return {EmbeddingIndex(entries), flat};
}

}  // namespace

TEST(HardKnn, UnanimousNeighbors) {
  const EmbeddingIndex idx({entry(at_degrees(5), "A"), entry(at_degrees(8), "A"),
                            entry(at_degrees(60), "B")});
  const auto r = idx.hard_knn(kQuery, 2);
  ASSERT_EQ(r.ranked.size(), 1u);
  EXPECT_EQ(r.ranked[0].source.value, "A");
  EXPECT_EQ(r.ranked[0].votes, 2u);
}

TEST(HardKnn, MajorityBeatsNearest) {
  // Sorted by distance the neighbors are [A, B, B].
  const EmbeddingIndex idx({entry(at_degrees(10), "A"), entry(at_degrees(20), "B"),
                            entry(at_degrees(30), "B"), entry(at_degrees(170), "A")});
  const auto r = idx.hard_knn(kQuery, 3);
  EXPECT_EQ(r.ranked[0].source.value, "B");
  EXPECT_EQ(r.ranked[0].votes, 2u);
  EXPECT_EQ(r.ranked[0].evidence.window_index, 0u);
  EXPECT_NEAR(r.ranked[0].similarity, std::cos(20 * std::numbers::pi / 180), 1e-15);
}

TEST(HardKnn, VoteTieGoesToSmallerSummedDistance) {
  // Distances A = 0.1, B = 0.3; B inserted first and lexically larger.
  const EmbeddingIndex idx({entry(with_similarity(0.7), "B"), entry(with_similarity(0.9), "A")});
  EXPECT_EQ(idx.hard_knn(kQuery, 2).ranked[0].source.value, "A");
  const EmbeddingIndex flipped({entry(with_similarity(0.9), "B"), entry(with_similarity(0.7), "A")});
  EXPECT_EQ(flipped.hard_knn(kQuery, 2).ranked[0].source.value, "B");
}

TEST(HardKnn, FullTieGoesToSmallerId) {
  const EmbeddingIndex idx({entry({0.0, 1.0}, "zeta"), entry({0.0, -1.0}, "alpha")});
  EXPECT_EQ(idx.hard_knn(kQuery, 2).ranked[0].source.value, "alpha");
}

TEST(SoftKnn, FirstAppearanceOrder) {
  // Nearest entries' sources in order: A, A, B, A, C.
  const EmbeddingIndex idx({entry(at_degrees(40), "A"), entry(at_degrees(5), "A"),
                            entry(at_degrees(60), "C"), entry(at_degrees(20), "B"),
                            entry(at_degrees(10), "A")});
  const auto r = idx.soft_knn(kQuery, 2);
  EXPECT_EQ(sources_of(r), (std::vector<std::string>{"A", "B"}));
  EXPECT_NEAR(r.ranked[0].similarity, std::cos(5 * std::numbers::pi / 180), 1e-15);
  EXPECT_EQ(r.ranked[0].evidence.window_index, 0u);
  EXPECT_EQ(sources_of(idx.soft_knn(kQuery, 3)), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Knn, KTooLarge) {
  const EmbeddingIndex idx({entry(at_degrees(0), "A"), entry(at_degrees(10), "B")});
  for (auto call : {+[](const EmbeddingIndex& i) { i.hard_knn(kQuery, 3); },
                    +[](const EmbeddingIndex& i) { i.soft_knn(kQuery, 3); }}) {
    try {
      call(idx);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
    }
  }
}

TEST(Index, MethodsMatchOraclesOnRandomIndexes) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_sources = 2 + trial % 4;
    const auto ri = random_index(rng, n_sources, 3 + trial % 5, 3 + trial % 6);
    for (int qi = 0; qi < 10; ++qi) {
      const auto q = oracle::random_unit(ri.flat.front().z.size(), rng);
      for (std::size_t k = 1; k <= std::min<std::size_t>(9, ri.flat.size()); k += 2) {
        const auto [winner, votes] = oracle::hard_knn(ri.flat, q, k);
        const auto got = ri.index.hard_knn(q, k);
        EXPECT_EQ(got.ranked[0].source.value, winner);
        EXPECT_EQ(got.ranked[0].votes, votes);
      }
      for (std::size_t k = 1; k <= n_sources; ++k) {
        const auto expected = oracle::soft_knn(ri.flat, q, k);
        const auto got = ri.index.soft_knn(q, k);
        ASSERT_EQ(got.ranked.size(), expected.size());
        for (std::size_t r = 0; r < expected.size(); ++r) {
          EXPECT_EQ(got.ranked[r].source.value, expected[r].source);
          EXPECT_NEAR(got.ranked[r].similarity, expected[r].similarity, 1e-15);
        }
      }
      const auto expected = oracle::nearest_centroid(ri.flat, q);
      const auto got = ri.index.nearest_centroid(q);
      ASSERT_EQ(got.ranked.size(), n_sources);
      EXPECT_EQ(got.ranked[0].source.value, expected[0].source);
      for (std::size_t r = 0; r < expected.size(); ++r) {
        EXPECT_NEAR(got.ranked[r].similarity, expected[r].similarity, 1e-12);
        if (r) EXPECT_GE(got.ranked[r - 1].similarity, got.ranked[r].similarity);
      }

      // k = 1 agreement with the single nearest neighbor.
      std::vector<double> dist;
      const auto order = oracle::sorted_by_distance(ri.flat, q, dist);
      const auto& nearest = ri.flat[order[0]].source;
      EXPECT_EQ(ri.index.hard_knn(q, 1).ranked[0].source.value, nearest);
      EXPECT_EQ(ri.index.soft_knn(q, 1).ranked[0].source.value, nearest);
    }
  }
}

TEST(Centroid, SingleMemberIsItself) {
  const Vec z = oracle::unit({0.3, -0.2, 0.9});
  const auto c = centroid_of(std::vector<Vec>{z});
  EXPECT_EQ(c.sum, z);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(c.direction[k], z[k], 1e-15);
}

TEST(Centroid, OrthonormalPairPointsAt45Degrees) {
  const auto c = centroid_of(std::vector<Vec>{{1, 0, 0}, {0, 1, 0}});
  EXPECT_EQ(c.sum, (Vec{1, 1, 0}));
  EXPECT_NEAR(c.direction[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(c.direction[1], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(c.norm, std::sqrt(2.0), 1e-15);
}

TEST(Centroid, MaximizesTotalCosine) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> members;
    for (int i = 0; i < 5; ++i) members.push_back(oracle::random_unit(4, rng));
    const auto c = centroid_of(members);
    auto total = [&](const Vec& u) {
      double s = 0.0;
      for (const auto& m : members) s += oracle::dot(u, m);
      return s;
    };
    const double best = total(c.direction);
    for (int i = 0; i < 1000; ++i) EXPECT_GE(best, total(oracle::random_unit(4, rng)));
  }
}

TEST(Centroid, AntipodalIsDegenerate) {
  try {
    centroid_of(std::vector<Vec>{{1, 0}, {-1, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCluster);
  }
  EXPECT_THROW(centroid_of(std::vector<Vec>{}), Error);
}

TEST(Centroid, QueryAtCentroidWins) {
  std::mt19937_64 rng(23);
  const auto ri = random_index(rng, 4, 5, 6);
  for (const auto& c : ri.index.centroids()) {
    const auto r = ri.index.nearest_centroid(c.direction);
    EXPECT_EQ(r.ranked[0].source, c.source);
    EXPECT_NEAR(r.ranked[0].similarity, 1.0, 1e-12);
  }
}

TEST(Index, RejectsNonUnitEntries) {
  EXPECT_THROW(EmbeddingIndex({entry({1.0, 1.0}, "A")}), Error);
  EXPECT_THROW(EmbeddingIndex({entry({1.0, 0.0}, "A"), entry({1.0, 0.0, 0.0}, "B")}), Error);
  EXPECT_THROW(EmbeddingIndex(std::vector<IndexEntry>{}), Error);
}

namespace {

principal::PrincipalSet toy_principal(std::size_t n_sources, std::size_t windows_each) {
  principal::PrincipalSet p;
  p.selection_fraction = 1.0;
  for (std::size_t s = 0; s < n_sources; ++s) {
    principal::SourceSelection sel;
    sel.source.value = "src" + std::to_string(s);
    sel.candidate_count = windows_each;
    for (std::size_t w = 0; w < windows_each; ++w) {
      corpus::Window win;
      win.source = sel.source;
      win.doc_id = "d" + std::to_string(s);
      win.window_index = w;
      for (std::size_t t = 0; t < 30; ++t) {
        win.tokens.push_back("s" + std::to_string(s) + "w" + std::to_string(w) + "t" + std::to_string(t % 9));
      }
      win.text = corpus::join_tokens(win.tokens);
      sel.selected.push_back({win, 0.0});
    }
    p.sources.push_back(sel);
  }
  return p;
}

contrastive::ProjectionParams small_projection() {
  return contrastive::ProjectionParams::xavier(256, std::vector<std::size_t>{32}, 16, 5);
}

}  // namespace

TEST(BuildIndex, EntriesAndCentroids) {
  const encoder::HashedNgramEncoder enc(encoder::EncoderSpec{});
  const auto params = small_projection();
  const auto idx = build_index(toy_principal(2, 3), params, enc);
  EXPECT_EQ(idx.entries().size(), 6u);
  EXPECT_EQ(idx.centroids().size(), 2u);
  EXPECT_EQ(idx.dim(), 16u);
  const auto again = build_index(toy_principal(2, 3), params, enc);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(idx.entries()[i].z, again.entries()[i].z);
}

TEST(BuildIndex, SingleSourceAlwaysWins) {
  const encoder::HashedNgramEncoder enc(encoder::EncoderSpec{});
  const auto params = small_projection();
  const auto idx = build_index(toy_principal(1, 4), params, enc);
  const QueryEmbedder qe(params, enc, 30);
  const auto q = qe.embed("completely unrelated words about nothing in particular");
  for (auto m : {Method::HardKnn, Method::SoftKnn, Method::Centroid}) {
    EXPECT_EQ(idx.attribute(q, m, 1).ranked[0].source.value, "src0");
  }
}

TEST(QueryEmbedder, IndexedWindowTextMatchesItsEntry) {
  const encoder::HashedNgramEncoder enc(encoder::EncoderSpec{});
  const auto params = small_projection();
  const auto idx = build_index(toy_principal(3, 2), params, enc);
  const QueryEmbedder qe(params, enc, 30);
  for (const auto& e : idx.entries()) {
    const auto q = qe.embed(e.text);
    EXPECT_NEAR(oracle::dot(q, e.z), 1.0, 1e-6);
    EXPECT_EQ(idx.soft_knn(q, 1).ranked[0].source, e.source);
  }
}

TEST(QueryEmbedder, LongQueryPoolsWindows) {
  const encoder::HashedNgramEncoder enc(encoder::EncoderSpec{});
  const auto params = small_projection();
  const QueryEmbedder qe(params, enc, 30);
  std::vector<std::string> tokens;
  for (int i = 0; i < 60; ++i) tokens.push_back("tok" + std::to_string(i * 13 % 17));
  const std::string text = corpus::join_tokens(tokens);
  EXPECT_EQ(qe.window_count(text), 2u);

  Vec pooled(16, 0.0);
  for (std::size_t half = 0; half < 2; ++half) {
    corpus::Window w;
    w.tokens.assign(tokens.begin() + 30 * half, tokens.begin() + 30 * (half + 1));
    const auto z = contrastive::project(enc.encode(w), params);
    for (std::size_t k = 0; k < 16; ++k) pooled[k] += z[k] / 2.0;
  }
  pooled = oracle::unit(pooled);
  const auto q = qe.embed(text);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(q[k], pooled[k], 1e-12);
}

TEST(QueryEmbedder, PunctuationOnlyIsEmptyQuery) {
  const encoder::HashedNgramEncoder enc(encoder::EncoderSpec{});
  const auto params = small_projection();
  const QueryEmbedder qe(params, enc, 30);
  try {
    qe.embed("?!... --- ;;");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyQuery);
  }
}

TEST(IndexFile, SaveLoadRoundTrip) {
  std::mt19937_64 rng(24);
  const auto ri = random_index(rng, 3, 4, 5);
  testutil::TempDir dir;
  save_index(ri.index, dir / "i.tsv", "{}");
  const auto back = load_index(dir / "i.tsv");
  ASSERT_EQ(back.entries().size(), ri.index.entries().size());
  for (std::size_t i = 0; i < back.entries().size(); ++i) {
    EXPECT_EQ(back.entries()[i].z, ri.index.entries()[i].z);
    EXPECT_EQ(back.entries()[i].source, ri.index.entries()[i].source);
    EXPECT_EQ(back.entries()[i].text, ri.index.entries()[i].text);
  }
  save_index(back, dir / "j.tsv", "{}");
  EXPECT_EQ(testutil::slurp(dir / "i.tsv"), testutil::slurp(dir / "j.tsv"));
}

TEST(IndexFile, ExportReadsBackThroughExternalLoader) {
  std::mt19937_64 rng(25);
  const auto ri = random_index(rng, 4, 3, 7);
  testutil::TempDir dir;
  export_embeddings(ri.index, dir / "e.tsv");
  const auto table = encoder::load_external(dir / "e.tsv");
  EXPECT_EQ(table.dim, 7u);
  EXPECT_EQ(table.rows.size(), ri.index.entries().size());
  for (const auto& e : ri.index.entries()) {
    const corpus::WindowKey key{e.source.value, e.doc_id, e.window_index};
    EXPECT_EQ(table.labels.at(key), e.source.value);
    const auto& v = table.rows.at(key);
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(v[k], e.z[k], 1e-6);
  }
}
