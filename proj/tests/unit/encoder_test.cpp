#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srcattr/encoder.hpp"
#include "srcattr/error.hpp"
#include "srcattr/io_util.hpp"
#include "temp_dir.hpp"

using namespace srcattr;
using namespace srcattr::encoder;
using corpus::Window;

namespace {

Window window(std::vector<std::string> tokens, std::string doc = "d", std::size_t idx = 0) {
  Window w;
  w.source.value = "s";
  w.doc_id = std::move(doc);
  w.window_index = idx;
  w.tokens = std::move(tokens);
  w.text = corpus::join_tokens(w.tokens);
  return w;
}

double dot(const BaseVector& a, const BaseVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, const std::string& prefix,
                                       std::size_t n) {
  std::uniform_int_distribution<int> id(0, 100000);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(id(rng)));
  return out;
}

}  // namespace

TEST(HashedEncoder, DeterministicAndUnitNorm) {
  const HashedNgramEncoder enc(EncoderSpec{});
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto w = window(random_tokens(rng, "t", 1 + i % 30));
    const auto a = enc.encode(w);
    EXPECT_EQ(a, enc.encode(w));
    EXPECT_EQ(a, encode(w, EncoderSpec{}));
    EXPECT_EQ(a.size(), 256u);
    EXPECT_NEAR(std::sqrt(dot(a, a)), 1.0, 1e-6);
  }
}

TEST(HashedEncoder, SingleTokenHasOneUnigramTarget) {
  const HashedNgramEncoder enc(EncoderSpec{});
  const auto raw = enc.accumulate(std::vector<std::string>{"hello"});
  int nonzero = 0;
  for (double v : raw) {
    if (v != 0.0) {
      ++nonzero;
      EXPECT_EQ(std::abs(v), 1.0);
    }
  }
  EXPECT_EQ(nonzero, 1);

  EncoderSpec bigrams_only;
  bigrams_only.ngram_orders = {2};
  const HashedNgramEncoder enc2(bigrams_only);
  for (double v : enc2.accumulate(std::vector<std::string>{"hello"})) EXPECT_EQ(v, 0.0);
  // Nothing to hash: the encoded vector falls back to a unit axis.
  const auto v = enc2.encode(window({"hello"}));
  EXPECT_NEAR(dot(v, v), 1.0, 1e-15);
}

TEST(HashedEncoder, RepeatedTokensAccumulate) {
  EncoderSpec unigrams;
  unigrams.ngram_orders = {1};
  const HashedNgramEncoder enc(unigrams);
  const auto one = enc.accumulate(std::vector<std::string>{"x"});
  const auto three = enc.accumulate(std::vector<std::string>{"x", "x", "x"});
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(three[i], 3.0 * one[i]);
  // Normalization removes the count.
  EXPECT_EQ(enc.encode(window({"x"})), enc.encode(window({"x", "x", "x"})));
}

TEST(HashedEncoder, DisjointWindowsNearlyOrthogonal) {
  const HashedNgramEncoder enc(EncoderSpec{});
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto a = enc.encode(window(random_tokens(rng, "a", 30)));
    const auto b = enc.encode(window(random_tokens(rng, "b", 30)));
    EXPECT_LT(std::abs(dot(a, b)), 0.3);
  }
}

TEST(HashedEncoder, SeedChangesVectors) {
  EncoderSpec s0, s1;
  s1.hash_seed = 17;
  const auto w = window({"the", "quick", "brown", "fox"});
  const HashedNgramEncoder e0(s0), e1(s1);
  EXPECT_NE(e0.encode(w), e1.encode(w));
  EXPECT_EQ(e1.encode(w), HashedNgramEncoder(s1).encode(w));
}

TEST(HashedEncoder, Errors) {
  const HashedNgramEncoder enc(EncoderSpec{});
  try {
    enc.encode(window({}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyWindow);
  }
  EncoderSpec bad;
  bad.base_dim = 0;
  EXPECT_THROW(HashedNgramEncoder{bad}, Error);
  bad = {};
  bad.ngram_orders = {};
  EXPECT_THROW(HashedNgramEncoder{bad}, Error);
}

TEST(ExternalEncoder, LoadsUniformFile) {
  testutil::TempDir dir;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::string text = "# produced elsewhere\ndim=384\n";
  for (std::size_t i = 0; i < 5; ++i) {
    text += "s\td\t" + std::to_string(i) + "\t";
    for (int k = 0; k < 384; ++k) text += (k ? "," : "") + io::format_double(g(rng));
    text += "\n";
  }
  testutil::spit(dir / "e.tsv", text);
  EncoderSpec spec;
  spec.kind = EncoderKind::ExternalFile;
  spec.external_path = dir / "e.tsv";
  const auto enc = make_encoder(spec);
  EXPECT_EQ(enc->dim(), 384u);
  std::vector<Window> windows;
  for (std::size_t i = 0; i < 5; ++i) windows.push_back(window({"x"}, "d", i));
  EXPECT_NO_THROW(dynamic_cast<const ExternalEncoder&>(*enc).require_coverage(windows));
  EXPECT_EQ(enc->encode(windows[2]).size(), 384u);
}

TEST(ExternalEncoder, RaggedRowIsDimensionMismatch) {
  testutil::TempDir dir;
  std::string text = "dim=384\n";
  for (int row = 0; row < 3; ++row) {
    const int n = row == 1 ? 100 : 384;
    text += "s\td\t" + std::to_string(row) + "\t";
    for (int k = 0; k < n; ++k) text += k ? ",0.5" : "0.5";
    text += "\n";
  }
  testutil::spit(dir / "e.tsv", text);
  try {
    load_external(dir / "e.tsv");
    FAIL();
  } catch (const RecordError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ExternalEncoder, MissingWindowNamesFirstKey) {
  ExternalTable t;
  t.dim = 2;
  t.rows[{"s", "d", 0}] = {1.0, 0.0};
  const ExternalEncoder enc(t);
  const std::vector<Window> windows = {window({"a"}, "d", 0), window({"b"}, "d", 4),
                                       window({"c"}, "d", 5)};
  try {
    enc.require_coverage(windows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingWindow);
    EXPECT_NE(std::string(e.what()).find("s/d/4"), std::string::npos);
  }
}

TEST(ExternalEncoder, MalformedFiles) {
  testutil::TempDir dir;
  testutil::spit(dir / "nodim.tsv", "s\td\t0\t1,2\n");
  EXPECT_THROW(load_external(dir / "nodim.tsv"), Error);
  testutil::spit(dir / "fields.tsv", "dim=2\ns\td\t1,2\n");
  EXPECT_THROW(load_external(dir / "fields.tsv"), Error);
  testutil::spit(dir / "dup.tsv", "dim=1\ns\td\t0\t1\ns\td\t0\t2\n");
  EXPECT_THROW(load_external(dir / "dup.tsv"), Error);
}

TEST(ExternalEncoder, ExportLoadRoundTripIsBitExact) {
  testutil::TempDir dir;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> vecs(20, std::vector<double>(7));
  for (auto& v : vecs) {
    for (double& x : v) x = g(rng) * 1e-3;
  }
  std::vector<ExportRow> rows;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    rows.push_back({{"src" + std::to_string(i % 3), "doc", i}, vecs[i], "src" + std::to_string(i % 3)});
  }
  save_external(dir / "x.tsv", 7, rows, "{}");
  const auto t = load_external(dir / "x.tsv");
  ASSERT_EQ(t.rows.size(), vecs.size());
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    const corpus::WindowKey key{"src" + std::to_string(i % 3), "doc", i};
    EXPECT_EQ(t.rows.at(key), vecs[i]);
    EXPECT_EQ(t.labels.at(key), "src" + std::to_string(i % 3));
  }
}
