#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pivotcap/corpus_io.hpp"
#include "pivotcap/error.hpp"
#include "pivotcap/rng.hpp"

using namespace pivotcap;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

FeatureFile random_features(int rows, int dim, std::uint64_t seed) {
  FeatureFile f;
  f.dim = dim;
  SplitRng rng(seed);
  for (int r = 0; r < rows; ++r) {
    f.scene_ids.push_back(r * 3 + 1);
    for (int c = 0; c < dim; ++c) f.data.push_back(rng.normal(0.0, 1.0));
  }
  return f;
}

}  // namespace

TEST_CASE("sentences round trip") {
  const std::string path = "io_sentences.txt";
  const std::vector<TokenSeq> sentences = {
      {"the", "dog", "chases", "the", "ball"},
      {},
      {"one", "word"},
  };
  write_sentences(path, sentences);
  CHECK(read_sentences(path) == sentences);
  std::remove(path.c_str());
}

TEST_CASE("unwritable tokens are rejected") {
  const std::string path = "io_bad_tokens.txt";
  CHECK_THROWS_AS(write_sentences(path, {{"two words"}}), Error);
  CHECK_THROWS_AS(write_sentences(path, {{""}}), Error);
  std::remove(path.c_str());
}

TEST_CASE("stray spaces fail the read") {
  const std::string path = "io_stray_space.txt";
  spit(path, "a  b\n");
  CHECK_THROWS_AS(read_sentences(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("parallel corpus loads aligned files") {
  write_sentences("io_par.src", {{"a", "b"}, {"c"}});
  write_sentences("io_par.tgt", {{"x"}, {"y", "z"}});
  ParallelCorpus corpus = read_parallel("io_par.src", "io_par.tgt");
  CHECK(corpus.src.size() == 2);
  CHECK(corpus.tgt[1] == TokenSeq{"y", "z"});
  std::remove("io_par.src");
  std::remove("io_par.tgt");
}

TEST_CASE("unequal line counts name both files") {
  write_sentences("io_mis.src", {{"a"}, {"b"}, {"c"}});
  write_sentences("io_mis.tgt", {{"x"}});
  try {
    read_parallel("io_mis.src", "io_mis.tgt");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("io_mis.src") != std::string::npos);
    CHECK(msg.find("io_mis.tgt") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
  std::remove("io_mis.src");
  std::remove("io_mis.tgt");
}

TEST_CASE("features round trip bitwise") {
  const std::string path = "io_feats.bin";
  FeatureFile f = random_features(7, 5, 11);
  write_features(path, f);
  FeatureFile g = read_features(path);
  CHECK(g.dim == f.dim);
  CHECK(g.scene_ids == f.scene_ids);
  CHECK(g.data == f.data);

  TensorPtr t = g.as_tensor();
  CHECK(t->rows() == 7);
  CHECK(t->cols() == 5);

  write_features(path + ".b", g);
  CHECK(slurp(path) == slurp(path + ".b"));
  std::remove(path.c_str());
  std::remove((path + ".idx").c_str());
  std::remove((path + ".b").c_str());
  std::remove((path + ".b.idx").c_str());
}

TEST_CASE("a zero-row feature file is an empty set") {
  const std::string path = "io_feats_empty.bin";
  FeatureFile f;
  f.dim = 4;
  write_features(path, f);
  FeatureFile g = read_features(path);
  CHECK(g.rows() == 0);
  CHECK(g.dim == 4);
  CHECK_THROWS_AS(g.as_tensor(), Error);
  std::remove(path.c_str());
  std::remove((path + ".idx").c_str());
}

TEST_CASE("designed feature file failures") {
  const std::string path = "io_feats_bad.bin";
  FeatureFile f = random_features(3, 4, 5);
  write_features(path, f);
  const std::string good = slurp(path);

  SUBCASE("magic mismatch") {
    std::string bad = good;
    bad[0] = 'X';
    spit(path, bad);
    CHECK_THROWS_WITH_AS(read_features(path),
                         doctest::Contains("bad magic"), Error);
  }
  SUBCASE("truncated payload") {
    spit(path, good.substr(0, good.size() - 9));
    CHECK_THROWS_WITH_AS(read_features(path),
                         doctest::Contains("truncated"), Error);
  }
  SUBCASE("trailing bytes") {
    spit(path, good + "extra");
    CHECK_THROWS_WITH_AS(read_features(path),
                         doctest::Contains("trailing"), Error);
  }
  SUBCASE("index row count mismatch") {
    spit(path + ".idx", "1\n2\n");
    CHECK_THROWS_AS(read_features(path), Error);
  }
  std::remove(path.c_str());
  std::remove((path + ".idx").c_str());
}

TEST_CASE("references round trip") {
  const std::string prefix = "io_refs";
  const std::vector<std::vector<TokenSeq>> refs = {
      {{"a", "b"}, {"a", "c"}, {"d"}},
      {{"e"}, {"f", "g"}, {"h"}},
  };
  write_references(prefix, refs);
  CHECK(read_references(prefix, 3) == refs);
  for (int k = 0; k < 3; ++k) {
    std::remove((prefix + ".ref" + std::to_string(k)).c_str());
  }
}

TEST_CASE("reference sets must be rectangular") {
  CHECK_THROWS_AS(write_references("io_refs_bad", {{{"a"}}, {{"b"}, {"c"}}}),
                  Error);

  write_sentences("io_refs_mis.ref0", {{"a"}, {"b"}});
  write_sentences("io_refs_mis.ref1", {{"c"}});
  CHECK_THROWS_AS(read_references("io_refs_mis", 2), Error);
  std::remove("io_refs_mis.ref0");
  std::remove("io_refs_mis.ref1");
}
