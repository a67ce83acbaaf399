#include "doctest.h"

#include <cmath>

#include "synth.hpp"
#include "w2c/akn.hpp"
#include "w2c/binio.hpp"
#include "w2c/random.hpp"

using namespace w2c;

namespace {

const std::vector<std::size_t> kABC{2, 3, 4};  // a, b, c

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("reciprocal distance accumulation") {
  AssocNetwork net(5);
  net.update(kABC);
  CHECK(std::abs(net.score(2, 3) - 1.0) < 1e-9);
  CHECK(std::abs(net.score(3, 4) - 1.0) < 1e-9);
  CHECK(std::abs(net.score(2, 4) - 0.5) < 1e-9);
  CHECK(std::abs(net.score(4, 2) - 0.5) < 1e-9);
  CHECK(net.score(2, 2) == 0.0);

  const std::vector<std::size_t> ab{2, 3};
  net.update(ab);
  CHECK(std::abs(net.score(2, 3) - 1.95) < 1e-9);
  CHECK(std::abs(net.score(2, 4) - 0.475) < 1e-9);
  CHECK(std::abs(net.score(3, 4) - 0.95) < 1e-9);
}

TEST_CASE("single-token sentence only decays") {
  AssocNetwork net(5);
  net.update(kABC);
  const std::vector<std::size_t> one{3};
  net.update(one);
  CHECK(std::abs(net.score(2, 3) - 0.95) < 1e-12);
  CHECK(net.entry_count() == 3);
  CHECK(net.sentences_seen() == 2);
}

TEST_CASE("repeated tokens accumulate on one pair") {
  AssocNetwork net(4);
  const std::vector<std::size_t> s{2, 2, 3, 2};
  net.update(s);
  // (2,2): positions 0-1, 0-3, 1-3 -> 1 + 1/3 + 1/2
  CHECK(std::abs(net.score(2, 2) - (1.0 + 1.0 / 3 + 0.5)) < 1e-12);
  // (2,3): 0-2, 1-2, 2-3 -> 1/2 + 1 + 1
  CHECK(std::abs(net.score(2, 3) - 2.5) < 1e-12);
}

TEST_CASE("out-of-range id is rejected without modifying the network") {
  AssocNetwork net(5);
  net.update(kABC);
  const auto before = net.triples();
  const std::vector<std::size_t> bad{1, 9};
  CHECK_THROWS_AS(net.update(bad), ShapeError);
  CHECK(net.triples() == before);
  CHECK(net.sentences_seen() == 1);
}

TEST_CASE("shrink rate validation") {
  CHECK_THROWS(AssocNetwork(3, 0.0));
  CHECK_THROWS(AssocNetwork(3, 1.5));
  CHECK_NOTHROW(AssocNetwork(3, 1.0));
  CHECK(kDefaultShrinkRate == 0.95);
}

TEST_CASE("processing order matters") {
  const std::vector<std::size_t> s1{0, 1}, s2{0, 2, 1};
  AssocNetwork x(3), y(3);
  x.update(s1);
  x.update(s2);
  y.update(s2);
  y.update(s1);
  // x: 0.95 * 1 + 0.5 = 1.45, y: 0.95 * 0.5 + 1 = 1.475
  CHECK(std::abs(x.score(0, 1) - 1.45) < 1e-12);
  CHECK(std::abs(y.score(0, 1) - 1.475) < 1e-12);
}

TEST_CASE("associative matrix examples") {
  AssocNetwork net(5);
  net.update(kABC);
  Matrix m = sample_assoc_matrix(net, kABC);
  // row a: scores (0, 1, 0.5), mean 0.5
  CHECK(m(0, 0) == 0.0);
  CHECK(std::abs(m(0, 1) - (sig(2.0) - 0.5)) < 1e-9);
  CHECK(std::abs(m(0, 1) - 0.3808) < 1e-4);
  CHECK(std::abs(m(0, 2) - (sig(1.0) - 0.5)) < 1e-9);

  const std::vector<std::size_t> lonely{2, 0};
  Matrix z = sample_assoc_matrix(net, lonely);
  for (double v : z.row(1)) CHECK(v == 0.0);
  Matrix single = sample_assoc_matrix(net, std::vector<std::size_t>{3});
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == 0.0);
}

TEST_CASE("symmetry, nonnegativity and bounded associative matrices on random networks") {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    const std::size_t v = 2 + rng.below(12);
    AssocNetwork net(v, rng.uniform(0.5, 1.0));
    const std::size_t sentences = 1 + rng.below(20);
    for (std::size_t s = 0; s < sentences; ++s) {
      std::vector<std::size_t> ids(1 + rng.below(12));
      for (auto& id : ids) id = rng.below(v);
      net.update(ids);
    }
    for (std::size_t i = 0; i < v; ++i) {
      for (std::size_t j = 0; j < v; ++j) {
        CHECK(net.score(i, j) == net.score(j, i));
        CHECK(net.score(i, j) >= 0.0);
      }
    }
    std::vector<std::size_t> probe(1 + rng.below(10));
    for (auto& id : probe) id = rng.below(v);
    Matrix m = sample_assoc_matrix(net, probe);
    for (double x : m.data()) {
      CHECK(x > -0.5);
      CHECK(x < 0.5);
    }
  }
}

TEST_CASE("long corpora stay finite under the decay") {
  AssocNetwork net(4, 0.5);
  const std::vector<std::size_t> s{0, 1};
  const std::vector<std::size_t> other{2, 3};
  net.update(s);
  for (int i = 0; i < 5000; ++i) net.update(other);
  CHECK(net.score(0, 1) >= 0.0);
  CHECK(std::isfinite(net.score(2, 3)));
  CHECK(std::abs(net.score(2, 3) - 2.0) < 1e-9);  // fixed point of x = 0.5 x + 1
}

TEST_CASE("AKN file round trip") {
  auto data = test::sentiment_corpus(40, 9);
  AssocNetwork net(60);
  Rng rng(3);
  for (int s = 0; s < 40; ++s) {
    std::vector<std::size_t> ids(2 + rng.below(8));
    for (auto& id : ids) id = rng.below(60);
    net.update(ids);
  }
  AssocNetwork back = parse_akn(serialize_akn(net));
  CHECK(back.triples() == net.triples());
  CHECK(back.vocab_size() == 60);
  CHECK(back.shrink_rate() == net.shrink_rate());

  AssocNetwork empty(7, 0.8);
  AssocNetwork empty_back = parse_akn(serialize_akn(empty));
  CHECK(empty_back.entry_count() == 0);
  CHECK(empty_back.vocab_size() == 7);
  CHECK(empty_back.shrink_rate() == 0.8);

  auto dir = test::scratch_dir("akn");
  save_akn(net, dir / "n.w2ca");
  CHECK(load_akn(dir / "n.w2ca").triples() == net.triples());
}

TEST_CASE("malformed AKN files are rejected") {
  AssocNetwork net(5);
  net.update(kABC);
  std::string bytes = serialize_akn(net);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_akn(magic), FormatError);

  std::string version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(parse_akn(version), FormatError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    CHECK_THROWS_AS(parse_akn(bytes.substr(0, cut)), FormatError);
  }
  CHECK_THROWS_AS(parse_akn(bytes + "x"), FormatError);

  // an index beyond v
  ByteWriter w;
  w.bytes("W2CA");
  w.u32(kAknVersion);
  w.u32(2);
  w.f64(0.95);
  w.u64(1);
  w.u32(0);
  w.u32(5);
  w.f64(1.0);
  CHECK_THROWS_AS(parse_akn(w.str()), FormatError);
}
