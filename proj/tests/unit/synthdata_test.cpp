#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "support.hpp"
#include "utep/evalmetrics.hpp"
#include "utep/synthdata.hpp"

using namespace utep;

namespace {

std::map<int, std::size_t> class_counts(const LabeledBatch& b) {
  std::map<int, std::size_t> out;
  for (int y : b.y) ++out[y];
  return out;
}

std::vector<double> column_mean(const Array2& x) {
  std::vector<double> m(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k) m[k] += x(i, k) / static_cast<double>(x.rows());
  return m;
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("two moons shape, labels and determinism") {
  MoonsParams p;
  p.n_per_domain = 200;
  const DomainPair a = gen_two_moons_shift(p, 3);
  const DomainPair b = gen_two_moons_shift(p, 3);
  const DomainPair c = gen_two_moons_shift(p, 4);
  CHECK(a.source.size() == 200);
  CHECK(a.target.size() == 200);
  CHECK(a.classes == 2);
  CHECK(a.source.x == b.source.x);
  CHECK(a.target.x == b.target.x);
  CHECK_FALSE(a.source.x == c.source.x);
  CHECK(class_counts(a.source)[0] == 100);
  CHECK(std::all_of(a.source.domain.begin(), a.source.domain.end(), [](int d) { return d == kSourceDomain; }));
  CHECK(std::all_of(a.target.domain.begin(), a.target.domain.end(), [](int d) { return d == kTargetDomain; }));
  CHECK_THROWS_AS(gen_two_moons_shift(MoonsParams{3, 30.0, 0.0, 0.0, 0.1}, 1), std::invalid_argument);
}

TEST_CASE("zero rotation leaves the domains indistinguishable") {
  MoonsParams p;
  p.rotation_deg = 0.0;
  p.n_per_domain = 500;
  const DomainPair pair = gen_two_moons_shift(p, 5);
  const auto a = proxy_a_distance(pair.source.x, pair.target.x, 5);
  CHECK(a.error > 0.4);
  CHECK(a.distance < 0.4);
}

TEST_CASE("rotation turns the target about the moons' centre") {
  MoonsParams p;
  p.noise = 0.0;
  p.rotation_deg = 90.0;
  p.n_per_domain = 400;
  const DomainPair pair = gen_two_moons_shift(p, 6);
  // Noise-free moons: rotation about (0.5, 0.25) preserves the distance to it.
  auto radii = [](const LabeledBatch& b) {
    std::vector<double> r;
    for (std::size_t i = 0; i < b.size(); ++i) r.push_back(std::hypot(b.x(i, 0) - 0.5, b.x(i, 1) - 0.25));
    std::sort(r.begin(), r.end());
    return r;
  };
  const auto rs = radii(pair.source);
  const auto rt = radii(pair.target);
  CHECK(std::abs(rs.front() - rt.front()) < 0.05);
  CHECK(std::abs(rs.back() - rt.back()) < 0.05);
  CHECK_FALSE(pair.source.x == pair.target.x);
}

TEST_CASE("blobs: target means move by the shift") {
  BlobsParams p;
  p.classes = 3;
  p.dim = 2;
  p.shift = {2.0, 0.0};
  p.sigma = 0.5;
  p.n_per_domain = 3000;
  const DomainPair pair = gen_gaussian_blobs(p, 7);
  const auto ms = column_mean(pair.source.x);
  const auto mt = column_mean(pair.target.x);
  CHECK(mt[0] - ms[0] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::abs(mt[1] - ms[1]) < 0.1);
  CHECK(blob_means(p).size() == 3);
}

TEST_CASE("blob density ratio is 1 without shift and matches the closed form") {
  BlobsParams p;
  p.classes = 2;
  p.dim = 1;
  p.sigma = 1.0;
  p.radius = 1.0;
  const std::vector<double> x = {0.3};
  CHECK(blob_density_ratio(p, x) == doctest::Approx(1.0).epsilon(1e-14));

  // One-dimensional check against a direct mixture evaluation.
  p.shift = {0.7};
  const auto means = blob_means(p);
  auto mix = [&](double v, double shift) {
    double acc = 0.0;
    for (const auto& m : means) acc += std::exp(-0.5 * std::pow(v - m[0] - shift, 2));
    return acc;
  };
  for (double v : {-2.0, -0.4, 0.0, 0.9, 2.5}) {
    const std::vector<double> pt = {v};
    CHECK(blob_density_ratio(p, pt) == doctest::Approx(mix(v, 0.7) / mix(v, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("uda split hides every target label") {
  const DomainPair pair = gen_two_moons_shift(MoonsParams{}, 1);
  const DomainSplit s = make_splits(pair, SplitSpec{SplitMode::Uda, 0.01, 0}, 1);
  CHECK(s.labeled_target.size() == 0);
  CHECK(s.unlabeled_target.size() == pair.target.size());
  CHECK(std::none_of(s.unlabeled_target.labeled.begin(), s.unlabeled_target.labeled.end(), [](bool b) { return b; }));
}

TEST_CASE("ssda one percent is stratified") {
  MoonsParams p;
  p.n_per_domain = 1000;
  const DomainPair pair = gen_two_moons_shift(p, 2);
  const DomainSplit s = make_splits(pair, SplitSpec{SplitMode::Ssda, 0.01, 0}, 2);
  CHECK(s.labeled_target.size() == 10);
  auto counts = class_counts(s.labeled_target);
  CHECK(counts[0] == 5);
  CHECK(counts[1] == 5);
  CHECK(s.unlabeled_target.size() == 990);

  const DomainSplit k = make_splits(pair, SplitSpec{SplitMode::Ssda, 0.01, 3}, 2);
  CHECK(k.labeled_target.size() == 6);
}

TEST_CASE("ssl keeps k labels per class in one domain") {
  BlobsParams p;
  p.classes = 4;
  p.n_per_domain = 200;
  const DomainPair pair = gen_gaussian_blobs(p, 3);
  const DomainSplit s = make_splits(pair, SplitSpec{SplitMode::Ssl, 0.01, 3}, 3);
  CHECK(s.labeled_source.size() == 12);
  for (const auto& [c, n] : class_counts(s.labeled_source)) CHECK(n == 3);
  CHECK(s.labeled_source.size() + s.unlabeled_target.size() == pair.source.size());

  const DomainSplit too_many_try = make_splits(pair, SplitSpec{SplitMode::Ssl, 0.01, 50}, 3);
  CHECK(too_many_try.labeled_source.size() == 200);
  CHECK_THROWS_AS(make_splits(pair, SplitSpec{SplitMode::Ssl, 0.01, 51}, 3), std::invalid_argument);
}

TEST_CASE("balance upsample") {
  const DomainPair base = gen_two_moons_shift(MoonsParams{}, 4);
  CHECK(balance_upsample(base, 1).source.x == base.source.x);

  DomainPair uneven = base;
  std::vector<std::size_t> first80(80);
  for (std::size_t i = 0; i < 80; ++i) first80[i] = i;
  uneven.source = base.source.subset(first80);
  std::vector<std::size_t> first100(100);
  for (std::size_t i = 0; i < 100; ++i) first100[i] = i;
  uneven.target = base.target.subset(first100);

  const DomainPair balanced = balance_upsample(uneven, 9);
  REQUIRE(balanced.source.size() == 100);
  CHECK(balanced.target.size() == 100);
  // Every original id appears at least once.
  std::map<int, int> seen;
  for (int id : balanced.source.id) ++seen[id];
  for (int id : uneven.source.id) CHECK(seen[id] >= 1);

  DomainPair empty = base;
  empty.source = LabeledBatch{};
  CHECK_THROWS_AS(balance_upsample(empty, 1), std::invalid_argument);
}

TEST_CASE("dataset csv round trip") {
  utep::test::ScratchDir dir("csv");
  const DomainPair pair = gen_gaussian_blobs(BlobsParams{}, 5);
  write_dataset_csv(dir / "d.csv", pair);
  const DomainPair back = read_dataset_csv(dir / "d.csv");
  CHECK(back.source.x == pair.source.x);
  CHECK(back.target.y == pair.target.y);
  CHECK(back.classes == pair.classes);
}

}  // TEST_SUITE
