#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "support.hpp"
#include "utep/trainer.hpp"

using namespace utep;

namespace {

ExperimentConfig quick_config(Method method, std::size_t epochs) {
  ExperimentConfig c;
  c.method = method;
  c.epochs = epochs;
  c.n_per_domain = 200;
  c.mc_passes = 4;
  c.hidden_dim = 16;
  c.feature_dim = 8;
  c.disc_hidden = 8;
  return c;
}

std::vector<const Parameter*> params_of(const ModelBundle& b) { return b.parameters(); }

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("sgd momentum recurrences") {
  Parameter p("p", Array2::scalar(0.0));
  Parameter* params[] = {&p};
  {
    SgdMomentum opt(1.0, 0.0);
    p.grad = Array2::scalar(1.0);
    opt.step(params);
    CHECK(p.value[0] == -1.0);
  }
  p.value = Array2::scalar(0.0);
  {
    SgdMomentum opt(0.1, 0.9);
    double theta = 0.0, v = 0.0;
    for (int k = 0; k < 2; ++k) {
      p.grad = Array2::scalar(1.0);
      opt.step(params);
      v = 0.9 * v + 1.0;
      theta -= 0.1 * v;
    }
    CHECK(p.value[0] == doctest::Approx(-0.29).epsilon(1e-14));
    CHECK(p.value[0] == theta);
    // Zero gradient: the update comes from the velocity alone.
    p.grad = Array2::scalar(0.0);
    opt.step(params);
    CHECK(p.value[0] == doctest::Approx(theta - 0.1 * 0.9 * v));
  }
  {
    Parameter q("q", Array2::scalar(2.0));
    Parameter* qs[] = {&q};
    SgdMomentum opt(0.5, 0.9);
    opt.step(qs);
    CHECK(q.value[0] == 2.0);
    q.grad = Array2::scalar(NAN);
    CHECK_THROWS_AS(opt.step(qs), ndgrad::NonFiniteError);
  }
}

TEST_CASE("epoch sampler covers the pool before repeating") {
  EpochSampler s(10, 3, RngStream(4));
  std::set<std::size_t> seen;
  for (int k = 0; k < 3; ++k)
    for (std::size_t i : s.next()) CHECK(seen.insert(i).second);
  CHECK(seen.size() == 9);
  CHECK(s.next().size() == 3);
}

TEST_CASE("warm-up factor") {
  CHECK(warmup_factor(0.0, 0.2) == 0.0);
  CHECK(warmup_factor(0.1, 0.2) == doctest::Approx(0.5));
  CHECK(warmup_factor(0.5, 0.2) == 1.0);
  CHECK(warmup_factor(0.0, 0.0) == 1.0);
}

TEST_CASE("accuracy") {
  NetConfig nc;
  nc.input_dim = 1;
  nc.hidden_dim = 2;
  nc.feature_dim = 2;
  nc.disc_hidden = 2;
  RngStream rng(1);
  ModelBundle b(nc, rng);
  Linear& fc = b.classifier_layer();
  fc.weight.value = Array2(2, 2);
  fc.bias.value = Array2{{1.0, 0.0}};  // always predicts class 0
  LabeledBatch pool;
  pool.x = Array2{{0.0}, {1.0}, {2.0}, {3.0}};
  pool.y = {0, 1, 0, 1};
  pool.domain = {0, 0, 0, 0};
  pool.labeled = {false, false, false, false};
  pool.id = {0, 1, 2, 3};
  CHECK(accuracy(b, pool) == 0.5);
  pool.y = {0, 0, 0, 0};
  CHECK(accuracy(b, pool) == 1.0);
  CHECK_THROWS_AS(accuracy(b, LabeledBatch{}), std::invalid_argument);
}

TEST_CASE("zero epochs returns the initialization") {
  ExperimentConfig c = quick_config(Method::DannUtep, 0);
  const auto result = train(c, prepare_split(c));
  RngStream init = RngStream::derive(c.seed, "init");
  ModelBundle fresh(net_config(c, 2, 2), init);
  const auto a = params_of(result.bundle);
  const auto b = params_of(fresh);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
  CHECK(result.metrics.rows.empty());
}

TEST_CASE("same config and seed give identical metrics") {
  for (Method m : {Method::Dann, Method::DannUtep}) {
    ExperimentConfig c = quick_config(m, 3);
    const auto split = prepare_split(c);
    const auto a = train(c, split);
    const auto b = train(c, split);
    CHECK(a.metrics.to_csv() == b.metrics.to_csv());
    CHECK(a.metrics.rows.size() == 3);
  }
}

TEST_CASE("metrics rows follow eval_every and the last epoch") {
  ExperimentConfig c = quick_config(Method::Dann, 5);
  c.eval_every = 2;
  const auto r = train(c, prepare_split(c));
  REQUIRE(r.metrics.rows.size() == 3);
  CHECK(r.metrics.rows[0].epoch == 2);
  CHECK(r.metrics.rows[1].epoch == 4);
  CHECK(r.metrics.rows[2].epoch == 5);
  const std::string csv = r.metrics.to_csv();
  CHECK(csv.rfind("epoch,L_y,L_adv,L_bias,L_pce,L_nce,L_total,target_accuracy,source_accuracy,mean_u,mean_mu,"
                  "proxy_A_distance,wall_ms\n", 0) == 0);
  for (const auto& row : r.metrics.rows) CHECK(row.wall_ms == 0.0);
}

TEST_CASE("baselines log zero uncertainty terms") {
  ExperimentConfig c = quick_config(Method::Dann, 2);
  const auto r = train(c, prepare_split(c));
  for (const auto& row : r.metrics.rows) {
    CHECK(row.l_bias == 0.0);
    CHECK(row.l_pce == 0.0);
    CHECK(row.l_nce == 0.0);
  }
}

TEST_CASE("no-shift moons: dann reaches 99 percent") {
  for (std::uint64_t seed : {1, 2, 3}) {
    ExperimentConfig c;
    c.method = Method::Dann;
    c.rotation_deg = 0.0;
    c.epochs = 100;
    c.eval_every = 100;
    c.seed = seed;
    const auto r = train(c, prepare_split(c));
    CAPTURE(seed);
    CHECK(r.metrics.rows.back().target_accuracy >= 0.99);
  }
}

TEST_CASE("source-only accuracy drops on the rotated target") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig c;
    c.method = Method::SourceOnly;
    c.epochs = 60;
    c.eval_every = 60;
    c.seed = seed;
    const auto r = train(c, prepare_split(c));
    CAPTURE(seed);
    CHECK(r.metrics.rows.back().target_accuracy < r.metrics.rows.back().source_accuracy);
  }
}

TEST_CASE("ssda training consumes labeled target batches") {
  ExperimentConfig c = quick_config(Method::DannUtep, 2);
  c.mode = SplitMode::Ssda;
  c.batch_src = 8;
  c.batch_tgt_labeled = 2;
  c.batch_tgt_unlabeled = 16;
  c.label_fraction = 0.05;
  const auto split = prepare_split(c);
  CHECK(split.labeled_target.size() == 10);
  const auto r = train(c, split);
  CHECK(r.metrics.rows.size() == 2);
  CHECK(r.steps_per_epoch == (split.unlabeled_target.size() + 15) / 16);
}

TEST_CASE("non-finite training aborts with a batch dump") {
  utep::test::ScratchDir dir("abort");
  ExperimentConfig c = quick_config(Method::Dann, 3);
  c.lr = 1e200;
  TrainOptions opt;
  opt.dump_dir = dir.path();
  CHECK_THROWS_AS(train(c, prepare_split(c), opt), TrainingAborted);
  CHECK(std::filesystem::exists(dir / "abort_batch.csv"));
}

TEST_CASE("uncertainty dumps") {
  utep::test::ScratchDir dir("dumps");
  ExperimentConfig c = quick_config(Method::DannUtep, 2);
  TrainOptions opt;
  opt.dump_dir = dir.path();
  opt.dump_uncertainty = true;
  (void)train(c, prepare_split(c), opt);
  const std::string u = utep::test::read_file(dir / "uncertainty_epoch2.csv");
  const std::string p = utep::test::read_file(dir / "pseudo_epoch2.csv");
  CHECK(u.rfind("sample_id,domain,u,mu,s\n", 0) == 0);
  CHECK(p.rfind("sample_id,argmax,g_max,positive_count,negative_count,s\n", 0) == 0);
}

}  // TEST_SUITE
