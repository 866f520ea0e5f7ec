#include <doctest.h>

#include "support.hpp"
#include "utep/config.hpp"

using namespace utep;

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const ExperimentConfig c = parse_config({});
  CHECK(c.mc_passes == 10);
  CHECK(c.beta == 0.95);
  CHECK(c.gamma == 0.05);
  CHECK(c.dropout == 0.5);
  CHECK(c.lr == 0.01);
  CHECK(c.momentum == 0.9);
  CHECK(c.batch_src == 16);
  CHECK(c.batch_tgt_unlabeled == 16);
  CHECK(c.batch_tgt_labeled == 0);
}

TEST_CASE("ssda batch defaults yield to explicit keys") {
  const ExperimentConfig c = parse_config({{"mode", "ssda"}});
  CHECK(c.batch_src == 8);
  CHECK(c.batch_tgt_labeled == 8);
  CHECK(c.batch_tgt_unlabeled == 16);
  const ExperimentConfig d = parse_config({{"batch_src", "4"}, {"mode", "ssda"}});
  CHECK(d.batch_src == 4);
}

TEST_CASE("round trip through entries and text") {
  ExperimentConfig c;
  c.method = Method::Dann;
  c.alpha_bias = 0.125;
  c.lr = 0.003;
  c.use_pce = false;
  c.dataset = "blobs";
  c.shift = {1.5, -0.25};
  c.seed = 42;
  c.out_dir = "runs/x";
  CHECK(parse_config(config_entries(c)) == c);

  utep::test::ScratchDir dir("cfg");
  utep::test::write_file(dir / "c.cfg", "# comment\n" + config_text(c) + "\n  \n");
  CHECK(load_config(dir / "c.cfg") == c);
}

TEST_CASE("file syntax") {
  utep::test::ScratchDir dir("cfg2");
  utep::test::write_file(dir / "a.cfg", "method = \"dann\"  # trailing comment\nseed=7\n");
  const ExperimentConfig c = load_config(dir / "a.cfg");
  CHECK(c.method == Method::Dann);
  CHECK(c.seed == 7);
  utep::test::write_file(dir / "b.cfg", "seed 7\n");
  CHECK_THROWS_AS(load_config(dir / "b.cfg"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("errors name the offending key") {
  auto key_of = [](const ConfigEntries& e) {
    try {
      (void)parse_config(e);
    } catch (const ConfigError& err) {
      return err.key();
    }
    return std::string("<none>");
  };
  CHECK(key_of({{"learning_rate", "0.1"}}) == "learning_rate");
  CHECK(key_of({{"lr", "fast"}}) == "lr");
  CHECK(key_of({{"seed", "1"}, {"seed", "2"}}) == "seed");
  CHECK(key_of({{"beta", "1.0"}}) == "beta");
  CHECK(key_of({{"gamma", "0.96"}}) == "gamma");
  CHECK(key_of({{"alpha_bias", "-1"}}) == "alpha_bias");
  CHECK(key_of({{"K", "1"}}) == "K");
  CHECK(key_of({{"method", "dan"}}) == "method");
  CHECK(key_of({{"use_siw", "yes"}}) == "use_siw");
  CHECK(key_of({{"dataset", "csv"}}) == "data_path");
  CHECK(key_of({{"epochs", "-3"}}) == "epochs");
}

TEST_CASE("method names") {
  for (Method m : {Method::SourceOnly, Method::Dann, Method::DannUtep}) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("utep"), std::invalid_argument);
}

}  // TEST_SUITE
