#include "doctest.h"
#include "mbl/config.hpp"
#include "mbl/errors.hpp"

using namespace mbl;

TEST_CASE("config file syntax") {
  const auto f = ConfigFile::parse(
      "# leading comment\n"
      "[pipeline]\n"
      "n_sites = 8, 10   # trailing comment\n"
      "  out=runs/a  \n"
      "\n"
      "[train]\n"
      "lambda = 0.5\n");
  CHECK(f.sections() == std::vector<std::string>{"pipeline", "train"});
  CHECK(f.get("pipeline", "n_sites") == "8, 10");
  CHECK(f.get("pipeline", "out") == "runs/a");
  CHECK(f.has("train", "lambda"));
  CHECK_FALSE(f.has("train", "seed"));
  CHECK_THROWS_AS(f.get("train", "seed"), ConfigError);

  CHECK_THROWS_AS(ConfigFile::parse("key = 1\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[a]\nno equals sign\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[a\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[]\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[a]\n = 3\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/mbl.conf"), ConfigError);
}

TEST_CASE("value parsers") {
  CHECK(parse_double(" 2.5 ") == 2.5);
  CHECK(parse_double("1e-3") == 0.001);
  CHECK_THROWS_AS(parse_double("nan"), ConfigError);
  CHECK_THROWS_AS(parse_double("1.5x"), ConfigError);
  CHECK(parse_u64("42") == 42);
  CHECK_THROWS_AS(parse_u64("-1"), ConfigError);
  CHECK(parse_bool("true"));
  CHECK_FALSE(parse_bool("false"));
  CHECK_THROWS_AS(parse_bool("maybe"), ConfigError);

  CHECK(parse_list("1, 2,3") == std::vector<double>{1, 2, 3});
  const auto r = parse_list("0.1:0.5:0.05");
  CHECK(r.size() == 9);
  CHECK(r.front() == 0.1);
  CHECK(r.back() == 0.5);
  CHECK(parse_list("7:8:0.1").size() == 11);
  CHECK_THROWS_AS(parse_list("1:0:0.1"), ConfigError);
  CHECK_THROWS_AS(parse_list("0:1:0"), ConfigError);
  CHECK_THROWS_AS(parse_list("0:1"), ConfigError);
  CHECK_THROWS_AS(parse_list(""), ConfigError);
}

TEST_CASE("defaults") {
  const PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.n_sites == std::vector<int>{8, 10, 12});
  CHECK(c.baseline.h.front() == 0.5);
  CHECK(c.baseline.h.back() == 8.0);
  CHECK(c.predict.h.size() == 32);
  CHECK(c.predict.realizations == 50);
  CHECK(c.grids.epsilon.size() == 19);
  const auto o = c.build_options(10);
  CHECK(o.n_sites == 10);
  CHECK(o.k == 50);
  CHECK(o.scale == 1.0);
}

TEST_CASE("pipeline config from text") {
  const auto c = pipeline_config(ConfigFile::parse(
      "[pipeline]\nn_sites = 6, 8\nmaster_seed = 7\nworkers = 2\nout = /tmp/x\n"
      "[dataset]\nscale = 0.25\nk = 10\nboundary = open\nrealizations = 3\n"
      "[grids]\nepsilon = 0.25, 0.5\n"
      "[baseline]\nwindow = 0.1\n"
      "[train]\nlambda = 0.3\nadversary = false\nmax_epochs = 7\n"
      "[predict]\nh = 1:3:1\n"
      "[collapse]\nerror_factor = 1.5\nband_lo = 0.2\n"));
  CHECK(c.n_sites == std::vector<int>{6, 8});
  CHECK(c.master_seed == 7);
  CHECK(c.workers == 2);
  CHECK(c.out == "/tmp/x");
  CHECK(c.scale == 0.25);
  CHECK(c.k == 10);
  CHECK(c.boundary == Boundary::open);
  CHECK(c.realizations == 3u);
  CHECK(c.grids.epsilon == std::vector<double>{0.25, 0.5});
  CHECK(c.baseline.window == 0.1);
  CHECK(c.train.lambda == 0.3);
  CHECK_FALSE(c.train.adversary_enabled);
  CHECK(c.train.max_epochs == 7);
  CHECK(c.predict.h == std::vector<double>{1, 2, 3});
  CHECK(c.collapse.error_factor == 1.5);
  CHECK(c.band.lo == 0.2);
}

TEST_CASE("rejected configurations") {
  const auto bad = [](const char* text) { return pipeline_config(ConfigFile::parse(text)); };
  CHECK_THROWS_AS(bad("[pipelin]\nworkers = 1\n"), ConfigError);
  CHECK_THROWS_AS(bad("[pipeline]\nworker = 1\n"), ConfigError);
  CHECK_THROWS_AS(bad("[pipeline]\nn_sites = 7\n"), ConfigError);
  CHECK_THROWS_AS(bad("[pipeline]\nn_sites = 8.5\n"), ConfigError);
  CHECK_THROWS_AS(bad("[pipeline]\nworkers = 0\n"), ConfigError);
  CHECK_THROWS_AS(bad("[dataset]\nscale = 0\n"), ConfigError);
  CHECK_THROWS_AS(bad("[dataset]\nboundary = twisted\n"), ConfigError);
  CHECK_THROWS_AS(bad("[grids]\nepsilon = 0.5, 1.5\n"), ConfigError);
  CHECK_THROWS_AS(bad("[train]\ndropout = 1\n"), ConfigError);
  CHECK_THROWS_AS(bad("[train]\nbatch_size = 1\n"), ConfigError);
  CHECK_THROWS_AS(bad("[collapse]\nband_hi = 0.4\n"), ConfigError);
  CHECK_THROWS_AS(bad("[collapse]\nnu_step = 0\n"), ConfigError);
  try {
    bad("[train]\nlambda = lots\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
  }
}

TEST_CASE("canonical text round trip") {
  PipelineConfig c;
  c.n_sites = {6, 10};
  c.master_seed = 123456789012345ull;
  c.scale = 0.1 + 0.2;  // not exactly representable in short decimal
  c.realizations = 4;
  c.grids.mbl_h = {7.0, 7.25};
  c.train.learning_rate = 1.0 / 3.0;
  c.train.adversary_enabled = false;
  c.predict.epsilon = {0.5};
  c.collapse.h_c_step = 0.05;
  const auto text = to_text(c);
  const auto back = pipeline_config(ConfigFile::parse(text));
  CHECK(to_text(back) == text);
  CHECK(back.scale == c.scale);
  CHECK(back.train == c.train);
  CHECK(back.grids.mbl_h == c.grids.mbl_h);
  CHECK(back.realizations == c.realizations);
  CHECK(to_text(pipeline_config(ConfigFile::parse(to_text(PipelineConfig{})))) == to_text(PipelineConfig{}));
}
