#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "steep/experiments.hpp"

using namespace steep;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("steep_harness_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_needles(const fs::path& out, std::uint64_t threads = 1) {
  auto cfg = RunConfig::defaults(Experiment::needles);
  cfg.seed = 99;
  cfg.out_dir = out.string();
  cfg.reps = 3;
  cfg.n_iter = 500;
  cfg.burn_in = 100;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("ladder spec parsing") {
    auto g = LadderSpec::parse("7776,6");
    CHECK(g.kind == LadderSpec::Kind::geometric);
    CHECK(g.resolve().size() == 6);
    CHECK(LadderSpec::parse("auto").kind == LadderSpec::Kind::auto_tune);
    auto l = LadderSpec::parse("1,3,9");
    CHECK(l.kind == LadderSpec::Kind::explicit_list);
    CHECK(l.resolve().temperatures() == std::vector<double>{1, 3, 9});
    auto two = LadderSpec::parse("list:1,4");
    CHECK(two.kind == LadderSpec::Kind::explicit_list);
    CHECK(LadderSpec::parse(two.to_string()).temperatures == two.temperatures);
    CHECK_THROWS_AS(LadderSpec::parse("1,x"), ConfigError);
    CHECK_THROWS_AS(LadderSpec::parse("auto").resolve(), ConfigError);
  }

  TEST_CASE("config defaults and validation") {
    auto cfg = RunConfig::defaults(Experiment::needles);
    CHECK(cfg.reps == 100);
    CHECK(cfg.burn_in == 1000);
    CHECK(cfg.thin == 10);
    CHECK(cfg.ladder.resolve().size() == 6);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no seed
    cfg.seed = 1;
    CHECK_NOTHROW(cfg.validate());
    cfg.s = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const auto phylo = RunConfig::defaults(Experiment::phylo);
    CHECK(phylo.ladder.resolve().size() == 4);
    CHECK(phylo.n_iter == 50000);
    CHECK(phylo.burn_in == 5000);
  }

  TEST_CASE("config merge rejects unknown keys and wrong types") {
    auto cfg = RunConfig::defaults(Experiment::needles);
    CHECK_THROWS_AS(cfg.merge(nlohmann::json{{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(cfg.merge(nlohmann::json{{"reps", "many"}}), ConfigError);
    CHECK_THROWS_AS(cfg.merge(nlohmann::json{{"experiment", "phylo"}}), ConfigError);
    cfg.merge(nlohmann::json{{"reps", 7}, {"ladder", "216,6"}, {"seed", 3}});
    CHECK(cfg.reps == 7);
    CHECK(*cfg.seed == 3);
    CHECK(cfg.ladder.resolve().size() == 4);
    auto again = RunConfig::defaults(Experiment::needles);
    again.merge(cfg.to_json());
    CHECK(again.to_json() == cfg.to_json());
  }

  TEST_CASE("config file with comments") {
    const auto dir = scratch("cfgfile");
    fs::create_directories(dir);
    {
      std::ofstream f(dir / "c.json");
      f << "{\n  // short run\n  \"reps\": 2,\n  \"seed\": 5\n}\n";
    }
    const auto cfg = load_config_file((dir / "c.json").string(), Experiment::needles);
    CHECK(cfg.reps == 2);
    CHECK(*cfg.seed == 5);
    CHECK_THROWS_AS(load_config_file((dir / "missing.json").string(), Experiment::needles), ConfigError);
  }

  TEST_CASE("trace round trip") {
    std::string out = trace_header(StateFormat::coords, 2);
    std::vector<TraceRecord> recs{
        {0, 0, 0, "init", false, -1.25, {0.0, 0.0}, ""},
        {0, 0, 1, "local", true, 0.1 + 0.2, {1e-300, -3.141592653589793}, ""},
        {0, 1, 1, "long", false, kNegInf, {2.5, 7.0}, ""},
    };
    for (const auto& r : recs) append_trace_row(out, r, StateFormat::coords);
    std::istringstream in(out);
    const auto t = read_trace(in);
    CHECK(t.dim == 2);
    REQUIRE(t.records.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(t.records[i].kind == recs[i].kind);
      CHECK(t.records[i].accepted == recs[i].accepted);
      CHECK(t.records[i].log_density == recs[i].log_density);
      CHECK(t.records[i].coords == recs[i].coords);
    }
    std::string nw = trace_header(StateFormat::newick, 0);
    append_trace_row(nw, {0, 0, 5, "long", true, -10.5, {}, "(1,(2,3),(4,5));"}, StateFormat::newick);
    std::istringstream nin(nw);
    const auto tn = read_trace(nin);
    CHECK(tn.format == StateFormat::newick);
    CHECK(tn.records.at(0).tree == "(1,(2,3),(4,5));");
  }

  TEST_CASE("malformed traces report the line") {
    const std::string head = "rep,chain,iter,kind,accepted,log_density,state_0\n";
    const auto expect_line = [](const std::string& text, const std::string& prefix) {
      std::istringstream in(text);
      try {
        read_trace(in);
        FAIL("expected TraceError");
      } catch (const TraceError& e) {
        CHECK(std::string(e.what()).rfind(prefix, 0) == 0);
      }
    };
    expect_line(head + "0,0,1,local,1,0.5,1\n0,0,2,local,1,0.5\n", "line 3:");
    expect_line(head + "0,0,1,sideways,1,0.5,1\n", "line 2:");
    expect_line(head + "0,0,1,local,2,0.5,1\n", "line 2:");
    expect_line(head + "0,0,2,local,1,0.5,1\n0,0,2,local,1,0.5,1\n", "line 3:");
    expect_line(head + "0,0,1,local,1,abc,1\n", "line 2:");
    expect_line("nonsense\n", "line 1:");
  }

  TEST_CASE("empty trace summarizes to zero counts") {
    std::istringstream empty("");
    const auto t = read_trace(empty);
    CHECK(t.records.empty());
    SummaryOptions opt;
    opt.region_center = std::vector<double>{0.0, 0.0};
    const auto j = summarize_records(t.records, StateFormat::coords, opt);
    CHECK(j["records"] == 0);
    CHECK(j["repetitions"] == 0);
    CHECK(j["p_hat"]["n"] == 0);
    CHECK(j["p_hat"]["mean"] == 0.0);
  }

  TEST_CASE("single record inside region A") {
    SummaryOptions opt;
    opt.region_center = std::vector<double>{0.0, 0.0};
    opt.other_center = std::vector<double>{5.0, 5.0};
    const std::vector<TraceRecord> one{{0, 0, 1, "local", true, 0.0, {0.01, 0.0}, ""}};
    const auto j = summarize_records(one, StateFormat::coords, opt);
    CHECK(j["p_hat"]["mean"] == 1.0);
    CHECK(j["mode1_fraction"]["mean"] == 1.0);
    CHECK(j["acceptance"][0]["local_rate"] == 1.0);
  }

  TEST_CASE("describe statistics") {
    const auto j = describe({1, 2, 3, 4, 5});
    CHECK(j["mean"] == 3.0);
    CHECK(j["median"] == 3.0);
    CHECK(j["sd"].get<double>() == doctest::Approx(std::sqrt(2.5)));
    CHECK(j["p05"].get<double>() == doctest::Approx(1.2));
    CHECK(j["p95"].get<double>() == doctest::Approx(4.8));
  }

  TEST_CASE("needles run writes artifacts and its summary is reproducible from the trace") {
    const auto dir = scratch("needles");
    const auto res = run_needles(small_needles(dir));
    for (const char* f : {"config.json", "seed.txt", "trace.csv", "summary.json"}) CHECK(fs::exists(dir / f));
    const auto recomputed = summarize_trace_file((dir / "trace.csv").string());
    CHECK(recomputed.dump() == res.summary["trace_summary"].dump());
    std::ifstream sj(dir / "summary.json");
    const auto on_disk = nlohmann::json::parse(sj);
    CHECK(on_disk["trace_summary"].dump() == recomputed.dump());
    CHECK(on_disk["seed"] == 99);
  }

  TEST_CASE("identical config and seed give byte-identical traces") {
    const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    run_needles(small_needles(a, 1));
    run_needles(small_needles(b, 1));
    run_needles(small_needles(c, 3));
    const auto ta = slurp(a / "trace.csv");
    CHECK(!ta.empty());
    CHECK(ta == slurp(b / "trace.csv"));
    CHECK(ta == slurp(c / "trace.csv"));
    auto other = small_needles(scratch("det_d"));
    other.seed = 100;
    run_needles(other);
    CHECK(ta != slurp(fs::temp_directory_path() / "steep_harness_det_d" / "trace.csv"));
  }

  TEST_CASE("zero sampling iterations") {
    const auto dir = scratch("zero");
    auto cfg = small_needles(dir);
    cfg.n_iter = 0;
    cfg.burn_in = 0;
    const auto res = run_needles(cfg);
    const auto& p = res.summary["trace_summary"]["p_hat"];
    CHECK(p["n"] == 3);
    CHECK(p["mean"] == 1.0);  // each repetition sits at its start (0,0)
  }

  TEST_CASE("spectral-scan refuses exact conductance beyond the enumeration limit") {
    auto cfg = RunConfig::defaults(Experiment::spectral_scan);
    cfg.seed = 1;
    cfg.out_dir = scratch("guard").string();
    cfg.exact_conductance_states = 5000;
    try {
      run_spectral_scan(cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("22") != std::string::npos);
    }
  }

  TEST_CASE("experiments require a seed") {
    auto cfg = RunConfig::defaults(Experiment::optimize);
    cfg.out_dir = scratch("noseed").string();
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  }

  TEST_CASE("rep seeds are distinct") {
    CHECK(rep_seed(1, 0) != rep_seed(1, 1));
    CHECK(rep_seed(1, 0) != rep_seed(2, 0));
    CHECK(rep_seed(1, 0) == rep_seed(1, 0));
  }

  TEST_CASE("parallel_for propagates the first failure") {
    std::vector<int> hit(20, 0);
    parallel_for(20, 4, [&](std::uint64_t i) { hit[i] = 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 2, [](std::uint64_t i) {
                      if (i == 3) throw NumericalError("boom");
                    }),
                    NumericalError);
  }
}
