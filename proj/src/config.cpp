#include "steep/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace steep {
namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

LadderSpec LadderSpec::parse(const std::string& text) {
  LadderSpec l;
  if (text == "auto") {
    l.kind = Kind::auto_tune;
    return l;
  }
  std::string body = text;
  const bool forced_list = body.rfind("list:", 0) == 0;
  if (forced_list) body = body.substr(5);
  const auto values = parse_list(body);
  if (!forced_list && values.size() == 2) {
    l.kind = Kind::geometric;
    l.t_hot = values[0];
    l.tau = values[1];
  } else {
    l.kind = Kind::explicit_list;
    l.temperatures = values;
  }
  return l;
}

std::string LadderSpec::to_string() const {
  switch (kind) {
    case Kind::auto_tune:
      return "auto";
    case Kind::geometric:
      return fmt(t_hot) + "," + fmt(tau);
    case Kind::explicit_list: {
      std::string s = "list:";
      for (std::size_t i = 0; i < temperatures.size(); ++i) s += (i ? "," : "") + fmt(temperatures[i]);
      return s;
    }
  }
  return {};
}

TemperatureLadder LadderSpec::resolve() const {
  switch (kind) {
    case Kind::geometric:
      return geometric_ladder(t_hot, tau);
    case Kind::explicit_list:
      return TemperatureLadder(temperatures);
    case Kind::auto_tune:
      break;
  }
  throw ConfigError("auto ladder must be tuned before it can be resolved");
}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::needles: return "needles";
    case Experiment::phylo: return "phylo";
    case Experiment::spectral_scan: return "spectral-scan";
    case Experiment::optimize: return "optimize";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  if (name == "needles") return Experiment::needles;
  if (name == "phylo") return Experiment::phylo;
  if (name == "spectral-scan") return Experiment::spectral_scan;
  if (name == "optimize") return Experiment::optimize;
  throw ConfigError("unknown experiment '" + name + "'");
}

RunConfig RunConfig::defaults(Experiment e) {
  RunConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::needles:
      break;
    case Experiment::phylo:
      c.reps = 1;
      c.n_iter = 50000;
      c.burn_in = 5000;
      c.ladder = LadderSpec::parse("1000,10");
      break;
    case Experiment::spectral_scan:
      c.reps = 1;
      break;
    case Experiment::optimize:
      c.reps = 10;
      c.thin = 1;
      break;
  }
  return c;
}

void RunConfig::merge(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "experiment", "seed", "out_dir", "reps", "n_iter", "burn_in", "thin", "xi_thin", "s", "ladder", "threads",
      "trace_chains", "target", "mu2", "variance", "ball_delta", "cauchy_gamma", "region_center", "region_radius",
      "initial", "extra_cold", "epsilon", "rosen_a", "rosen_b", "rosen_shift", "fasta", "block_sites",
      "baseline_steps", "compound_p", "oracle", "separated_modes", "grid_states", "mode_a", "mode_b", "mode_scale", "temperatures",
      "suite_instances", "exact_conductance_states"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  if (j.contains("experiment")) {
    const auto name = j.at("experiment").get<std::string>();
    if (parse_experiment(name) != experiment) {
      throw ConfigError(std::string("config is for experiment '") + name + "', not '" + steep::to_string(experiment) +
                        "'");
    }
  }
  if (j.contains("seed")) {
    std::uint64_t v = 0;
    take(j, "seed", v);
    seed = v;
  }
  take(j, "out_dir", out_dir);
  take(j, "reps", reps);
  take(j, "n_iter", n_iter);
  take(j, "burn_in", burn_in);
  take(j, "thin", thin);
  take(j, "xi_thin", xi_thin);
  take(j, "s", s);
  if (j.contains("ladder")) {
    if (j.at("ladder").is_array()) {
      ladder.kind = LadderSpec::Kind::explicit_list;
      take(j, "ladder", ladder.temperatures);
    } else {
      std::string text;
      take(j, "ladder", text);
      ladder = LadderSpec::parse(text);
    }
  }
  take(j, "threads", threads);
  take(j, "trace_chains", trace_chains);
  take(j, "target", target);
  take(j, "mu2", mu2);
  take(j, "variance", variance);
  take(j, "ball_delta", ball_delta);
  take(j, "cauchy_gamma", cauchy_gamma);
  take(j, "region_center", region_center);
  take(j, "region_radius", region_radius);
  take(j, "initial", initial);
  take(j, "extra_cold", extra_cold);
  take(j, "epsilon", epsilon);
  take(j, "rosen_a", rosen_a);
  take(j, "rosen_b", rosen_b);
  take(j, "rosen_shift", rosen_shift);
  take(j, "fasta", fasta);
  take(j, "block_sites", block_sites);
  take(j, "baseline_steps", baseline_steps);
  take(j, "compound_p", compound_p);
  take(j, "oracle", oracle);
  take(j, "separated_modes", separated_modes);
  take(j, "grid_states", grid_states);
  take(j, "mode_a", mode_a);
  take(j, "mode_b", mode_b);
  take(j, "mode_scale", mode_scale);
  take(j, "temperatures", temperatures);
  take(j, "suite_instances", suite_instances);
  take(j, "exact_conductance_states", exact_conductance_states);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = steep::to_string(experiment);
  if (seed) j["seed"] = *seed;
  j["out_dir"] = out_dir;
  j["reps"] = reps;
  j["n_iter"] = n_iter;
  j["burn_in"] = burn_in;
  j["thin"] = thin;
  j["xi_thin"] = xi_thin;
  j["s"] = s;
  j["ladder"] = ladder.to_string();
  j["threads"] = threads;
  j["trace_chains"] = trace_chains;
  switch (experiment) {
    case Experiment::needles:
    case Experiment::optimize:
      j["target"] = target;
      j["mu2"] = mu2;
      j["variance"] = variance;
      j["ball_delta"] = ball_delta;
      j["cauchy_gamma"] = cauchy_gamma;
      j["initial"] = initial;
      if (experiment == Experiment::needles) {
        j["region_center"] = region_center;
        j["region_radius"] = region_radius;
      } else {
        j["extra_cold"] = extra_cold;
        j["epsilon"] = epsilon;
        j["rosen_a"] = rosen_a;
        j["rosen_b"] = rosen_b;
        j["rosen_shift"] = rosen_shift;
      }
      break;
    case Experiment::phylo:
      j["fasta"] = fasta;
      j["block_sites"] = block_sites;
      j["baseline_steps"] = baseline_steps;
      j["compound_p"] = compound_p;
      j["oracle"] = oracle;
      j["separated_modes"] = separated_modes;
      break;
    case Experiment::spectral_scan:
      j["grid_states"] = grid_states;
      j["mode_a"] = mode_a;
      j["mode_b"] = mode_b;
      j["mode_scale"] = mode_scale;
      j["temperatures"] = temperatures;
      j["suite_instances"] = suite_instances;
      j["exact_conductance_states"] = exact_conductance_states;
      break;
  }
  return j;
}

void RunConfig::validate() const {
  require(seed.has_value(), "--seed is required for experiment runs");
  require(!out_dir.empty(), "out_dir must not be empty");
  require(reps >= 1, "reps must be >= 1");
  require(thin >= 1, "thin must be >= 1");
  require(xi_thin >= 1, "xi_thin must be >= 1");
  require(s > 0.0 && s < 1.0, "s must lie in (0, 1), got " + fmt(s));
  require(trace_chains == "cold" || trace_chains == "all", "trace_chains must be 'cold' or 'all'");
  if (ladder.kind == LadderSpec::Kind::geometric) {
    require(ladder.t_hot > 1.0 && ladder.tau > 1.0, "ladder needs t_H > 1 and tau > 1");
    require(ladder.tau <= ladder.t_hot * (1.0 + 1e-12), "ladder tau must not exceed t_H");
  } else if (ladder.kind == LadderSpec::Kind::explicit_list) {
    TemperatureLadder check(ladder.temperatures);
    require(std::abs(check[0] - 1.0) < 1e-12 || experiment == Experiment::optimize,
            "explicit ladder must start at t = 1");
  } else {
    require(experiment == Experiment::needles || experiment == Experiment::optimize,
            "auto ladder is only available for continuous targets");
  }
  switch (experiment) {
    case Experiment::needles:
    case Experiment::optimize:
      require(target == "needles" || target == "rosenbrock", "target must be 'needles' or 'rosenbrock'");
      require(mu2.size() == 2, "mu2 must have two coordinates");
      require(variance > 0.0, "variance must be positive");
      require(ball_delta > 0.0, "ball_delta must be positive");
      require(cauchy_gamma > 0.0, "cauchy_gamma must be positive");
      require(initial.size() == 2, "initial must have two coordinates");
      require(region_center.size() == 2, "region_center must have two coordinates");
      require(region_radius > 0.0, "region_radius must be positive");
      require(epsilon > 0.0, "epsilon must be positive");
      require(rosen_b > 0.0, "rosen_b must be positive");
      require(rosen_shift.size() == 2, "rosen_shift must have two coordinates");
      break;
    case Experiment::phylo:
      require(block_sites >= 1, "block_sites must be >= 1");
      require(compound_p > 0.0 && compound_p <= 1.0, "compound_p must lie in (0, 1]");
      break;
    case Experiment::spectral_scan:
      require(grid_states >= 4, "grid_states must be >= 4");
      require(mode_a >= 0.0 && mode_b > mode_a && mode_b < static_cast<double>(grid_states),
              "modes must satisfy 0 <= mode_a < mode_b < grid_states");
      require(mode_scale > 0.0, "mode_scale must be positive");
      require(temperatures.size() >= 2, "need at least two temperatures");
      for (double t : temperatures) require(t >= 1.0, "scan temperatures must be >= 1");
      break;
  }
}

RunConfig load_config_file(const std::string& path, Experiment e) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError("config file '" + path + "': " + err.what());
  }
  auto c = RunConfig::defaults(e);
  c.merge(j);
  return c;
}

}  // namespace steep
