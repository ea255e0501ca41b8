// pgibbs: simulate datasets, run Particle Gibbs experiments on the Poisson
// AR(1) model and run coupling studies. Exit codes: 0 ok, 2 configuration
// error, 3 numerical failure, 4 I/O failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pgibbs/pgibbs.hpp"

#ifndef PGIBBS_VERSION
#define PGIBBS_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pgibbs;

namespace {

struct Settings {
  std::string command;
  std::uint64_t seed = 1;
  std::string out = ".";
  // model parameters: truth for `simulate`, starting point for `run`
  double mu = 0.0;
  double rho = 0.9;
  double sigma2 = 0.25;
  std::size_t length = 400;  // T + 1 for `simulate`
  // run
  std::string data;
  std::size_t n = 20;
  std::string scheme = "multinomial";
  bool backward = false;
  bool forced_move = true;
  std::size_t iters = 10000;
  std::size_t burnin = 1000;
  std::size_t thin = 10;
  std::size_t max_lag = 100;
  std::size_t chains = 1;
  PriorSpec prior;
  // couple
  std::string model = "toy";
  std::vector<std::size_t> n_list{8, 32, 128};
  std::size_t reps = 1000;
  std::size_t horizon = 4;
};

// Keys written to the manifest that carry no configuration.
const char* const kManifestOnly[] = {"command", "version", "wall_time_seconds"};

class ErrorList {
 public:
  void add(std::string msg) { errors_.push_back(std::move(msg)); }
  void throw_if_any() const {
    if (errors_.empty()) return;
    std::ostringstream os;
    os << errors_.size() << " configuration error(s):";
    for (const auto& e : errors_) os << "\n  - " << e;
    throw ConfigError(os.str());
  }

 private:
  std::vector<std::string> errors_;
};

std::size_t as_count(const json& v, const std::string& key, ErrorList& errors) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::size_t>(v.get<std::int64_t>());
  errors.add(key + ": expected a nonnegative integer");
  return 0;
}

double as_real(const json& v, const std::string& key, ErrorList& errors) {
  if (v.is_number()) return v.get<double>();
  errors.add(key + ": expected a number");
  return 0.0;
}

bool as_switch(const json& v, const std::string& key, ErrorList& errors) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string() && (v == "on" || v == "off")) return v == "on";
  errors.add(key + ": expected true/false or \"on\"/\"off\"");
  return false;
}

std::string as_string(const json& v, const std::string& key, ErrorList& errors) {
  if (v.is_string()) return v.get<std::string>();
  errors.add(key + ": expected a string");
  return {};
}

void apply_json(Settings& s, const json& cfg, ErrorList& errors) {
  if (!cfg.is_object()) {
    errors.add("config file must hold a flat JSON object");
    return;
  }
  bool saw_sigma = false, saw_sigma2 = false;
  const std::map<std::string, std::function<void(const json&, const std::string&)>> setters{
      {"seed",
       [&](const json& v, const std::string& k) {
         if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
           s.seed = v.get<std::uint64_t>();
         } else {
           errors.add(k + ": expected an unsigned 64-bit integer");
         }
       }},
      {"out", [&](const json& v, const std::string& k) { s.out = as_string(v, k, errors); }},
      {"mu", [&](const json& v, const std::string& k) { s.mu = as_real(v, k, errors); }},
      {"rho", [&](const json& v, const std::string& k) { s.rho = as_real(v, k, errors); }},
      {"sigma2",
       [&](const json& v, const std::string& k) {
         s.sigma2 = as_real(v, k, errors);
         saw_sigma2 = true;
       }},
      {"sigma",
       [&](const json& v, const std::string& k) {
         const double sd = as_real(v, k, errors);
         s.sigma2 = sd * sd;
         saw_sigma = true;
       }},
      {"length", [&](const json& v, const std::string& k) { s.length = as_count(v, k, errors); }},
      {"data", [&](const json& v, const std::string& k) { s.data = as_string(v, k, errors); }},
      {"n", [&](const json& v, const std::string& k) { s.n = as_count(v, k, errors); }},
      {"scheme", [&](const json& v, const std::string& k) { s.scheme = as_string(v, k, errors); }},
      {"backward", [&](const json& v, const std::string& k) { s.backward = as_switch(v, k, errors); }},
      {"forced_move", [&](const json& v, const std::string& k) { s.forced_move = as_switch(v, k, errors); }},
      {"iters", [&](const json& v, const std::string& k) { s.iters = as_count(v, k, errors); }},
      {"burnin", [&](const json& v, const std::string& k) { s.burnin = as_count(v, k, errors); }},
      {"thin", [&](const json& v, const std::string& k) { s.thin = as_count(v, k, errors); }},
      {"max_lag", [&](const json& v, const std::string& k) { s.max_lag = as_count(v, k, errors); }},
      {"chains", [&](const json& v, const std::string& k) { s.chains = as_count(v, k, errors); }},
      {"m_mu", [&](const json& v, const std::string& k) { s.prior.m_mu = as_real(v, k, errors); }},
      {"s_mu", [&](const json& v, const std::string& k) { s.prior.s_mu = as_real(v, k, errors); }},
      {"a_sigma", [&](const json& v, const std::string& k) { s.prior.a_sigma = as_real(v, k, errors); }},
      {"b_sigma", [&](const json& v, const std::string& k) { s.prior.b_sigma = as_real(v, k, errors); }},
      {"model", [&](const json& v, const std::string& k) { s.model = as_string(v, k, errors); }},
      {"n_list",
       [&](const json& v, const std::string& k) {
         if (!v.is_array() || v.empty()) {
           errors.add(k + ": expected a nonempty array of particle counts");
           return;
         }
         s.n_list.clear();
         for (const auto& e : v) s.n_list.push_back(as_count(e, k, errors));
       }},
      {"reps", [&](const json& v, const std::string& k) { s.reps = as_count(v, k, errors); }},
      {"horizon", [&](const json& v, const std::string& k) { s.horizon = as_count(v, k, errors); }},
  };
  for (const auto& [key, value] : cfg.items()) {
    if (std::find(std::begin(kManifestOnly), std::end(kManifestOnly), key) != std::end(kManifestOnly)) continue;
    const auto it = setters.find(key);
    if (it == setters.end()) {
      errors.add("unknown config key '" + key + "'");
      continue;
    }
    it->second(value, key);
  }
  if (saw_sigma && saw_sigma2) errors.add("give either sigma or sigma2, not both");
}

json load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

void validate(const Settings& s, ErrorList& errors) {
  try {
    PoissonAr1Params{s.mu, s.rho, s.sigma2}.validate();
  } catch (const ConfigError& e) {
    errors.add(e.what());
  }
  if (s.command == "simulate") {
    if (s.length < 1) errors.add("length: need at least one time step");
    return;
  }
  if (s.command == "run") {
    if (s.data.empty()) errors.add("data: a dataset CSV path is required");
    if (s.n < 2) errors.add("n: need N >= 2 particles");
    try {
      parse_scheme(s.scheme);
    } catch (const ConfigError& e) {
      errors.add(std::string("scheme: ") + e.what());
    }
    if (s.iters <= s.burnin) errors.add("iters must exceed burnin");
    if (s.thin < 1) errors.add("thin must be >= 1");
    if (s.chains < 1) errors.add("chains must be >= 1");
    if (s.max_lag < 1) errors.add("max_lag must be >= 1");
    try {
      s.prior.validate();
    } catch (const ConfigError& e) {
      errors.add(e.what());
    }
    return;
  }
  // couple
  if (s.model != "toy" && s.model != "poisson") errors.add("model: expected \"toy\" or \"poisson\"");
  if (s.model == "poisson" && s.data.empty()) errors.add("data: the poisson coupling model needs a dataset");
  for (auto n : s.n_list) {
    if (n < 2) errors.add("n_list: every N must be >= 2");
  }
  if (s.reps < 1) errors.add("reps must be >= 1");
}

json manifest_json(const Settings& s) {
  json j;
  j["command"] = s.command;
  j["seed"] = s.seed;
  j["out"] = s.out;
  j["mu"] = s.mu;
  j["rho"] = s.rho;
  j["sigma2"] = s.sigma2;
  if (s.command == "simulate") {
    j["length"] = s.length;
  } else if (s.command == "run") {
    j["data"] = s.data;
    j["n"] = s.n;
    j["scheme"] = s.scheme;
    j["backward"] = s.backward ? "on" : "off";
    j["forced_move"] = s.forced_move ? "on" : "off";
    j["iters"] = s.iters;
    j["burnin"] = s.burnin;
    j["thin"] = s.thin;
    j["max_lag"] = s.max_lag;
    j["chains"] = s.chains;
    j["m_mu"] = s.prior.m_mu;
    j["s_mu"] = s.prior.s_mu;
    j["a_sigma"] = s.prior.a_sigma;
    j["b_sigma"] = s.prior.b_sigma;
  } else {
    j["model"] = s.model;
    if (!s.data.empty()) j["data"] = s.data;
    j["n_list"] = s.n_list;
    j["reps"] = s.reps;
    j["horizon"] = s.horizon;
  }
  j["version"] = PGIBBS_VERSION;
  return j;
}

void write_manifest(const Settings& s, double seconds) {
  auto j = manifest_json(s);
  j["wall_time_seconds"] = seconds;
  const fs::path path = fs::path(s.out) / "manifest.json";
  auto os = csv::open_output(path);
  os << j.dump(2) << '\n';
  csv::finish(os, path);
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out);
}

// ------------------------------------------------------------------ commands

void cmd_simulate(const Settings& s) {
  auto rng = make_stream(s.seed);
  const auto [x, data] = simulate_dataset({s.mu, s.rho, s.sigma2}, s.length - 1, rng);
  csv::write_dataset(fs::path(s.out) / "dataset.csv", data);
  csv::write_truth(fs::path(s.out) / "truth.csv", x);
}

std::string chain_file(const std::string& stem, std::size_t chain, std::size_t chains) {
  return chains == 1 ? stem + ".csv" : stem + "_" + std::to_string(chain) + ".csv";
}

void run_one_chain(const Settings& s, const std::shared_ptr<const Dataset>& data, std::size_t chain) {
  const fs::path out(s.out);
  auto params_path = out / chain_file("params", chain, s.chains);
  auto paths_path = out / chain_file("paths", chain, s.chains);
  auto moves_path = out / chain_file("moves", chain, s.chains);
  auto params_os = csv::open_output(params_path);
  auto paths_os = csv::open_output(paths_path);
  auto moves_os = csv::open_output(moves_path);
  csv::write_params_header(params_os);
  csv::write_paths_header(paths_os);
  moves_os << "iter,moved,selected_index\n";

  const CpfConfig config{s.n, parse_scheme(s.scheme), s.backward, s.forced_move};
  auto rng = make_stream(s.seed, chain);
  GibbsState state{{s.mu, s.rho, s.sigma2}, {}};
  for (auto y : data->counts) state.path.push_back(std::log(static_cast<double>(y) + 1.0));

  std::vector<double> mu, rho, sigma2;
  UpdateRateAccumulator<double> rates;
  for (std::size_t it = 0; it < s.iters; ++it) {
    auto sweep = pg_gibbs_sweep(data, state, config, s.prior, rng);
    state = std::move(sweep.state);
    if (it < s.burnin) continue;
    mu.push_back(state.params.mu);
    rho.push_back(state.params.rho);
    sigma2.push_back(state.params.sigma2);
    rates.add(state.path);
    moves_os << it << ',' << (sweep.moved ? 1 : 0) << ',' << sweep.selected_index << '\n';
    if ((it - s.burnin) % s.thin == 0) {
      csv::write_params_row(params_os, it, state.params);
      csv::write_path_rows(paths_os, it, state.path);
    }
  }
  csv::finish(params_os, params_path);
  csv::finish(paths_os, paths_path);
  csv::finish(moves_os, moves_path);

  const std::size_t lag = std::min(s.max_lag, mu.size() - 1);
  auto acf_path = out / chain_file("acf", chain, s.chains);
  auto acf_os = csv::open_output(acf_path);
  csv::write_acf_header(acf_os);
  if (lag >= 1) {
    csv::write_acf_rows(acf_os, "mu", acf(mu, lag));
    csv::write_acf_rows(acf_os, "rho", acf(rho, lag));
    csv::write_acf_rows(acf_os, "sigma2", acf(sigma2, lag));
  }
  csv::finish(acf_os, acf_path);

  auto rate_path = out / chain_file("update_rate", chain, s.chains);
  auto rate_os = csv::open_output(rate_path);
  if (rates.pairs() > 0) {
    csv::write_update_rate(rate_os, rates.rates());
  } else {
    csv::write_update_rate(rate_os, {});
  }
  csv::finish(rate_os, rate_path);
}

void cmd_run(const Settings& s) {
  const auto data = std::make_shared<const Dataset>(csv::read_dataset(fs::path(s.data)));
  if (s.chains == 1) {
    run_one_chain(s, data, 0);
    return;
  }
  std::vector<std::exception_ptr> failures(s.chains);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < s.chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        run_one_chain(s, data, c);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

template <FeynmanKacModel M>
void couple_sweep(const Settings& s, const M& model, const Trajectory<state_t<M>>& z,
                  const Trajectory<state_t<M>>& z_check) {
  const fs::path path = fs::path(s.out) / "coupling.csv";
  auto os = csv::open_output(path);
  csv::write_coupling_header(os);
  for (std::size_t i = 0; i < s.n_list.size(); ++i) {
    auto rng = make_stream(s.seed, i);
    const auto est = estimate_coupling_probability(model, s.n_list[i], z, z_check, s.reps, rng);
    csv::write_coupling_row(os, s.n_list[i], est.reps, est.fraction, est.standard_error);
  }
  csv::finish(os, path);
}

void cmd_couple(const Settings& s) {
  if (s.model == "toy") {
    // Two-state chain with potentials bounded in [0.5, 2]; references at the two extremes.
    FiniteHmm::Matrix g;
    for (std::size_t t = 0; t <= s.horizon; ++t) {
      g.push_back(t % 2 == 0 ? std::vector<double>{2.0, 0.5} : std::vector<double>{0.7, 1.4});
    }
    const FiniteHmm model({0.5, 0.5}, {{0.8, 0.2}, {0.3, 0.7}}, g);
    couple_sweep(s, model, Trajectory<std::size_t>(s.horizon + 1, 0), Trajectory<std::size_t>(s.horizon + 1, 1));
    return;
  }
  const auto data = std::make_shared<const Dataset>(csv::read_dataset(fs::path(s.data)));
  const PoissonAr1Model model({s.mu, s.rho, s.sigma2}, data);
  Trajectory<double> z, z_check;
  for (auto y : data->counts) {
    z.push_back(std::log(static_cast<double>(y) + 1.0));
    z_check.push_back(z.back() + std::sqrt(s.sigma2));
  }
  couple_sweep(s, model, z, z_check);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Particle Gibbs experiments: simulate | run | couple"};
  app.require_subcommand(1);
  std::string config_path, scheme, backward, forced_move, out, data;
  std::uint64_t seed = 0;
  std::size_t n = 0, iters = 0, burnin = 0, thin = 0, chains = 0, reps = 0;
  std::map<std::string, CLI::Option*> opts;
  opts["config"] = app.add_option("--config", config_path, "flat JSON config file; flags override its values");
  opts["seed"] = app.add_option("--seed", seed, "64-bit RNG seed");
  opts["n"] = app.add_option("--n", n, "number of particles (couple: single N instead of n_list)");
  opts["scheme"] = app.add_option("--scheme", scheme, "resampling scheme")
                       ->check(CLI::IsMember({"multinomial", "residual", "systematic"}));
  opts["backward"] = app.add_option("--backward", backward, "backward sampling")->check(CLI::IsMember({"on", "off"}));
  opts["forced_move"] =
      app.add_option("--forced-move", forced_move, "forced-move selection")->check(CLI::IsMember({"on", "off"}));
  opts["iters"] = app.add_option("--iters", iters, "total Gibbs sweeps");
  opts["burnin"] = app.add_option("--burnin", burnin, "discarded initial sweeps");
  opts["thin"] = app.add_option("--thin", thin, "thinning interval of parameter and path output");
  opts["out"] = app.add_option("--out", out, "output directory");
  opts["chains"] = app.add_option("--chains", chains, "independent chains with split RNG streams");
  opts["data"] = app.add_option("--data", data, "dataset CSV (run, couple --model poisson)");
  opts["reps"] = app.add_option("--reps", reps, "coupling replications per N");
  for (auto& [name, opt] : opts) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  auto* simulate = app.add_subcommand("simulate", "simulate a Poisson AR(1) dataset");
  auto* run = app.add_subcommand("run", "run the Particle Gibbs sampler on a dataset");
  auto* couple = app.add_subcommand("couple", "estimate coupling probabilities over a list of N");
  for (auto* sub : {simulate, run, couple}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Settings s;
  s.command = simulate->parsed() ? "simulate" : run->parsed() ? "run" : "couple";
  ErrorList errors;
  if (opts["config"]->count() > 0) {
    apply_json(s, load_config_file(config_path), errors);
  }
  auto given = [&](const char* name) { return opts[name]->count() > 0; };
  if (given("seed")) s.seed = seed;
  if (given("n")) {
    s.n = n;
    s.n_list = {n};
  }
  if (given("scheme")) s.scheme = scheme;
  if (given("backward")) s.backward = backward == "on";
  if (given("forced_move")) s.forced_move = forced_move == "on";
  if (given("iters")) s.iters = iters;
  if (given("burnin")) s.burnin = burnin;
  if (given("thin")) s.thin = thin;
  if (given("out")) s.out = out;
  if (given("chains")) s.chains = chains;
  if (given("data")) s.data = data;
  if (given("reps")) s.reps = reps;
  validate(s, errors);
  errors.throw_if_any();
  if (!s.data.empty()) s.data = fs::absolute(s.data).string();

  ensure_out_dir(s.out);
  const auto start = std::chrono::steady_clock::now();
  if (s.command == "simulate") {
    cmd_simulate(s);
  } else if (s.command == "run") {
    cmd_run(s);
  } else {
    cmd_couple(s);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(s, seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "pgibbs: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "pgibbs: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "pgibbs: I/O error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "pgibbs: " << e.what() << '\n';
    return 1;
  }
}
