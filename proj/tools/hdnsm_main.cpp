#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "hdnsm/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dose-response and quantile curve estimation under high-dimensional controls"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input_path, taus, flavor, multiplier;
  double bandwidth = 0.0, alpha = 0.0;
  std::uint64_t seed = 0;
  long n = 0, p = 0;
  int B = 0, reps = 0;
  bool serial = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--bandwidth", bandwidth, "bandwidth override");
    sub->add_option("--taus", taus, "comma-separated quantile levels");
    sub->add_option("--B", B, "bootstrap replicates");
    sub->add_option("--reps", reps, "Monte Carlo replications");
    sub->add_option("--input", input_path, "input CSV");
    sub->add_option("--n", n, "simulated sample size");
    sub->add_option("--p", p, "simulated covariate count");
    sub->add_option("--flavor", flavor, "lasso | post-lasso");
    sub->add_option("--multiplier", multiplier, "exponential | normal");
    sub->add_option("--alpha", alpha, "CI significance level");
    sub->add_flag("--serial", serial, "disable parallel execution");
  };
  auto* sim = app.add_subcommand("simulate", "generate a dataset from the built-in DGP");
  auto* est = app.add_subcommand("estimate", "point estimates from a CSV dataset");
  auto* boot = app.add_subcommand("bootstrap", "estimates with bootstrap confidence bands");
  auto* mc = app.add_subcommand("mc-study", "Monte Carlo coverage study");
  for (auto* sub : {sim, est, boot, mc}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    hdnsm::RunConfig config;
    if (app.got_subcommand(sim)) config.mode = hdnsm::RunMode::Simulate;
    if (app.got_subcommand(est)) config.mode = hdnsm::RunMode::Estimate;
    if (app.got_subcommand(boot)) config.mode = hdnsm::RunMode::Bootstrap;
    if (app.got_subcommand(mc)) config.mode = hdnsm::RunMode::McStudy;

    if (!config_path.empty()) hdnsm::apply_config(config, hdnsm::parse_config_file(config_path));

    // CLI flags override config-file values
    std::map<std::string, std::string> overrides;
    if (seed) overrides["seed"] = std::to_string(seed);
    if (!out_dir.empty()) overrides["out"] = out_dir;
    if (bandwidth > 0.0) overrides["bandwidth"] = std::to_string(bandwidth);
    if (!taus.empty()) overrides["taus"] = taus;
    if (B > 0) overrides["B"] = std::to_string(B);
    if (reps > 0) overrides["reps"] = std::to_string(reps);
    if (!input_path.empty()) overrides["input"] = input_path;
    if (n > 0) overrides["n"] = std::to_string(n);
    if (p > 0) overrides["p"] = std::to_string(p);
    if (!flavor.empty()) overrides["flavor"] = flavor;
    if (!multiplier.empty()) overrides["multiplier"] = multiplier;
    if (alpha > 0.0) overrides["alpha"] = std::to_string(alpha);
    hdnsm::apply_config(config, overrides);
    if (serial) config.exec = hdnsm::ExecMode::serial;

    return hdnsm::run(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
