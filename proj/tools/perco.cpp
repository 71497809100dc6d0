// Command-line front end: one subcommand per experiment plus verify.

#include "perco/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct Flags {
  std::string config;
  std::string seed;
  int workers = -1;
  std::string out;
  std::string format;
};

int run_experiment_command(perco::Experiment experiment, const Flags& f) {
  perco::ExperimentConfig cfg = f.config.empty() ? perco::defaults_for(experiment)
                                                 : perco::load_config(f.config, experiment);
  if (!f.seed.empty()) perco::set_config_value(cfg, "seed", f.seed);
  if (f.workers >= 0) cfg.workers = static_cast<unsigned>(f.workers);
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.format.empty()) perco::set_config_value(cfg, "format", f.format);
  const std::string text = perco::run(cfg);
  if (cfg.out.empty()) std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Percolation crossing, arm and conformal experiments"};
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<perco::Experiment, std::string>> commands = {
      {perco::Experiment::Crossing, "crossing probabilities over meshes and split points"},
      {perco::Experiment::Profile, "separating profile f_l(Z) with first and second differences"},
      {perco::Experiment::Arms, "annulus arm events and exponent fits"},
      {perco::Experiment::SixArm, "coarse six-arm and five-arm events"},
      {perco::Experiment::Conformal, "Schwarz-Christoffel comparison table"},
      {perco::Experiment::Oracle, "exact crossing probabilities by enumeration"},
      {perco::Experiment::Bisect, "critical point by box-crossing bisection"},
  };
  for (const auto& [experiment, help] : commands) {
    CLI::App* sub = app.add_subcommand(perco::to_string(experiment), help);
    sub->add_option("--config", flags.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "64-bit seed");
    sub->add_option("--workers", flags.workers, "worker threads (0: one per core)");
    sub->add_option("--out", flags.out, "output file (default stdout)");
    sub->add_option("--format", flags.format, "csv or json");
    sub->callback([experiment = experiment, &flags] {
      throw CLI::RuntimeError(run_experiment_command(experiment, flags));
    });
  }

  std::string record;
  int verify_workers = 0;
  CLI::App* verify = app.add_subcommand("verify", "re-run a record and compare byte-wise");
  verify->add_option("record", record, "CSV or JSON record")->required();
  verify->add_option("--workers", verify_workers, "worker threads (0: one per core)");
  verify->callback([&] {
    const perco::VerifyReport report = perco::verify(record, static_cast<unsigned>(verify_workers));
    std::cout << report.message << "\n";
    throw CLI::RuntimeError(report.pass ? 0 : 1);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
