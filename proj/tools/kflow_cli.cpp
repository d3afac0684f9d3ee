// Command-line front end: one subcommand per experiment plus selftest.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kflow/errors.hpp"
#include "kflow/io.hpp"
#include "kflow/run.hpp"

namespace {

enum Exit { ok = 0, invariant = 1, config = 2, domain = 3, numerical = 4 };

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  cmd->add_option("--seed", f.seed, "RNG seed (overrides the config)");
  cmd->add_option("--threads", f.threads, "worker threads for replicates")->check(CLI::Range(1, 1024));
}

int run_experiment(const std::string& type, const Flags& f) {
  kflow::RunConfig cfg = f.config.empty() ? kflow::default_config(type) : kflow::parse_config(f.config, type);
  if (f.seed) cfg.seed = *f.seed;
  const std::string out = f.out.empty() ? cfg.output : f.out;
  const kflow::RunManifest man = kflow::run(cfg, out, f.threads);
  for (const auto& c : man.checks)
    std::cout << (c.ok() ? "ok   " : "FAIL ") << c.name << " = " << kflow::fmt_double(c.value)
              << " (limit " << kflow::fmt_double(c.limit) << ")\n";
  std::cout << man.experiment << ": " << man.files.size() << " files in " << out << " ("
            << kflow::fmt_double(man.wall_seconds) << " s)\n";
  return man.ok() ? Exit::ok : Exit::invariant;
}

int run_selftest(const Flags& f) {
  const auto checks = kflow::selftest(f.seed.value_or(1));
  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.ok() ? "ok   " : "FAIL ") << c.name << " = " << kflow::fmt_double(c.value) << " (limit "
              << kflow::fmt_double(c.limit) << ")\n";
    all = all && c.ok();
  }
  return all ? Exit::ok : Exit::invariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic gradient-flow toolkit"};
  app.require_subcommand(1);
  Flags flags;
  const char* types[][2] = {{"network", "build the velocity network and export it"},
                            {"forward", "integrate the network Boltzmann equation"},
                            {"distance", "collision distance between two densities"},
                            {"jko", "minimizing-movement scheme for the entropy"},
                            {"kac", "Kac particle simulation"},
                            {"consistency", "particle versus mean-field moment comparison"},
                            {"selftest", "run the quick invariant suite"}};
  for (const auto& t : types) add_flags(app.add_subcommand(t[0], t[1]), flags);
  CLI11_PARSE(app, argc, argv);

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "selftest") return run_selftest(flags);
    return run_experiment(cmd, flags);
  } catch (const kflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Exit::config;
  } catch (const kflow::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return Exit::config;
  } catch (const kflow::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return Exit::domain;
  } catch (const kflow::BuildError& e) {
    std::cerr << "build error: " << e.what() << '\n';
    return Exit::domain;
  } catch (const kflow::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return Exit::numerical;
  } catch (const kflow::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return Exit::invariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::invariant;
  }
}
