// arrowlab: run, validate and post-process scenario files.
//
//   arrowlab run scenarios/cosmo_measure.ini --out runs/measure
//   arrowlab validate scenarios/taub_run.ini
//   arrowlab plotdata runs/measure

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "arrowlab/io.hpp"
#include "arrowlab/scenario.hpp"

namespace sc = arrowlab::scenario;

namespace {

struct Flags {
  std::string file;
  std::string run_dir;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int load(const Flags& f, sc::Scenario& s) {
  std::string text;
  try {
    text = arrowlab::io::read_file(f.file);
  } catch (const arrowlab::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::kIo;
  }
  try {
    s = sc::parse_scenario(text);
  } catch (const sc::ValidationError& e) {
    for (const auto& m : e.errors()) std::cerr << f.file << ": " << m << "\n";
    return sc::kValidation;
  }
  if (f.seed) s.seed = *f.seed;
  if (!f.out.empty()) s.out = f.out;
  return sc::kOk;
}

int cmd_validate(const Flags& f) {
  sc::Scenario s;
  if (int rc = load(f, s); rc != sc::kOk) return rc;
  if (!f.quiet) std::cout << sc::print_scenario(s);
  return sc::kOk;
}

int cmd_run(const Flags& f) {
  sc::Scenario s;
  if (int rc = load(f, s); rc != sc::kOk) return rc;
  const auto rep = sc::run_scenario(s, s.out);
  if (rep.exit_code != sc::kOk) {
    std::cerr << "error: " << rep.summary.value("error", std::string("run failed")) << "\n";
  }
  if (!f.quiet) {
    std::cout << s.kind << ": " << rep.summary.value("status", std::string("?")) << " -> " << s.out << "\n";
    if (rep.summary.contains("metrics")) std::cout << rep.summary["metrics"].dump(2) << "\n";
  }
  return rep.exit_code;
}

int cmd_plotdata(const Flags& f) {
  try {
    const auto files = sc::export_plotdata(f.run_dir);
    if (!f.quiet) {
      for (const auto& name : files) std::cout << f.run_dir << "/plot/" << name << "\n";
    }
    return sc::kOk;
  } catch (const sc::PlotdataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::kRuntime;
  } catch (const arrowlab::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arrowlab scenario runner"};
  app.require_subcommand(1);
  Flags f;
  std::uint64_t seed = 0;
  app.add_option("--out", f.out, "output directory (overrides the scenario's out key)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the scenario's seed key)");
  app.add_flag("--quiet,-q", f.quiet, "print nothing on success");

  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("file", f.file, "scenario file")->required();
  auto* validate = app.add_subcommand("validate", "check a scenario file and print it with defaults filled");
  validate->add_option("file", f.file, "scenario file")->required();
  auto* plot = app.add_subcommand("plotdata", "derive plot-ready CSV files from a finished run");
  plot->add_option("dir", f.run_dir, "run output directory")->required();
  // Global options may also follow the subcommand.
  for (auto* sub : {run, validate, plot}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sc::kValidation;
  }
  if (*seed_opt) f.seed = seed;

  try {
    if (*run) return cmd_run(f);
    if (*validate) return cmd_validate(f);
    return cmd_plotdata(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::kRuntime;
  }
}
