// Command-line front end for simulation, evaluation, tau grid search and
// policy comparison runs.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mtd/errors.hpp"
#include "mtd/experiment.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2, kInternal = 3 };

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (YAML)");
  if (needs_config) opt->required();
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
  cmd->add_option("--seed", c.seed, "run a single seed instead of the configured list");
  cmd->add_option("--format", c.format, "report format")->check(CLI::IsMember({"csv"}));
}

mtd::ExperimentConfig load(const Common& c) {
  auto cfg = mtd::parse_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  cfg.format = c.format;
  return cfg;
}

fs::path out_dir(const Common& c, const mtd::ExperimentConfig& cfg) {
  return c.out.empty() ? fs::path(cfg.output_dir) : fs::path(c.out);
}

void print_written(const mtd::SimulateOutput& o) {
  fmt::print("wrote {} run logs, {} and {}\n", o.runlogs.size(), o.world_file.string(), o.manifest.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming-perception delay analysis and timestep routing experiments"};
  app.require_subcommand(1);

  Common sim, grid, cmp, rep, ev;
  auto* simulate = app.add_subcommand("simulate", "run every (setting, seed, policy) cell and write run logs");
  add_common(simulate, sim, true);

  auto* evaluate = app.add_subcommand("evaluate", "score run logs against a world and write report.csv");
  add_common(evaluate, ev, false);
  std::string world_path;
  std::string manifest_path;
  std::vector<std::string> runlogs;
  evaluate->add_option("--world", world_path, "world file written by simulate");
  evaluate->add_option("--manifest", manifest_path, "manifest written by simulate");
  evaluate->add_option("runlogs", runlogs, "run log files");

  auto* grid_search = app.add_subcommand("grid-search", "count MTD misses over the tau grid");
  add_common(grid_search, grid, true);

  auto* compare = app.add_subcommand("compare", "compare policies: misses, decrease percent and sAP");
  add_common(compare, cmp, true);

  auto* replay = app.add_subcommand("replay", "simulate with delays replayed from a trace file");
  add_common(replay, rep, true);
  std::string trace_path;
  bool cycle = false;
  replay->add_option("--trace", trace_path, "latency trace (mtd-trace v1)")->required();
  replay->add_flag("--cycle", cycle, "wrap around when the trace is exhausted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*simulate) {
      const auto cfg = load(sim);
      print_written(mtd::cmd_simulate(cfg, out_dir(sim, cfg)));
    } else if (*replay) {
      const auto cfg = load(rep);
      print_written(mtd::cmd_replay(cfg, trace_path, cycle, out_dir(rep, cfg)));
    } else if (*evaluate) {
      std::vector<fs::path> logs(runlogs.begin(), runlogs.end());
      if (!manifest_path.empty()) {
        const auto listed = mtd::read_manifest(manifest_path);
        logs.insert(logs.end(), listed.begin(), listed.end());
        if (world_path.empty()) world_path = (fs::path(manifest_path).parent_path() / "world.txt").string();
      }
      if (world_path.empty()) throw mtd::ConfigError("evaluate needs --world or --manifest");
      fs::path dir = ev.out;
      // Without --out the report lands next to the manifest, else in the
      // config's output dir, else ./out.
      if (dir.empty() && !ev.config.empty()) dir = mtd::parse_config(ev.config).output_dir;
      if (dir.empty() && !manifest_path.empty()) dir = fs::path(manifest_path).parent_path();
      if (dir.empty()) dir = "out";
      const auto rows = mtd::cmd_evaluate(logs, mtd::load_world(world_path), dir);
      fmt::print("wrote {} rows to {}\n", rows.size(), (dir / "report.csv").string());
    } else if (*grid_search) {
      const auto cfg = load(grid);
      const auto dir = out_dir(grid, cfg);
      const auto table = mtd::cmd_grid_search(cfg, dir);
      for (std::size_t s = 0; s < table.settings.size(); ++s) {
        std::vector<std::string> taus;
        for (auto i : table.argmin(s)) taus.push_back(fmt::format("{:.2f}", table.taus[i]));
        fmt::print("{}: argmin tau = {}\n", table.settings[s], fmt::join(taus, ", "));
      }
      fmt::print("wrote {}\n", (dir / "tau_grid.csv").string());
    } else if (*compare) {
      const auto cfg = load(cmp);
      const auto dir = out_dir(cmp, cfg);
      const auto rows = mtd::cmd_compare(cfg, dir);
      fmt::print("wrote {} rows to {}\n", rows.size(), (dir / "compare.csv").string());
    }
  } catch (const mtd::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const mtd::IntegrityError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const mtd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const mtd::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const mtd::RangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const mtd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
