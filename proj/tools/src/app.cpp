#include "ldx/cli/app.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "ldx/errors.hpp"

namespace ldx::cli {

namespace {

nlohmann::ordered_json maybe(const std::optional<double>& x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

void write_sidecar(const std::string& path, const Report& rep) {
  nlohmann::ordered_json doc;
  doc["gap"] = maybe(rep.gap);
  doc["max_imag_discarded"] = maybe(rep.max_imag_discarded);
  doc["continuation_radius"] = maybe(rep.continuation_radius);
  doc["warnings"] = rep.warnings;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << doc.dump(2) << '\n';
}

Report dispatch(const RunConfig& cfg) {
  const models::AnyModel model = models::load_model(cfg.model_path);
  if (cfg.command == "rate") return cmd_rate(cfg, model);
  if (cfg.command == "expand") return cmd_expand(cfg, model);
  if (cfg.command == "firstorder") return cmd_firstorder(cfg, model);
  if (cfg.command == "validate") return cmd_validate(cfg, model);
  return cmd_diagnose(cfg, model);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Higher-order large-deviation expansions for Markov and transfer-operator models", "ldx"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::optional<double> a;
  std::string a_grid, n_grid, s_grid = "0.05:100:2000";

  const std::vector<std::pair<std::string, std::string>> commands{
      {"rate", "saddle point, rate function and variance over an a-grid"},
      {"expand", "strong expansion coefficients D_m and polynomials P_m"},
      {"firstorder", "leading coefficient by two independent routes"},
      {"validate", "compare the expansion with an exact or Monte Carlo oracle"},
      {"diagnose", "spectral gap scan, lattice and Diophantine checks, LD range"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sc = app.add_subcommand(name, help);
    sc->add_option("--model", cfg.model_path, "model JSON file")->required();
    sc->add_option("--a", a, "excess over the asymptotic mean");
    sc->add_option("--a-grid", a_grid, "start:stop:count");
    sc->add_option("--order", cfg.order, "expansion order r")->capture_default_str();
    sc->add_option("--N-grid", n_grid, "comma list, ranges as lo..hi");
    sc->add_option("--oracle", cfg.oracle, "exact | dp | mc | cylinder")
        ->check(CLI::IsMember({"exact", "dp", "mc", "cylinder"}));
    sc->add_option("--samples", cfg.samples, "Monte Carlo sample count")->capture_default_str();
    sc->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sc->add_option("--format", cfg.format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sc->add_option("--out", cfg.out, "output path (diagnostics go to <out>.diag.json)");
    sc->add_option("--s-grid", s_grid, "gap-scan grid start:stop:count")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    if (a && !a_grid.empty()) throw ConfigError("--a and --a-grid are mutually exclusive");
    if (a) cfg.a_values = {*a};
    if (!a_grid.empty()) cfg.a_values = parse_grid(a_grid);
    if (!a && a_grid.empty() && cfg.command != "diagnose") throw ConfigError("one of --a or --a-grid is required");
    if (!n_grid.empty()) cfg.N_grid = parse_N_grid(n_grid);
    if (cfg.command == "diagnose") cfg.s_grid = parse_grid(s_grid);
    if (cfg.samples < 2) throw ConfigError("--samples must be at least 2");

    const Report rep = dispatch(cfg);
    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';

    std::ostringstream body;
    if (cfg.format == "json")
      write_json(body, rep.tables);
    else
      write_csv(body, rep.tables);
    if (cfg.out.empty()) {
      out << body.str();
    } else {
      std::ofstream os(cfg.out, std::ios::binary);
      if (!os) throw ConfigError("cannot write " + cfg.out);
      os << body.str();
      write_sidecar(cfg.out + ".diag.json", rep);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ldx::cli
