#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biwarp/builtin.hpp"
#include "biwarp/errors.hpp"
#include "biwarp/pipeline.hpp"

namespace {

using namespace biwarp;

double parse_number(const std::string& s) { return Expression::parse(s, SymbolTable{}).eval({}); }

// name=value,name=value
std::map<std::string, double> parse_assignments(const std::vector<std::string>& items, const std::string& flag) {
  std::map<std::string, double> out;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError(flag + " expects name=value, got '" + item + "'");
    out[item.substr(0, eq)] = parse_number(item.substr(eq + 1));
  }
  return out;
}

// name=lo:hi
std::map<std::string, Interval> parse_box(const std::vector<std::string>& items) {
  std::map<std::string, Interval> out;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    const auto colon = item.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) {
      throw ParseError("--box expects name=lo:hi, got '" + item + "'");
    }
    Interval iv{parse_number(item.substr(eq + 1, colon - eq - 1)), parse_number(item.substr(colon + 1))};
    if (!(iv.lo < iv.hi)) throw ParseError("--box interval for '" + item.substr(0, eq) + "' is empty");
    out[item.substr(0, eq)] = iv;
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extrinsic geometry checks for bi-warped product submanifolds"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string ambient, json_path, out_path;
  std::vector<std::string> consts, box, fiber;
  double tol_identity = cfg.tol.identity, tol_slack = cfg.tol.slack;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--example", cfg.example, "built-in example id (ex1, ex2)");
    sub->add_option("--manifest", cfg.manifest_path, "manifest file");
    sub->add_option("--const", consts, "override a built-in constant, name=value");
    sub->add_option("--seed", cfg.seed, "seed for sampling and direction draws");
    sub->add_option("--tol-identity", tol_identity, "identity residual tolerance");
    sub->add_option("--tol-slack", tol_slack, "inequality slack tolerance");
    sub->add_option("--ambient", ambient, "override the ambient kind")
        ->check(CLI::IsMember({"euclidean_contact", "sasakian_standard"}));
    sub->add_option("--json", json_path, "write the JSON report here");
    sub->add_option("--out", out_path, "write the text report here instead of stdout");
  };

  CLI::App* verify = app.add_subcommand("verify", "evaluate every check over a sample of points");
  add_common(verify);
  verify->add_option("--grid", cfg.grid, "cell-centre grid, points per axis")->check(CLI::PositiveNumber);
  verify->add_option("--random", cfg.random, "number of random points")->check(CLI::PositiveNumber);

  CLI::App* energy = app.add_subcommand("energy", "integrate the energy bound over the base factor");
  add_common(energy);
  energy->add_option("--box", box, "base coordinate range, name=lo:hi");
  energy->add_option("--fiber", fiber, "fixed fiber coordinate, name=value");
  energy->add_option("--order", cfg.order, "Gauss-Legendre order per axis")->check(CLI::Range(2, 64));
  energy->add_flag("!--no-oracle", cfg.oracle, "skip the adaptive quadrature cross-check");

  CLI::App* example = app.add_subcommand("example", "built-in examples");
  bool list = false;
  std::string show;
  example->add_flag("--list", list, "list built-in examples");
  example->add_option("--show", show, "print the manifest of a built-in example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (example->parsed()) {
      if (!show.empty()) {
        std::cout << builtin_manifest_text(show);
      } else if (list) {
        for (const BuiltinInfo& b : builtin_list()) std::cout << b.id << "  " << b.summary << "\n";
      } else {
        std::cerr << "example: give --list or --show ID\n";
        return 2;
      }
      return 0;
    }

    cfg.tol.identity = tol_identity;
    cfg.tol.slack = tol_slack;
    if (!ambient.empty()) cfg.ambient = ambient_kind_from_string(ambient);
    if (verify->parsed() && cfg.grid > 0 && cfg.random > 0) throw ParseError("--grid and --random are exclusive");
    cfg.constants = parse_assignments(consts, "--const");
    cfg.fiber = parse_assignments(fiber, "--fiber");
    cfg.box = parse_box(box);

    const ImmersionSpec spec = load_spec(cfg);
    const RunReport rep = verify->parsed() ? run_verify(spec, cfg) : run_energy(spec, cfg);
    if (!json_path.empty()) write_file(json_path, to_json(rep).dump(2) + "\n");
    if (out_path.empty()) {
      std::cout << to_text(rep);
    } else {
      write_file(out_path, to_text(rep));
    }
    return rep.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
