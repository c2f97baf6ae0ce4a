// gravortex: command-line front end.
//
//   gravortex classify|solve|sweep|triple|oracle [--config FILE] [--set key=value]... [flags]
//
// Every flag is a shorthand for a --set override; --set is applied last.
// Records go to stdout (or --out), one JSON object per line.

#include <gravortex/cli_io.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using gravortex::json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

json number_or_string(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  return v.is_discarded() || !v.is_number() ? json(text) : v;
}

/// "x,y,m", "inf,m" or just "m".
json divisor_entry(const std::string& spec) {
  const auto parts = split(spec, ',');
  json e = json::object();
  auto mult = [&](const std::string& m) {
    const json v = json::parse(m, nullptr, false);
    if (v.is_discarded() || !v.is_number_integer())
      throw gravortex::ConfigError("--divisor", "bad multiplicity in \"" + spec + "\"");
    e["multiplicity"] = v;
  };
  if (parts.size() == 3) {
    e["x"] = number_or_string(parts[0]);
    e["y"] = number_or_string(parts[1]);
    mult(parts[2]);
  } else if (parts.size() == 2 && parts[0] == "inf") {
    e["point"] = "inf";
    mult(parts[1]);
  } else if (parts.size() == 1) {
    mult(parts[0]);
  } else {
    throw gravortex::ConfigError("--divisor", "expected x,y,m or inf,m or m, got \"" + spec + "\"");
  }
  return e;
}

struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_path;
  std::optional<std::string> tau, alpha, model, kind, alpha_max, sigma, sub, field_csv, summary_csv;
  std::optional<int> resolution, genus, steps, n1, n2, d1, d2;
  std::vector<std::string> divisor;
  std::vector<std::string> alphas;
  bool non_strict = false;
  bool cold = false;
};

json load_document(const Flags& f, const std::string& subcommand) {
  json doc = json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw gravortex::ConfigError("--config", "cannot read " + f.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) throw gravortex::ConfigError("--config", "malformed JSON in " + f.config_path);
  }
  if (subcommand == "solve") {
    const std::string current = doc.value("command", std::string());
    if (f.kind)
      doc["command"] = "solve_" + *f.kind;
    else if (current.rfind("solve_", 0) != 0)
      doc["command"] = "solve_vortex";
  } else if (subcommand == "sweep") {
    doc["command"] = "sweep_alpha";
  } else {
    doc["command"] = subcommand;
  }
  if (f.model) doc["surface"]["model"] = *f.model;
  if (f.resolution) doc["surface"]["resolution"] = *f.resolution;
  if (f.genus) doc["genus"] = *f.genus;
  if (f.tau) doc["tau"] = number_or_string(*f.tau);
  if (f.alpha) doc["alpha"] = number_or_string(*f.alpha);
  if (!f.divisor.empty()) {
    doc["divisor"] = json::array();
    for (const auto& d : f.divisor) doc["divisor"].push_back(divisor_entry(d));
  }
  if (f.steps && subcommand == "solve") doc["continuation"]["steps"] = *f.steps;
  if (!f.alphas.empty()) {
    doc["sweep"]["alphas"] = json::array();
    for (const auto& a : f.alphas) doc["sweep"]["alphas"].push_back(number_or_string(a));
  }
  if (f.alpha_max) {
    doc["sweep"]["alpha_max"] = number_or_string(*f.alpha_max);
    doc["sweep"]["steps"] = f.steps.value_or(5);
  }
  if (f.cold) doc["sweep"]["warm_start"] = false;
  if (f.n1) doc["triple"]["n1"] = *f.n1;
  if (f.n2) doc["triple"]["n2"] = *f.n2;
  if (f.d1) doc["triple"]["d1"] = *f.d1;
  if (f.d2) doc["triple"]["d2"] = *f.d2;
  if (f.sigma) doc["triple"]["sigma"] = number_or_string(*f.sigma);
  if (f.non_strict) doc["triple"]["strict"] = false;
  if (f.sub) {
    const auto p = split(*f.sub, ',');
    if (p.size() != 4) throw gravortex::ConfigError("--sub", "expected n1,n2,d1,d2");
    json t;
    const char* keys[] = {"n1", "n2", "d1", "d2"};
    for (int i = 0; i < 4; ++i) {
      const json v = json::parse(p[i], nullptr, false);
      if (v.is_discarded() || !v.is_number_integer())
        throw gravortex::ConfigError("--sub", "expected integers n1,n2,d1,d2");
      t[keys[i]] = v;
    }
    doc["triple"]["subtriple"] = t;
  }
  if (f.field_csv) doc["output"]["field_csv"] = *f.field_csv;
  if (f.summary_csv) doc["output"]["summary_csv"] = *f.summary_csv;
  for (const auto& s : f.sets) gravortex::apply_override(doc, s);
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gravitating vortices on the sphere and the torus"};
  app.set_version_flag("--version", std::string(GRAVORTEX_VERSION));
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", f.sets, "Override a configuration value, e.g. solver.newton_tol=1e-12");
    sub->add_option("--out", f.out_path, "Write records to this file instead of stdout");
  };
  auto divisor = [&f](CLI::App* sub) {
    sub->add_option("--divisor", f.divisor, "Divisor point: x,y,m (chart) or inf,m (sphere) or m");
  };
  auto surface = [&f](CLI::App* sub) {
    sub->add_option("--model", f.model, "sphere or torus");
    sub->add_option("--resolution", f.resolution, "Torus nodes per axis or sphere harmonic degree");
  };

  auto* classify = app.add_subcommand("classify", "GIT classification of a divisor on the sphere");
  common(classify);
  divisor(classify);

  auto* solve = app.add_subcommand("solve", "Solve the vortex, gravitating vortex or Einstein-Bogomol'nyi equations");
  common(solve);
  divisor(solve);
  surface(solve);
  solve->add_option("--kind", f.kind, "vortex, gravitating or eb")
      ->check(CLI::IsMember({"vortex", "gravitating", "eb"}));
  solve->add_option("--tau", f.tau, "Symmetry breaking parameter (rational)");
  solve->add_option("--alpha", f.alpha, "Coupling constant (rational)");
  solve->add_option("--steps", f.steps, "Continuation steps in alpha");
  solve->add_option("--field-csv", f.field_csv, "Dump fields at every node to this CSV file");

  auto* sweep = app.add_subcommand("sweep", "Warm-started continuation over a list of alphas");
  common(sweep);
  divisor(sweep);
  surface(sweep);
  sweep->add_option("--tau", f.tau, "Symmetry breaking parameter (rational)");
  sweep->add_option("--alphas", f.alphas, "Alpha values, starting at 0")->delimiter(',');
  sweep->add_option("--alpha-max", f.alpha_max, "Largest alpha of a uniform sweep");
  sweep->add_option("--steps", f.steps, "Number of uniform steps up to --alpha-max");
  sweep->add_option("--summary-csv", f.summary_csv, "Summary CSV path (empty string: none)");
  sweep->add_flag("--cold", f.cold, "Solve each alpha by its own continuation from 0");

  auto* triple = app.add_subcommand("triple", "Sigma-slope arithmetic for holomorphic triples");
  common(triple);
  triple->add_option("--n1", f.n1);
  triple->add_option("--n2", f.n2);
  triple->add_option("--d1", f.d1);
  triple->add_option("--d2", f.d2);
  triple->add_option("--sigma", f.sigma, "Sigma (rational)");
  triple->add_option("--sub", f.sub, "Candidate subtriple n1,n2,d1,d2");
  triple->add_flag("--non-strict", f.non_strict, "Test semistability instead of stability");

  auto* oracle = app.add_subcommand("oracle", "Existence verdict from the known theorems");
  common(oracle);
  divisor(oracle);
  oracle->add_option("--genus", f.genus);
  oracle->add_option("--model", f.model, "sphere or torus (sets the default genus)");
  oracle->add_option("--tau", f.tau, "Symmetry breaking parameter (rational)");
  oracle->add_option("--alpha", f.alpha, "Coupling constant (rational)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? gravortex::kExitSuccess : gravortex::kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const gravortex::RunConfig config = gravortex::parse_config(load_document(f, name));
    std::ofstream file;
    if (!f.out_path.empty()) {
      file.open(f.out_path);
      if (!file) throw gravortex::ConfigError("--out", "cannot open " + f.out_path);
    }
    std::ostream& out = f.out_path.empty() ? std::cout : file;

    if (config.command == gravortex::Command::SweepAlpha) {
      const auto records = gravortex::sweep_alpha(config);
      for (const auto& r : records) out << r.dump() << '\n';
      return records.front().exit_code;
    }
    const auto record = gravortex::run(config);
    out << record.dump() << '\n';
    return record.exit_code;
  } catch (const gravortex::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gravortex::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gravortex::kExitUsage;
  }
}
