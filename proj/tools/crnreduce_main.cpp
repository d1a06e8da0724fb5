// crnreduce: validate networks, export the non-interacting graph, enumerate
// TFPV sign patterns, emit symbolic reductions and run convergence
// experiments. Exit codes: 0 ok, 1 input error, 2 mathematical obstruction,
// 3 numeric failure.

#include <CLI11.hpp>

#include "crnreduce/report.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace crnred;
using report::json;

namespace {

struct Config {
  std::string network;
  std::string species_z;
  std::vector<std::string> pin_zero, pin_positive;
  bool alpha_zero = false;
  std::vector<std::string> directions;  // name=value, name may end in '*'
  std::string epsilons = "1e-2,5e-3,2.5e-3,1.25e-3";
  double t0 = -1.0, T = 10.0;
  std::string x0;
  double rel_tol = 1e-8, abs_tol = 1e-10;
  std::uint64_t seed = 0;
  bool near_manifold = false;
  std::string out;
  std::string format;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Input, "io", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : split_tokens(s)) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Input, "parse", "bad " + what + " value '" + tok + "'");
    }
  }
  return out;
}

// Everything loaded from --network / --species-z that commands share.
struct Loaded {
  crn::ParsedInput input;
  std::vector<int> z;
  std::string raw;
};

Loaded load(const Config& cfg, bool need_z) {
  Loaded l;
  l.raw = read_file(cfg.network);
  l.input = crn::parse_network(l.raw);
  if (!cfg.species_z.empty()) {
    for (const std::string& name : split_tokens(cfg.species_z)) {
      int idx = l.input.network.species_index(name);
      if (idx < 0)
        throw Error(ErrorKind::Input, "unknown-species",
                    "species '" + name + "' is not declared");
      l.z.push_back(idx);
    }
  } else if (l.input.z) {
    l.z = *l.input.z;
  } else if (need_z) {
    throw Error(ErrorKind::Input, "no-z",
                "no non-interacting set: pass --species-z or add a Z: line");
  }
  return l;
}

int rate_index(const crn::ReactionNetwork& net, const std::string& name) {
  for (const crn::Reaction& r : net.reactions)
    if (r.rate.name == name || r.rate_name == name) return r.rate.index;
  return -1;
}

int alpha_index(const std::string& name, int k) {
  if (name.rfind("alpha", 0) != 0) return -1;
  try {
    int i = std::stoi(name.substr(5)) - 1;
    return i >= 0 && i < k ? i : -1;
  } catch (const std::exception&) {
    return -1;
  }
}

reduction::TFPVCandidate candidate_from_pins(const crn::ReactionNetwork& net,
                                             const crn::ConservationBasis& basis,
                                             const Config& cfg) {
  reduction::TFPVCandidate cand;
  cand.kappa_signs.assign(static_cast<std::size_t>(net.rate_count()),
                          reduction::Sign::Positive);
  cand.alpha_signs.assign(static_cast<std::size_t>(basis.k),
                          cfg.alpha_zero ? reduction::Sign::Zero : reduction::Sign::Positive);
  auto apply = [&](const std::vector<std::string>& names, reduction::Sign sign) {
    for (const std::string& name : names) {
      int r = rate_index(net, name);
      if (r >= 0) {
        cand.kappa_signs[static_cast<std::size_t>(r)] = sign;
        continue;
      }
      int a = alpha_index(name, basis.k);
      if (a >= 0) {
        cand.alpha_signs[static_cast<std::size_t>(a)] = sign;
        continue;
      }
      throw Error(ErrorKind::Input, "unknown-parameter",
                  "'" + name + "' names no rate constant or conserved amount");
    }
  };
  apply(cfg.pin_zero, reduction::Sign::Zero);
  apply(cfg.pin_positive, reduction::Sign::Positive);
  return cand;
}

// Hats of positive-signed parameters and directions of zero-signed ones
// default to 1; --direction name=value overrides (a trailing '*' selects
// the direction symbol).
numerics::Bindings direction_values(const crn::ReactionNetwork& net,
                                    const crn::ConservationBasis& basis,
                                    const reduction::TFPVCandidate& cand,
                                    const Config& cfg) {
  numerics::Bindings values;
  for (const crn::Reaction& r : net.reactions) {
    bool pos = cand.kappa_signs[static_cast<std::size_t>(r.rate.index)] ==
               reduction::Sign::Positive;
    values.emplace(pos ? r.rate : crn::rate_dir(r.rate), 1.0);
  }
  for (int i = 0; i < basis.k; ++i) {
    bool pos = cand.alpha_signs[static_cast<std::size_t>(i)] == reduction::Sign::Positive;
    const symalg::Sym& a = basis.alpha[static_cast<std::size_t>(i)];
    values.emplace(pos ? a : crn::alpha_dir(a), 1.0);
  }
  for (const std::string& spec : cfg.directions) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Input, "parse", "--direction expects name=value, got '" + spec + "'");
    std::string name = spec.substr(0, eq);
    double value = parse_doubles(spec.substr(eq + 1), "direction").at(0);
    bool dir = !name.empty() && name.back() == '*';
    if (dir) name.pop_back();
    symalg::Sym sym;
    int r = rate_index(net, name);
    if (r >= 0) {
      sym = net.reactions[0].rate;  // placeholder kind; fixed below
      for (const crn::Reaction& rx : net.reactions)
        if (rx.rate.index == r) sym = rx.rate;
    } else {
      int a = alpha_index(name, basis.k);
      if (a < 0)
        throw Error(ErrorKind::Input, "unknown-parameter",
                    "'" + name + "' names no rate constant or conserved amount");
      sym = basis.alpha[static_cast<std::size_t>(a)];
    }
    values[dir ? (sym.kind == symalg::SymKind::Rate ? crn::rate_dir(sym)
                                                    : crn::alpha_dir(sym))
               : sym] = value;
  }
  return values;
}

// Collects the files of one run; writes to --out (plus a manifest) or stdout.
struct Sink {
  const Config& cfg;
  std::vector<std::string> outputs;

  void emit(const std::string& name, const std::string& content) {
    if (cfg.out.empty()) {
      std::cout << content;
      if (!content.empty() && content.back() != '\n') std::cout << '\n';
      return;
    }
    std::filesystem::create_directories(cfg.out);
    std::ofstream file(std::filesystem::path(cfg.out) / name, std::ios::binary);
    if (!file)
      throw Error(ErrorKind::Input, "io", "cannot write '" + name + "' under " + cfg.out);
    file << content;
    outputs.push_back(name);
  }

  void finish(const std::string& command, const Loaded& l) {
    if (cfg.out.empty()) return;
    json m = report::manifest_json(
        command, {{cfg.network, report::content_hash(l.raw)}}, outputs);
    std::ofstream file(std::filesystem::path(cfg.out) / "manifest.json");
    file << m.dump(2) << '\n';
  }
};

int cmd_validate(const Config& cfg) {
  Loaded l = load(cfg, false);
  json j{{"schema", report::kSchemaVersion},
         {"species", l.input.network.species},
         {"reactions", l.input.network.reactions.size()},
         {"rate_count", l.input.network.rate_count()}};
  if (!l.z.empty()) {
    crn::PartitionedSystem psys = crn::partition_system(l.input.network, l.z);
    crn::ConservationBasis basis = crn::conservation_basis(psys);
    json znames = json::array();
    for (int zi : l.z) znames.push_back(l.input.network.species[static_cast<std::size_t>(zi)]);
    j["z"] = znames;
    j["noninteracting"] = true;
    j["m1"] = psys.m1;
    j["m2"] = psys.m2;
    j["n"] = psys.n;
    j["P"] = psys.P;
    j["k"] = basis.k;
  }
  Sink sink{cfg};
  sink.emit("validate.json", j.dump(2));
  sink.finish("validate", l);
  return 0;
}

int cmd_graph(const Config& cfg) {
  Loaded l = load(cfg, false);
  crn::PartitionedSystem psys = crn::partition_system(l.input.network, l.z);
  crn::ConservationBasis basis = crn::conservation_basis(psys);
  nigraph::NIGraph graph = nigraph::build_graph(psys, basis);
  Sink sink{cfg};
  sink.emit("graph.dot", nigraph::to_dot(graph));
  sink.finish("graph", l);
  return 0;
}

int cmd_tfpv(const Config& cfg) {
  Loaded l = load(cfg, true);
  crn::PartitionedSystem psys = crn::partition_system(l.input.network, l.z);
  crn::ConservationBasis basis = crn::conservation_basis(psys);
  nigraph::NIGraph graph = nigraph::build_graph(psys, basis);

  reduction::TFPVCandidate pins = candidate_from_pins(l.input.network, basis, cfg);
  auto pinned_zero = [&](const std::string& name) {
    return std::find(cfg.pin_zero.begin(), cfg.pin_zero.end(), name) != cfg.pin_zero.end();
  };
  auto pinned_positive = [&](const std::string& name) {
    return std::find(cfg.pin_positive.begin(), cfg.pin_positive.end(), name) !=
           cfg.pin_positive.end();
  };

  json cands = json::array();
  for (const auto& [cand, rep] : reduction::find_tfpv_candidates(psys, basis, graph)) {
    bool keep = true;
    for (const crn::Reaction& r : l.input.network.reactions) {
      std::size_t i = static_cast<std::size_t>(r.rate.index);
      if (pinned_zero(r.rate.name) && cand.kappa_signs[i] != reduction::Sign::Zero)
        keep = false;
      if (pinned_positive(r.rate.name) && cand.kappa_signs[i] != reduction::Sign::Positive)
        keep = false;
    }
    for (int a = 0; a < basis.k && keep; ++a) {
      std::size_t i = static_cast<std::size_t>(a);
      if (cfg.alpha_zero && cand.alpha_signs[i] != reduction::Sign::Zero) keep = false;
      if (cand.alpha_signs[i] != pins.alpha_signs[i] &&
          (pinned_zero(basis.alpha[i].name) || pinned_positive(basis.alpha[i].name)))
        keep = false;
    }
    if (!keep) continue;
    cands.push_back(
        {{"candidate", report::candidate_json(cand)}, {"blanket", report::blanket_json(rep)}});
  }
  json j{{"schema", report::kSchemaVersion}, {"count", cands.size()}, {"candidates", cands}};
  if (cands.empty()) {
    reduction::TFPVCandidate allpos;
    allpos.kappa_signs.assign(static_cast<std::size_t>(l.input.network.rate_count()),
                              reduction::Sign::Positive);
    allpos.alpha_signs.assign(static_cast<std::size_t>(basis.k), reduction::Sign::Positive);
    j["reason"] = reduction::check_blanket_i(psys, graph, allpos).cond_i
                      ? "no sign pattern passes the blanket conditions"
                      : "blanket (i) unsatisfiable";
  }
  Sink sink{cfg};
  sink.emit("tfpv.json", j.dump(2));
  sink.finish("tfpv", l);
  return 0;
}

int cmd_reduce(const Config& cfg) {
  Loaded l = load(cfg, true);
  crn::PartitionedSystem psys = crn::partition_system(l.input.network, l.z);
  crn::ConservationBasis basis = crn::conservation_basis(psys);
  nigraph::NIGraph graph = nigraph::build_graph(psys, basis);
  crn::ABBlocks blocks = crn::ab_blocks(psys, basis);

  reduction::TFPVCandidate cand = candidate_from_pins(l.input.network, basis, cfg);
  reduction::BlanketReport brep = reduction::check_blanket_i(psys, graph, cand);
  if (brep.cond_i) reduction::check_blanket_ii(psys, basis, graph, cand, brep);
  reduction::ReductionOutput red = reduction::compute_tf_reduction(psys, basis, blocks, cand);

  json j = report::reduction_json(psys, red);
  j["candidate"] = report::candidate_json(cand);
  j["blanket"] = report::blanket_json(brep);
  Sink sink{cfg};
  sink.emit("reduce.json", j.dump(2));
  sink.finish("reduce", l);
  return 0;
}

int cmd_simulate(const Config& cfg) {
  Loaded l = load(cfg, true);
  crn::PartitionedSystem psys = crn::partition_system(l.input.network, l.z);
  crn::ConservationBasis basis = crn::conservation_basis(psys);
  crn::ABBlocks blocks = crn::ab_blocks(psys, basis);

  reduction::TFPVCandidate cand = candidate_from_pins(l.input.network, basis, cfg);
  reduction::ReductionOutput red =
      reduction::compute_tf_reduction(psys, basis, blocks, cand);
  numerics::Bindings values = direction_values(l.input.network, basis, cand, cfg);

  numerics::ExperimentConfig ecfg;
  ecfg.epsilons = parse_doubles(cfg.epsilons, "epsilon");
  ecfg.T = cfg.T;
  ecfg.t0 = cfg.t0;
  ecfg.rel_tol = cfg.rel_tol;
  ecfg.abs_tol = cfg.abs_tol;
  ecfg.seed = cfg.seed;
  ecfg.init_mode =
      cfg.near_manifold ? numerics::InitMode::NearManifold : numerics::InitMode::OnManifold;
  ecfg.keep_trajectories = !cfg.out.empty();
  if (!cfg.x0.empty())
    ecfg.x0 = parse_doubles(cfg.x0, "x0");
  else
    ecfg.x0.assign(static_cast<std::size_t>(psys.n), 1.0);
  if (static_cast<int>(ecfg.x0.size()) != psys.n)
    throw Error(ErrorKind::Input, "x0",
                "--x0 needs " + std::to_string(psys.n) + " values (slow species)");

  numerics::ConvergenceReport rep =
      numerics::tikhonov_experiment(psys, basis, red, cand, values, ecfg);
  if (rep.trivial_reduction)
    std::cerr << "warning: trivial reduction; the reduced right-hand side is zero "
                 "and the reduced trajectory is constant\n";

  Sink sink{cfg};
  sink.emit("convergence.json", report::convergence_json(rep).dump(2));
  sink.emit("convergence.csv", report::convergence_csv(rep));
  if (!cfg.out.empty()) {
    std::vector<std::string> xnames, fullnames;
    for (const symalg::Sym& s : psys.xsyms) xnames.push_back(s.name);
    fullnames = xnames;
    for (const symalg::Sym& s : psys.zsyms) fullnames.push_back(s.name);
    sink.emit("reduced.csv", report::trajectory_csv(rep.reduced_trajectory, xnames));
    for (std::size_t i = 0; i < rep.full_trajectories.size(); ++i)
      sink.emit("full_eps" + std::to_string(i) + ".csv",
                report::trajectory_csv(rep.full_trajectories[i], fullnames));
  }
  sink.finish("simulate", l);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphical Tikhonov-Fenichel reduction of reaction networks"};
  app.require_subcommand(1);
  Config cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--network", cfg.network, "network file")->required();
    sub->add_option("--species-z", cfg.species_z,
                    "non-interacting species, space or comma separated");
    sub->add_option("--out", cfg.out, "output directory (default: stdout)");
    sub->add_option("--format", cfg.format, "json|dot|csv");
    return sub;
  };
  auto add_pins = [&](CLI::App* sub) {
    sub->add_option("--pin-zero", cfg.pin_zero, "parameters pinned to zero");
    sub->add_option("--pin-positive", cfg.pin_positive, "parameters pinned positive");
    sub->add_flag("--alpha-zero", cfg.alpha_zero, "pin every conserved amount to zero");
    return sub;
  };

  CLI::App* validate = add_common(app.add_subcommand("validate", "parse and check a network"));
  CLI::App* graph = add_common(app.add_subcommand("graph", "export the graph as DOT"));
  CLI::App* tfpv =
      add_pins(add_common(app.add_subcommand("tfpv", "enumerate TFPV sign patterns")));
  CLI::App* reduce =
      add_pins(add_common(app.add_subcommand("reduce", "compute the symbolic reductions")));
  CLI::App* simulate = add_pins(
      add_common(app.add_subcommand("simulate", "run the epsilon-convergence experiment")));
  simulate->add_option("--direction", cfg.directions,
                       "parameter value name=v; a trailing '*' selects the direction");
  simulate->add_option("--epsilons", cfg.epsilons, "comma-separated epsilon list");
  simulate->add_option("--t0", cfg.t0, "comparison window start (default 0.05 T)");
  simulate->add_option("--T", cfg.T, "slow-time horizon");
  simulate->add_option("--x0", cfg.x0, "initial slow concentrations, comma separated");
  simulate->add_option("--rel-tol", cfg.rel_tol, "relative tolerance");
  simulate->add_option("--abs-tol", cfg.abs_tol, "absolute tolerance");
  simulate->add_option("--seed", cfg.seed, "random seed");
  simulate->add_flag("--near-manifold", cfg.near_manifold,
                     "perturb the initial point off the critical manifold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(cfg);
    if (*graph) return cmd_graph(cfg);
    if (*tfpv) return cmd_tfpv(cfg);
    if (*reduce) return cmd_reduce(cfg);
    if (*simulate) return cmd_simulate(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Input: return 1;
      case ErrorKind::Math: return 2;
      case ErrorKind::Numeric: return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
