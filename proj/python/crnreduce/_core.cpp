// Python bindings. Results cross the boundary as JSON strings (the same
// schema the CLI emits); the package wrapper parses them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crnreduce/report.hpp"

namespace py = pybind11;
using namespace crnred;
using report::json;

namespace {

struct Loaded {
  crn::ParsedInput input;
  crn::PartitionedSystem psys;
  crn::ConservationBasis basis;
};

Loaded load(const std::string& text, const std::vector<std::string>& z_names) {
  Loaded l;
  l.input = crn::parse_network(text);
  std::vector<int> z;
  if (!z_names.empty()) {
    for (const std::string& name : z_names) {
      int idx = l.input.network.species_index(name);
      if (idx < 0)
        throw Error(ErrorKind::Input, "unknown-species",
                    "species '" + name + "' is not declared");
      z.push_back(idx);
    }
  } else if (l.input.z) {
    z = *l.input.z;
  }
  l.psys = crn::partition_system(l.input.network, z);
  l.basis = crn::conservation_basis(l.psys);
  return l;
}

reduction::TFPVCandidate make_candidate(const Loaded& l, const std::string& kappa,
                                        const std::string& alpha) {
  if (static_cast<int>(kappa.size()) != l.input.network.rate_count() ||
      static_cast<int>(alpha.size()) != l.basis.k)
    throw Error(ErrorKind::Input, "pattern",
                "expected " + std::to_string(l.input.network.rate_count()) +
                    " kappa signs and " + std::to_string(l.basis.k) + " alpha signs");
  reduction::TFPVCandidate cand;
  for (char c : kappa)
    cand.kappa_signs.push_back(c == '+' ? reduction::Sign::Positive : reduction::Sign::Zero);
  for (char c : alpha)
    cand.alpha_signs.push_back(c == '+' ? reduction::Sign::Positive : reduction::Sign::Zero);
  return cand;
}

numerics::Bindings make_values(const Loaded& l, const reduction::TFPVCandidate& cand,
                               const std::map<std::string, double>& values) {
  numerics::Bindings out;
  for (const crn::Reaction& r : l.input.network.reactions) {
    bool pos = cand.kappa_signs[static_cast<std::size_t>(r.rate.index)] ==
               reduction::Sign::Positive;
    out.emplace(pos ? r.rate : crn::rate_dir(r.rate), 1.0);
  }
  for (int i = 0; i < l.basis.k; ++i) {
    const symalg::Sym& a = l.basis.alpha[static_cast<std::size_t>(i)];
    bool pos = cand.alpha_signs[static_cast<std::size_t>(i)] == reduction::Sign::Positive;
    out.emplace(pos ? a : crn::alpha_dir(a), 1.0);
  }
  for (const auto& [name_in, value] : values) {
    std::string name = name_in;
    bool dir = !name.empty() && name.back() == '*';
    if (dir) name.pop_back();
    symalg::Sym sym;
    bool found = false;
    for (const crn::Reaction& r : l.input.network.reactions)
      if (r.rate.name == name || r.rate_name == name) {
        sym = r.rate;
        found = true;
      }
    if (!found)
      for (const symalg::Sym& a : l.basis.alpha)
        if (a.name == name) {
          sym = a;
          found = true;
        }
    if (!found)
      throw Error(ErrorKind::Input, "unknown-parameter",
                  "'" + name_in + "' names no rate constant or conserved amount");
    out[dir ? (sym.kind == symalg::SymKind::Rate ? crn::rate_dir(sym) : crn::alpha_dir(sym))
            : sym] = value;
  }
  return out;
}

std::string validate(const std::string& text, const std::vector<std::string>& z_names) {
  Loaded l = load(text, z_names);
  json znames = json::array();
  for (int zi : l.psys.zspecies)
    znames.push_back(l.input.network.species[static_cast<std::size_t>(zi)]);
  json j{{"schema", report::kSchemaVersion},
         {"species", l.input.network.species},
         {"reactions", l.input.network.reactions.size()},
         {"rate_count", l.input.network.rate_count()},
         {"z", znames},
         {"m1", l.psys.m1},
         {"m2", l.psys.m2},
         {"n", l.psys.n},
         {"P", l.psys.P},
         {"k", l.basis.k}};
  return j.dump();
}

std::string graph_dot(const std::string& text, const std::vector<std::string>& z_names) {
  Loaded l = load(text, z_names);
  return nigraph::to_dot(nigraph::build_graph(l.psys, l.basis));
}

std::string tfpv(const std::string& text, const std::vector<std::string>& z_names) {
  Loaded l = load(text, z_names);
  nigraph::NIGraph graph = nigraph::build_graph(l.psys, l.basis);
  json cands = json::array();
  for (const auto& [cand, rep] : reduction::find_tfpv_candidates(l.psys, l.basis, graph))
    cands.push_back(
        {{"candidate", report::candidate_json(cand)}, {"blanket", report::blanket_json(rep)}});
  return json{{"schema", report::kSchemaVersion}, {"count", cands.size()},
              {"candidates", cands}}
      .dump();
}

std::string reduce(const std::string& text, const std::vector<std::string>& z_names,
                   const std::string& kappa, const std::string& alpha) {
  Loaded l = load(text, z_names);
  nigraph::NIGraph graph = nigraph::build_graph(l.psys, l.basis);
  crn::ABBlocks blocks = crn::ab_blocks(l.psys, l.basis);
  reduction::TFPVCandidate cand = make_candidate(l, kappa, alpha);
  reduction::BlanketReport brep = reduction::check_blanket_i(l.psys, graph, cand);
  if (brep.cond_i) reduction::check_blanket_ii(l.psys, l.basis, graph, cand, brep);
  reduction::ReductionOutput red =
      reduction::compute_tf_reduction(l.psys, l.basis, blocks, cand);
  json j = report::reduction_json(l.psys, red);
  j["candidate"] = report::candidate_json(cand);
  j["blanket"] = report::blanket_json(brep);
  return j.dump();
}

std::string simulate(const std::string& text, const std::vector<std::string>& z_names,
                     const std::string& kappa, const std::string& alpha,
                     const std::map<std::string, double>& values,
                     const std::vector<double>& epsilons, double T, double t0,
                     const std::vector<double>& x0, bool near_manifold,
                     std::uint64_t seed) {
  Loaded l = load(text, z_names);
  crn::ABBlocks blocks = crn::ab_blocks(l.psys, l.basis);
  reduction::TFPVCandidate cand = make_candidate(l, kappa, alpha);
  reduction::ReductionOutput red =
      reduction::compute_tf_reduction(l.psys, l.basis, blocks, cand);

  numerics::ExperimentConfig cfg;
  cfg.epsilons = epsilons;
  cfg.T = T;
  cfg.t0 = t0;
  cfg.seed = seed;
  cfg.init_mode =
      near_manifold ? numerics::InitMode::NearManifold : numerics::InitMode::OnManifold;
  cfg.x0 = x0.empty() ? std::vector<double>(static_cast<std::size_t>(l.psys.n), 1.0) : x0;
  if (static_cast<int>(cfg.x0.size()) != l.psys.n)
    throw Error(ErrorKind::Input, "x0",
                "x0 needs " + std::to_string(l.psys.n) + " values (slow species)");

  numerics::ConvergenceReport rep = numerics::tikhonov_experiment(
      l.psys, l.basis, red, cand, make_values(l, cand, values), cfg);
  return report::convergence_json(rep).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "graphical Tikhonov-Fenichel reduction of reaction networks";
  py::register_exception<Error>(m, "CrnError");

  m.def("validate", &validate, py::arg("text"),
        py::arg("z") = std::vector<std::string>{});
  m.def("graph_dot", &graph_dot, py::arg("text"),
        py::arg("z") = std::vector<std::string>{});
  m.def("tfpv", &tfpv, py::arg("text"), py::arg("z") = std::vector<std::string>{});
  m.def("reduce", &reduce, py::arg("text"), py::arg("z"), py::arg("kappa"),
        py::arg("alpha") = std::string());
  m.def("simulate", &simulate, py::arg("text"), py::arg("z"), py::arg("kappa"),
        py::arg("alpha") = std::string(),
        py::arg("values") = std::map<std::string, double>{},
        py::arg("epsilons") = std::vector<double>{1e-2, 5e-3, 2.5e-3, 1.25e-3},
        py::arg("T") = 10.0, py::arg("t0") = -1.0,
        py::arg("x0") = std::vector<double>{}, py::arg("near_manifold") = false,
        py::arg("seed") = 0);
}
