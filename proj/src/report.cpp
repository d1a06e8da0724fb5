#include "crnreduce/report.hpp"

#include <cstdint>
#include <cstdio>

namespace crnred::report {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json terms_json(const symalg::Poly& p) {
  json terms = json::array();
  for (const auto& [mono, coeff] : p.terms()) {
    json t;
    t["coeff"] = coeff.str();
    json factors = json::array();
    for (const auto& [sym, exp] : mono.factors) factors.push_back({sym.name, exp});
    t["monomial"] = factors;
    terms.push_back(std::move(t));
  }
  return terms;
}

const char* sufficiency_name(reduction::Sufficiency s) {
  switch (s) {
    case reduction::Sufficiency::Holds: return "holds";
    case reduction::Sufficiency::HoldsShortcut: return "holds-shortcut";
    default: return "not-implied";
  }
}

const char* agreement_name(reduction::AgreementCase c) {
  switch (c) {
    case reduction::AgreementCase::DwZero: return "w-constant";
    case reduction::AgreementCase::AZero: return "standard-form";
    case reduction::AgreementCase::CorrectionsMatch: return "corrections-match";
    default: return "none";
  }
}

json ratfn_vec(const std::vector<symalg::RatFn>& v) {
  json out = json::array();
  for (const symalg::RatFn& f : v) out.push_back(ratfn_json(f));
  return out;
}

}  // namespace

json poly_json(const symalg::Poly& p) {
  return {{"text", p.str()}, {"terms", terms_json(p)}};
}

json ratfn_json(const symalg::RatFn& f) {
  symalg::RatFn r = f.reduced();
  return {{"text", r.str()}, {"num", terms_json(r.num())}, {"den", terms_json(r.den())}};
}

json matrix_json(const symalg::RFMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(ratfn_json(m.at(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json candidate_json(const reduction::TFPVCandidate& cand) {
  auto signs = [](const std::vector<reduction::Sign>& v) {
    std::string s;
    for (reduction::Sign x : v) s += x == reduction::Sign::Positive ? '+' : '0';
    return s;
  };
  return {{"kappa", signs(cand.kappa_signs)},
          {"alpha", signs(cand.alpha_signs)},
          {"canonical_qss", cand.canonical_qss}};
}

json blanket_json(const reduction::BlanketReport& rep) {
  json cycles = json::array();
  for (const reduction::CycleCondition& cc : rep.cycle_conditions)
    cycles.push_back({{"sigma", cc.sigma}, {"holds", cc.holds}, {"shortcut", cc.shortcut}});
  json residual = json::array();
  for (const symalg::Poly& p : rep.residual) residual.push_back(poly_json(p));
  return {{"cond_i", rep.cond_i},
          {"tree_witness", rep.tree_witness},
          {"failing_component", rep.failing_component},
          {"cond_ii_sufficient", sufficiency_name(rep.cond_ii_sufficient)},
          {"v1_violations", rep.v1_violations},
          {"cycle_conditions", cycles},
          {"necessity", rep.necessity},
          {"cond_ii_exact", rep.cond_ii_exact},
          {"residual", residual}};
}

json reduction_json(const crn::PartitionedSystem& psys,
                    const reduction::ReductionOutput& red) {
  json xnames = json::array();
  for (const symalg::Sym& s : psys.xsyms) xnames.push_back(s.name);
  return {{"schema", kSchemaVersion},
          {"x", xnames},
          {"w", ratfn_vec(red.w)},
          {"w_constant", red.w_constant},
          {"critical_manifold", ratfn_vec(red.critical_manifold)},
          {"Dw", matrix_json(red.Dw)},
          {"M", matrix_json(red.M)},
          {"Delta", matrix_json(red.Delta)},
          {"Q", matrix_json(red.Q)},
          {"tf_rhs", ratfn_vec(red.tf_rhs)},
          {"qss_rhs", ratfn_vec(red.qss_rhs)},
          {"agreement_residual", ratfn_vec(red.agreement_residual)},
          {"agrees", red.agrees},
          {"agreement_case", agreement_name(red.agreement_case)}};
}

json convergence_json(const numerics::ConvergenceReport& rep) {
  return {{"schema", kSchemaVersion},
          {"epsilons", rep.epsilons},
          {"sup_errors", rep.sup_errors},
          {"ratios", rep.ratios},
          {"trivial_reduction", rep.trivial_reduction},
          {"seed", rep.seed}};
}

std::string trajectory_csv(const numerics::Trajectory& traj,
                           const std::vector<std::string>& state_names) {
  std::string out = "t";
  for (const std::string& n : state_names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += fmt_double(traj.times[i]);
    for (double v : traj.states[i]) out += "," + fmt_double(v);
    out += "\n";
  }
  return out;
}

std::string convergence_csv(const numerics::ConvergenceReport& rep) {
  std::string out = "epsilon,sup_error,ratio\n";
  for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
    out += fmt_double(rep.epsilons[i]) + "," + fmt_double(rep.sup_errors[i]) + ",";
    if (i > 0) out += fmt_double(rep.ratios[i - 1]);
    out += "\n";
  }
  return out;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json manifest_json(const std::string& command, const std::vector<ManifestInput>& inputs,
                   const std::vector<std::string>& outputs) {
  json in = json::array();
  for (const ManifestInput& i : inputs) in.push_back({{"path", i.path}, {"hash", i.hash}});
  return {{"schema", kSchemaVersion}, {"command", command}, {"inputs", in},
          {"outputs", outputs}};
}

}  // namespace crnred::report
