#include "crnreduce/reduction.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace crnred::reduction {

bool TFPVCandidate::has_positive_kappa() const {
  return std::any_of(kappa_signs.begin(), kappa_signs.end(),
                     [](Sign s) { return s == Sign::Positive; });
}

bool operator==(const TFPVCandidate& a, const TFPVCandidate& b) {
  return a.kappa_signs == b.kappa_signs && a.alpha_signs == b.alpha_signs;
}

namespace {

// Rate symbols by canonical index; aliases resolve to one symbol.
std::vector<Sym> rate_symbols(const crn::ReactionNetwork& net) {
  std::vector<Sym> out(static_cast<std::size_t>(net.rate_count()));
  for (const crn::Reaction& r : net.reactions)
    out[static_cast<std::size_t>(r.rate.index)] = r.rate;
  return out;
}

// Canonical entries between stages; unreduced products compound across the
// chained inverses and make the Bareiss steps blow up.
RFMatrix reduced_entries(RFMatrix m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m.at(i, j) = m.at(i, j).reduced();
  return m;
}

std::vector<RatFn> mat_vec(const RFMatrix& m, const std::vector<RatFn>& v) {
  std::vector<RatFn> out(static_cast<std::size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      out[static_cast<std::size_t>(i)] += m.at(i, j) * v[static_cast<std::size_t>(j)];
  return out;
}

std::vector<RatFn> vec_sub(const std::vector<RatFn>& a, const std::vector<RatFn>& b) {
  std::vector<RatFn> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

std::vector<RatFn> subst_vec(const std::vector<RatFn>& v, const std::map<Sym, RatFn>& sub) {
  std::vector<RatFn> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].subst(sub);
  return out;
}

bool positive_rate(const crn::ReactionNetwork& net, const TFPVCandidate& cand, int reaction) {
  int idx = net.reactions[static_cast<std::size_t>(reaction)].rate.index;
  return cand.kappa_signs[static_cast<std::size_t>(idx)] == Sign::Positive;
}

// Reactions in I: block 1, no non-interacting species in the product.
std::vector<int> i_reactions(const PartitionedSystem& psys) {
  std::vector<int> out;
  for (int i = 0; i < psys.m1; ++i) {
    int orig = psys.reaction_order[static_cast<std::size_t>(i)];
    const crn::Reaction& r = psys.net.reactions[static_cast<std::size_t>(orig)];
    bool touches_z = false;
    for (int pz : psys.zspecies)
      if (r.product[static_cast<std::size_t>(pz)] != 0) touches_z = true;
    if (!touches_z) out.push_back(orig);
  }
  return out;
}

// Rank of the stacked xi (x-stoichiometry of I) and zeta vectors; the cycle
// conditions are necessary as well as sufficient iff these are independent.
bool xi_zeta_independent(const PartitionedSystem& psys, const std::vector<int>& ilist,
                         const std::vector<nigraph::SigmaCycle>& sigma) {
  crn::IntMat N = crn::stoich_matrix(psys.net);
  int rows = static_cast<int>(ilist.size() + sigma.size());
  if (rows == 0) return true;
  RFMatrix m(rows, psys.n);
  int r = 0;
  for (int orig : ilist) {
    for (int j = 0; j < psys.n; ++j)
      m.at(r, j) = RatFn::constant(
          static_cast<long>(N[static_cast<std::size_t>(psys.xspecies[static_cast<std::size_t>(j)])]
                             [static_cast<std::size_t>(orig)]));
    ++r;
  }
  for (const nigraph::SigmaCycle& sc : sigma) {
    for (int j = 0; j < psys.n; ++j)
      m.at(r, j) = RatFn::constant(static_cast<long>(sc.zeta[static_cast<std::size_t>(j)]));
    ++r;
  }
  return m.rank() == rows;
}

void blanket_ii_impl(const PartitionedSystem& psys, const ConservationBasis& basis,
                     const NIGraph& graph, const std::vector<int>& ilist,
                     const std::vector<nigraph::SigmaCycle>& sigma, bool necessity,
                     const TFPVCandidate& cand, BlanketReport& report) {
  report.necessity = necessity;

  for (int orig : ilist)
    if (positive_rate(psys.net, cand, orig)) report.v1_violations.push_back(orig);

  auto edge_positive = [&](int e) {
    return positive_rate(psys.net, cand, graph.edges[static_cast<std::size_t>(e)].reaction);
  };
  bool all_hold = true, any_shortcut = false;
  for (std::size_t s = 0; s < sigma.size(); ++s) {
    const nigraph::SigmaCycle& sc = sigma[s];
    CycleCondition cc;
    cc.sigma = static_cast<int>(s);
    bool label_zero = !std::all_of(sc.cycle.begin(), sc.cycle.end(), edge_positive);
    bool alpha_zero =
        sc.component > 0 &&
        cand.alpha_signs[static_cast<std::size_t>(
            graph.alpha_row[static_cast<std::size_t>(sc.component)])] == Sign::Zero;
    bool gsum_zero = true;  // every gamma label vanishes under the pattern
    for (const std::vector<int>& gamma : sc.gamma)
      if (std::all_of(gamma.begin(), gamma.end(), edge_positive)) gsum_zero = false;
    cc.holds = gsum_zero || alpha_zero;
    cc.shortcut = label_zero || alpha_zero;
    report.cycle_conditions.push_back(cc);
    all_hold = all_hold && cc.holds;
    any_shortcut = any_shortcut || (cc.holds && cc.shortcut);
  }
  if (!report.v1_violations.empty() || !all_hold)
    report.cond_ii_sufficient = Sufficiency::NotImplied;
  else
    report.cond_ii_sufficient = any_shortcut ? Sufficiency::HoldsShortcut : Sufficiency::Holds;

  // exact residual from the tree/cycle expansion over the pattern graph
  NIGraph dropped = pattern_graph(graph, psys.net, cand);
  nigraph::TreeFormula tf = nigraph::rhs_tree_formula(psys, basis, dropped);
  std::map<Sym, RatFn> sub = pattern_substitution(psys.net, basis, cand);
  report.cond_ii_exact = true;
  for (const RatFn& t : tf.total) {
    Poly num = t.subst(sub).reduced().num();
    if (!num.is_zero()) report.cond_ii_exact = false;
    report.residual.push_back(std::move(num));
  }
}

}  // namespace

std::map<Sym, RatFn> pattern_substitution(const crn::ReactionNetwork& net,
                                          const ConservationBasis& basis,
                                          const TFPVCandidate& cand) {
  std::map<Sym, RatFn> sub;
  std::vector<Sym> rates = rate_symbols(net);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (cand.kappa_signs[i] == Sign::Zero)
      sub.emplace(rates[i], RatFn());
    else
      sub.emplace(crn::rate_dir(rates[i]), RatFn());
  }
  for (std::size_t i = 0; i < basis.alpha.size(); ++i) {
    if (cand.alpha_signs[i] == Sign::Zero)
      sub.emplace(basis.alpha[i], RatFn());
    else
      sub.emplace(crn::alpha_dir(basis.alpha[i]), RatFn());
  }
  return sub;
}

ABBlocks substitute_blocks(const ABBlocks& blocks, const std::map<Sym, RatFn>& sub) {
  ABBlocks out = blocks;
  out.a0 = subst_vec(blocks.a0, sub);
  out.b0 = subst_vec(blocks.b0, sub);
  out.a1 = subst_vec(blocks.a1, sub);
  out.b1 = subst_vec(blocks.b1, sub);
  out.A0 = blocks.A0.subst(sub);
  out.B0 = blocks.B0.subst(sub);
  out.A1 = blocks.A1.subst(sub);
  out.B1 = blocks.B1.subst(sub);
  return out;
}

NIGraph pattern_graph(const NIGraph& graph, const crn::ReactionNetwork& net,
                      const TFPVCandidate& cand) {
  std::vector<bool> keep(graph.edges.size());
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    keep[i] = positive_rate(net, cand, graph.edges[i].reaction);
  return nigraph::drop_edges(graph, keep);
}

BlanketReport check_blanket_i(const PartitionedSystem& psys, const NIGraph& graph,
                              const TFPVCandidate& cand) {
  NIGraph dropped = pattern_graph(graph, psys.net, cand);
  // witness edges translate back to indices into graph.edges
  std::vector<int> orig;
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    if (positive_rate(psys.net, cand, graph.edges[i].reaction))
      orig.push_back(static_cast<int>(i));

  BlanketReport report;
  report.cond_i = true;
  report.tree_witness.assign(graph.components.size(), {});
  for (int c = 0; c < static_cast<int>(graph.components.size()); ++c) {
    std::vector<nigraph::SpanningTree> trees;
    if (c == 0) {
      trees = nigraph::spanning_trees(dropped, 0, dropped.star);
    } else {
      for (int v : graph.components[static_cast<std::size_t>(c)]) {
        trees = nigraph::spanning_trees(dropped, c, v);
        if (!trees.empty()) break;
      }
    }
    if (!trees.empty()) {
      for (int e : trees[0].edges)
        report.tree_witness[static_cast<std::size_t>(c)].push_back(
            orig[static_cast<std::size_t>(e)]);
    } else {
      report.cond_i = false;
      if (report.failing_component < 0) report.failing_component = c;
    }
  }
  return report;
}

void check_blanket_ii(const PartitionedSystem& psys, const ConservationBasis& basis,
                      const NIGraph& graph, const TFPVCandidate& cand,
                      BlanketReport& report) {
  std::vector<int> ilist = i_reactions(psys);
  std::vector<nigraph::SigmaCycle> sigma = nigraph::sigma_cycles(graph, psys);
  blanket_ii_impl(psys, basis, graph, ilist, sigma,
                  xi_zeta_independent(psys, ilist, sigma), cand, report);
}

TFPVCandidate canonical_qss_candidate(const PartitionedSystem& psys,
                                      const ConservationBasis& basis) {
  TFPVCandidate cand;
  cand.kappa_signs.assign(static_cast<std::size_t>(psys.net.rate_count()), Sign::Positive);
  for (int i = 0; i < psys.m1; ++i) {
    int orig = psys.reaction_order[static_cast<std::size_t>(i)];
    cand.kappa_signs[static_cast<std::size_t>(
        psys.net.reactions[static_cast<std::size_t>(orig)].rate.index)] = Sign::Zero;
  }
  cand.alpha_signs.assign(static_cast<std::size_t>(basis.k), Sign::Zero);
  cand.canonical_qss = true;
  return cand;
}

std::vector<std::pair<TFPVCandidate, BlanketReport>> find_tfpv_candidates(
    const PartitionedSystem& psys, const ConservationBasis& basis, const NIGraph& graph) {
  const int m = psys.net.rate_count();
  const int k = basis.k;
  if (m + k > 20)
    throw Error(ErrorKind::Input, "pattern-cap",
                "2^" + std::to_string(m + k) +
                    " sign patterns exceed the 2^20 cap; pin parameters to restrict the search");

  std::vector<int> ilist = i_reactions(psys);
  std::vector<nigraph::SigmaCycle> sigma = nigraph::sigma_cycles(graph, psys);
  bool necessity = xi_zeta_independent(psys, ilist, sigma);
  TFPVCandidate canonical = canonical_qss_candidate(psys, basis);

  std::vector<std::pair<TFPVCandidate, BlanketReport>> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (m + k)); ++mask) {
    TFPVCandidate cand;
    for (int i = 0; i < m; ++i)
      cand.kappa_signs.push_back((mask >> i) & 1 ? Sign::Positive : Sign::Zero);
    for (int i = 0; i < k; ++i)
      cand.alpha_signs.push_back((mask >> (m + i)) & 1 ? Sign::Positive : Sign::Zero);
    if (!cand.has_positive_kappa()) continue;
    cand.canonical_qss = cand == canonical;

    BlanketReport report = check_blanket_i(psys, graph, cand);
    if (!report.cond_i) continue;
    blanket_ii_impl(psys, basis, graph, ilist, sigma, necessity, cand, report);
    if (!report.cond_ii_exact) continue;
    out.emplace_back(std::move(cand), std::move(report));
  }
  return out;
}

WResult compute_w(const ABBlocks& blocks, const std::vector<Sym>& xsyms) {
  if (blocks.B0.determinant().is_zero())
    throw Error(ErrorKind::Math, "singular-b0",
                "B0 is generically singular; blanket condition (i) fails");
  WResult res;
  res.w = mat_vec(blocks.B0.inverse(), blocks.b0);
  for (RatFn& f : res.w) f = f.reduced();
  res.constant = std::all_of(res.w.begin(), res.w.end(),
                             [&](const RatFn& f) { return f.is_constant_in(xsyms); });
  return res;
}

ReductionOutput compute_tf_reduction(const PartitionedSystem& psys,
                                     const ConservationBasis& basis,
                                     const ABBlocks& blocks, const TFPVCandidate& cand) {
  const ABBlocks sb = substitute_blocks(blocks, pattern_substitution(psys.net, basis, cand));
  const int n = sb.n, p = sb.p;

  ReductionOutput out;
  WResult wr = compute_w(sb, psys.xsyms);
  out.w = wr.w;
  out.w_constant = wr.constant;
  out.critical_manifold.resize(out.w.size());
  for (std::size_t i = 0; i < out.w.size(); ++i) out.critical_manifold[i] = -out.w[i];

  out.Dw = RFMatrix(p, n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j)
      out.Dw.at(i, j) = out.w[static_cast<std::size_t>(i)].diff(psys.xsyms[static_cast<std::size_t>(j)]);

  out.Dw = reduced_entries(out.Dw);
  RFMatrix b0inv = reduced_entries(sb.B0.inverse());
  out.Delta = reduced_entries(out.Dw * sb.A0 + sb.B0);
  out.M = reduced_entries(out.Dw * sb.A0 * b0inv + RFMatrix::identity(p));
  if (out.Delta.determinant().is_zero())
    throw Error(ErrorKind::Math, "no-reduction",
                "no Tikhonov-Fenichel reduction (Lemma 1(b) fails)");

  RFMatrix minv = reduced_entries(out.M.inverse());
  RFMatrix a0b0inv = reduced_entries(sb.A0 * b0inv);  // n x p
  RFMatrix g = reduced_entries(a0b0inv * minv);       // n x p

  std::vector<RatFn> u = vec_sub(sb.a1, mat_vec(sb.A1, out.w));  // a1 - A1 w
  std::vector<RatFn> v = vec_sub(sb.b1, mat_vec(sb.B1, out.w));  // b1 - B1 w
  std::vector<RatFn> dwu_v = mat_vec(out.Dw, u);
  for (int i = 0; i < p; ++i) dwu_v[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
  out.tf_rhs = vec_sub(u, mat_vec(g, dwu_v));
  out.qss_rhs = vec_sub(u, mat_vec(a0b0inv, v));
  for (RatFn& f : out.tf_rhs) f = f.reduced();
  for (RatFn& f : out.qss_rhs) f = f.reduced();

  // agreement residual A0 B0^-1 M^-1 Dw (A0 B0^-1 (B1 w - b1) - (A1 w - a1));
  // the inner vector equals (a1 - A1 w) - A0 B0^-1 (b1 - B1 w)
  std::vector<RatFn> inner = vec_sub(u, mat_vec(a0b0inv, v));
  out.agreement_residual = mat_vec(g, mat_vec(out.Dw, inner));
  out.agrees = true;
  for (RatFn& f : out.agreement_residual) {
    f = f.reduced();
    if (!f.is_zero()) out.agrees = false;
  }

  if (out.Dw.is_zero())
    out.agreement_case = AgreementCase::DwZero;
  else if (sb.A0.is_zero())
    out.agreement_case = AgreementCase::AZero;
  else if (std::all_of(inner.begin(), inner.end(), [](const RatFn& f) { return f.is_zero(); }))
    out.agreement_case = AgreementCase::CorrectionsMatch;
  else
    out.agreement_case = AgreementCase::None;

  // Q = I - (A0 B0^-1 M^-1; M^-1) (Dw  I_p)
  out.Q = RFMatrix::identity(n + p);
  for (int i = 0; i < n + p; ++i) {
    for (int j = 0; j < n + p; ++j) {
      RatFn t;
      for (int l = 0; l < p; ++l) {
        const RatFn& left = i < n ? g.at(i, l) : minv.at(i - n, l);
        if (j < n)
          t += left * out.Dw.at(l, j);
        else if (l == j - n)
          t += left;
      }
      out.Q.at(i, j) -= t;
    }
  }
  out.Q = reduced_entries(out.Q);
  return out;
}

std::vector<RatFn> compute_qss_reduction(const PartitionedSystem& psys,
                                         const ConservationBasis& basis,
                                         const ABBlocks& blocks, const TFPVCandidate& cand) {
  const ABBlocks sb = substitute_blocks(blocks, pattern_substitution(psys.net, basis, cand));
  WResult wr = compute_w(sb, psys.xsyms);
  std::vector<RatFn> u = vec_sub(sb.a1, mat_vec(sb.A1, wr.w));
  std::vector<RatFn> v = vec_sub(sb.b1, mat_vec(sb.B1, wr.w));
  std::vector<RatFn> out = vec_sub(u, mat_vec(sb.A0 * sb.B0.inverse(), v));
  for (RatFn& f : out) f = f.reduced();
  return out;
}

std::pair<std::vector<RatFn>, bool> agreement_condition(const PartitionedSystem& psys,
                                                        const ConservationBasis& basis,
                                                        const ABBlocks& blocks,
                                                        const TFPVCandidate& cand) {
  ReductionOutput out = compute_tf_reduction(psys, basis, blocks, cand);
  return {out.agreement_residual, out.agrees};
}

AttractivityReport attractivity_check(const RFMatrix& delta, const TFPVCandidate& cand,
                                      const std::vector<std::pair<double, double>>& domain,
                                      int n_samples, std::uint64_t seed, const RFMatrix* b0) {
  AttractivityReport rep;
  if (cand.canonical_qss && b0) {
    if (!(delta == *b0))
      throw Error(ErrorKind::Math, "delta-b0-mismatch",
                  "canonical quasi-steady-state candidate requires Delta == B0");
    rep.structural_b0 = true;
    rep.note =
        "Delta = B0 is compartmental: eigenvalues have nonpositive real part "
        "at all nonnegative samples";
  } else {
    rep.note = "sampled evidence";
  }

  std::set<Sym> syms;
  for (int i = 0; i < delta.rows(); ++i)
    for (int j = 0; j < delta.cols(); ++j)
      for (const Sym& s : delta.at(i, j).symbols()) syms.insert(s);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int p = delta.rows();
  const int draw_limit = 10 * std::max(n_samples, 1);
  int draws = 0;
  rep.max_real_part = -std::numeric_limits<double>::infinity();
  while (rep.samples < n_samples) {
    if (++draws > draw_limit)
      throw Error(ErrorKind::Numeric, "pole-sampling",
                  "sampling keeps hitting poles of Delta; shrink or move the domain");
    std::unordered_map<Sym, double, symalg::SymHash> pt;
    std::map<std::string, double> named;
    for (const Sym& s : syms) {
      double val;
      if (s.kind == symalg::SymKind::XConc) {
        double lo = 0.1, hi = 1.0;
        if (s.index >= 0 && static_cast<std::size_t>(s.index) < domain.size()) {
          lo = domain[static_cast<std::size_t>(s.index)].first;
          hi = domain[static_cast<std::size_t>(s.index)].second;
        }
        val = lo + (hi - lo) * unit(rng);
      } else {
        val = std::pow(10.0, 2.0 * unit(rng) - 1.0);  // log-uniform in [0.1, 10]
      }
      pt.emplace(s, val);
      named.emplace(s.name, val);
    }
    Eigen::MatrixXd num(p, p);
    bool pole = false;
    for (int i = 0; i < p && !pole; ++i)
      for (int j = 0; j < p; ++j) {
        try {
          num(i, j) = delta.at(i, j).eval(pt);
        } catch (const Error&) {  // denominator vanishes at the sample
          pole = true;
          break;
        }
        if (!std::isfinite(num(i, j))) {
          pole = true;
          break;
        }
      }
    if (pole) continue;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(num, false);
    double re = solver.eigenvalues().real().maxCoeff();
    rep.max_real_part = std::max(rep.max_real_part, re);
    if (re > 0.0) rep.violations.push_back(named);
    ++rep.samples;
  }
  return rep;
}

FastPathResult intermediate_fast_path(const PartitionedSystem& psys,
                                      const ConservationBasis& basis, const NIGraph& graph,
                                      const ABBlocks& blocks, const TFPVCandidate& cand) {
  FastPathResult res;
  // an intermediate forms the entire complex, with coefficient one, on every
  // side it appears on
  auto is_intermediate = [&](int species) {
    for (const crn::Reaction& r : psys.net.reactions) {
      for (const std::vector<int>* side : {&r.reactant, &r.product}) {
        if ((*side)[static_cast<std::size_t>(species)] == 0) continue;
        long long total = 0;
        for (int c : *side) total += c;
        if ((*side)[static_cast<std::size_t>(species)] != 1 || total != 1) return false;
      }
    }
    return true;
  };
  if (graph.components.size() != 1) return res;
  for (int z : psys.zspecies)
    if (!is_intermediate(z)) return res;

  const ABBlocks sb = substitute_blocks(blocks, pattern_substitution(psys.net, basis, cand));
  if (!std::all_of(sb.b0.begin(), sb.b0.end(), [](const RatFn& f) { return f.is_zero(); }))
    return res;
  if (!sb.B0.is_constant_in(psys.xsyms))
    throw Error(ErrorKind::Math, "fast-path",
                "B0 depends on x although every non-interacting species is an intermediate");
  res.applies = true;
  res.rhs = vec_sub(sb.a1, mat_vec(sb.A0 * sb.B0.inverse(), sb.b1));
  for (RatFn& f : res.rhs) f = f.reduced();
  return res;
}

}  // namespace crnred::reduction
