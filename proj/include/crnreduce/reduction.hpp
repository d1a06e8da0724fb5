#pragma once

// Tikhonov-Fenichel parameter values from sign patterns: the two blanket
// conditions (graphically and via the exact residual), the singular
// perturbation and classical quasi-steady-state reductions in slow time,
// their agreement condition and a sampling-based attractivity check.

#include "crnreduce/crn.hpp"
#include "crnreduce/nigraph.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace crnred::reduction {

using crn::ABBlocks;
using crn::ConservationBasis;
using crn::PartitionedSystem;
using nigraph::NIGraph;
using symalg::Poly;
using symalg::RatFn;
using symalg::RFMatrix;
using symalg::Sym;

enum class Sign { Zero, Positive };

// A sign pattern for (kappa-hat, alpha-hat). Zero-signed parameters keep
// their symbolic perturbation direction kappa*/alpha*; positive-signed ones
// keep the hat symbol and lose the direction.
struct TFPVCandidate {
  std::vector<Sign> kappa_signs;  // per rate symbol index
  std::vector<Sign> alpha_signs;  // per conservation row
  bool canonical_qss = false;     // all slow-reaction rates zero, alpha-hat zero

  bool has_positive_kappa() const;
};

bool operator==(const TFPVCandidate& a, const TFPVCandidate& b);

struct CycleCondition {
  int sigma = 0;          // index into the full-graph Sigma list
  bool holds = false;     // the cycle condition under the pattern
  bool shortcut = false;  // implied by the cycle's own label (or alpha) vanishing
};

enum class Sufficiency { Holds, HoldsShortcut, NotImplied };

struct BlanketReport {
  // condition (i): a positive-label rooted spanning tree per component
  bool cond_i = false;
  std::vector<std::vector<int>> tree_witness;  // per component, edge indices
  int failing_component = -1;

  // condition (ii), sufficient graph conditions
  Sufficiency cond_ii_sufficient = Sufficiency::NotImplied;
  std::vector<int> v1_violations;  // reactions in I with a positive-signed rate
  std::vector<CycleCondition> cycle_conditions;
  bool necessity = false;  // xi/zeta vectors linearly independent

  // condition (ii), exact: numerators of a0 - A0 B0^{-1} b0 under the
  // pattern, positive-signed symbols kept symbolic
  bool cond_ii_exact = false;
  std::vector<Poly> residual;
};

// kappa-hat -> 0 for zero-signed rates, kappa* -> 0 for positive-signed
// ones; alphas likewise.
std::map<Sym, RatFn> pattern_substitution(const crn::ReactionNetwork& net,
                                          const ConservationBasis& basis,
                                          const TFPVCandidate& cand);
ABBlocks substitute_blocks(const ABBlocks& blocks, const std::map<Sym, RatFn>& sub);

// The graph with the edges of zero-signed reactions removed; nodes and the
// component structure are kept.
NIGraph pattern_graph(const NIGraph& graph, const crn::ReactionNetwork& net,
                      const TFPVCandidate& cand);

BlanketReport check_blanket_i(const PartitionedSystem& psys, const NIGraph& graph,
                              const TFPVCandidate& cand);
// Fills the condition-(ii) fields of report; pre: cond_i holds.
void check_blanket_ii(const PartitionedSystem& psys, const ConservationBasis& basis,
                      const NIGraph& graph, const TFPVCandidate& cand,
                      BlanketReport& report);

// The canonical quasi-steady-state candidate: every rate used by a slow
// (block-1) reaction zero, every other rate positive, alpha-hat zero.
TFPVCandidate canonical_qss_candidate(const PartitionedSystem& psys,
                                      const ConservationBasis& basis);

// All sign patterns with at least one positive rate that pass blanket (i)
// and the exact blanket (ii), in mask order; 2^(m+k) capped at 2^20.
std::vector<std::pair<TFPVCandidate, BlanketReport>> find_tfpv_candidates(
    const PartitionedSystem& psys, const ConservationBasis& basis, const NIGraph& graph);

struct WResult {
  std::vector<RatFn> w;
  bool constant = false;  // every entry free of the x symbols
};

// w = B0^{-1} b0 on pattern-substituted blocks; throws "singular-b0" when
// B0 is generically singular (blanket (i) violated).
WResult compute_w(const ABBlocks& blocks, const std::vector<Sym>& xsyms);

enum class AgreementCase { DwZero, AZero, CorrectionsMatch, None };

struct ReductionOutput {
  std::vector<RatFn> w;
  bool w_constant = false;
  RFMatrix Dw;        // p x n
  RFMatrix M, Delta;  // p x p, Delta = Dw A0 + B0 = M B0
  RFMatrix Q;         // (n+p) x (n+p) projection onto the slow directions
  std::vector<RatFn> tf_rhs;   // singular perturbation reduction, slow time
  std::vector<RatFn> qss_rhs;  // classical quasi-steady-state reduction, slow time
  std::vector<RatFn> agreement_residual;  // A0 B0^-1 M^-1 Dw (...), == qss - tf
  bool agrees = false;
  AgreementCase agreement_case = AgreementCase::None;
  std::vector<RatFn> critical_manifold;  // z = -w(x)
};

// Throws "no-reduction" when Delta is generically singular.
ReductionOutput compute_tf_reduction(const PartitionedSystem& psys,
                                     const ConservationBasis& basis,
                                     const ABBlocks& blocks, const TFPVCandidate& cand);
std::vector<RatFn> compute_qss_reduction(const PartitionedSystem& psys,
                                         const ConservationBasis& basis,
                                         const ABBlocks& blocks, const TFPVCandidate& cand);
std::pair<std::vector<RatFn>, bool> agreement_condition(const PartitionedSystem& psys,
                                                        const ConservationBasis& basis,
                                                        const ABBlocks& blocks,
                                                        const TFPVCandidate& cand);

struct AttractivityReport {
  int samples = 0;
  double max_real_part = 0.0;
  // points (symbol name -> value) where some eigenvalue has real part > 0
  std::vector<std::map<std::string, double>> violations;
  bool structural_b0 = false;  // Delta == B0: compartmental guarantee
  std::string note;
};

// Samples x from the per-coordinate boxes (default (0.1, 1)) and every
// remaining positive parameter log-uniformly from [0.1, 10]; eigenvalues are
// computed numerically. Poles trigger resampling, capped at 10x oversampling.
AttractivityReport attractivity_check(const RFMatrix& delta, const TFPVCandidate& cand,
                                      const std::vector<std::pair<double, double>>& domain,
                                      int n_samples, std::uint64_t seed,
                                      const RFMatrix* b0 = nullptr);

struct FastPathResult {
  bool applies = false;
  std::vector<RatFn> rhs;  // a1 - A0 B0^{-1} b1 with B0 constant in x
};

// Intermediate-species fast path: every non-interacting species is an
// intermediate, the graph has a single component and b0 vanishes under the
// pattern; then B0 is constant in x and the reduction simplifies.
FastPathResult intermediate_fast_path(const PartitionedSystem& psys,
                                      const ConservationBasis& basis, const NIGraph& graph,
                                      const ABBlocks& blocks, const TFPVCandidate& cand);

}  // namespace crnred::reduction
