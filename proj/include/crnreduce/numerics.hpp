#pragma once

// Numeric side of the reduction: compiled right-hand sides, an adaptive
// embedded Runge-Kutta integrator with dense output, eigenvalue sampling
// and the Tikhonov epsilon-convergence experiment comparing the full system
// in fast time against a reduced system in slow time.

#include "crnreduce/reduction.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace crnred::numerics {

using crn::ConservationBasis;
using crn::PartitionedSystem;
using symalg::RatFn;
using symalg::RFMatrix;
using symalg::Sym;
using symalg::SymHash;

using Bindings = std::unordered_map<Sym, double, SymHash>;

// A rational-function vector field compiled against a fixed state-symbol
// order; every non-state symbol is folded into the coefficients.
class NumericSystem {
 public:
  int dim() const { return static_cast<int>(entries_.size()); }
  // dy = f(y); throws "pole" when a denominator magnitude drops below 1e-300
  void eval(const std::vector<double>& y, std::vector<double>& dy) const;
  std::vector<double> eval(const std::vector<double>& y) const;
  // true iff every numerator coefficient folded to zero under the bindings
  bool is_zero() const;

 private:
  friend NumericSystem compile(const std::vector<RatFn>&, const std::vector<Sym>&,
                               const Bindings&);
  struct Term {
    double coeff;
    std::vector<std::pair<int, int>> powers;  // (state position, exponent)
  };
  struct Entry {
    std::vector<Term> num, den;  // den empty means the constant 1
  };
  std::vector<Entry> entries_;
};

// Throws "unbound-symbol" when rhs contains a symbol that is neither a state
// symbol nor bound.
NumericSystem compile(const std::vector<RatFn>& rhs, const std::vector<Sym>& state,
                      const Bindings& bindings);

// Solution knots plus the data for cubic Hermite dense output in between.
struct Trajectory {
  std::vector<double> times;                // strictly increasing
  std::vector<std::vector<double>> states;  // per knot
  std::vector<std::vector<double>> derivs;  // f at the knots

  std::vector<double> eval(double t) const;  // Hermite on the bracketing step
};

// Dormand-Prince 5(4) with PI step control. Throws "step-underflow" when the
// accepted step falls below machine resolution (stiffness beyond budget) and
// "tolerance" when rel_tol < 1e-12.
Trajectory integrate(const NumericSystem& sys, const std::vector<double>& x0,
                     double t_begin, double t_end, double rel_tol = 1e-8,
                     double abs_tol = 1e-10);

// Fixed-step Dormand-Prince, no error control; used to observe the order.
std::vector<double> integrate_fixed(const NumericSystem& sys, const std::vector<double>& x0,
                                    double t_begin, double t_end, int n_steps);

// Max eigenvalue real part over n uniform samples from the per-symbol boxes
// (a degenerate box pins the symbol); returns the worst sample point.
// Poles trigger resampling, capped at 10x oversampling.
std::pair<double, std::map<std::string, double>> eig_sample(
    const RFMatrix& mat, const std::map<Sym, std::pair<double, double>>& box, int n,
    std::uint64_t seed);

// The full mass-action system in the x-then-z state order.
std::vector<Sym> full_state(const PartitionedSystem& psys);
std::vector<RatFn> full_rhs(const PartitionedSystem& psys);

// Numeric values of every rate and conserved-amount symbol along the curve
// kappa-hat + eps kappa*: `values` binds the surviving symbols of the
// pattern (hats of positive-signed parameters, directions of zero-signed
// ones, by symbol); missing entries default to zero.
Bindings parameter_values(const crn::ReactionNetwork& net, const ConservationBasis& basis,
                          const reduction::TFPVCandidate& cand, const Bindings& values,
                          double eps);

// Full state on the critical manifold: x = x0, retained z = -w(x0), each
// eliminated z balances its conservation row to the bound alpha value.
std::vector<double> manifold_state(const PartitionedSystem& psys,
                                   const ConservationBasis& basis,
                                   const std::vector<RatFn>& w, const std::vector<double>& x0,
                                   const Bindings& bindings);

enum class InitMode { OnManifold, NearManifold };

struct ExperimentConfig {
  std::vector<double> epsilons;  // positive, strictly decreasing
  double T = 10.0;
  double t0 = -1.0;    // comparison window start; default 0.05 * T
  std::vector<double> x0;
  InitMode init_mode = InitMode::OnManifold;
  double delta = -1.0;  // near-manifold offset; default 0.1 * (1 + |w(x0)|)
  double rel_tol = 1e-8, abs_tol = 1e-10;
  std::uint64_t seed = 0;
  int grid_points = 200;
  bool keep_trajectories = false;  // store the integrated knots in the report
};

struct ConvergenceReport {
  std::vector<double> epsilons;
  std::vector<double> sup_errors;  // sup over the [t0, T] grid, max-norm in x
  std::vector<double> ratios;      // sup_errors[i+1] / sup_errors[i]
  bool trivial_reduction = false;  // reduced rhs vanishes under the bindings
  std::uint64_t seed = 0;
  // filled only when keep_trajectories is set
  std::vector<Trajectory> full_trajectories;  // fast time, per epsilon
  Trajectory reduced_trajectory;              // slow time
};

// For each eps: bind kappa = kappa-hat + eps kappa* (alpha likewise), start
// the full system on or near the critical manifold, integrate it in fast
// time over [0, T/eps] and the reduced rhs in slow time over [0, T], and
// take the sup over a uniform slow-time grid of [t0, T] of the max-norm
// x-difference. Trajectories for different eps run in parallel.
ConvergenceReport tikhonov_experiment(const PartitionedSystem& psys,
                                      const ConservationBasis& basis,
                                      const reduction::ReductionOutput& red,
                                      const reduction::TFPVCandidate& cand,
                                      const Bindings& values, const ExperimentConfig& cfg);

}  // namespace crnred::numerics
