#include "crnreduce/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>

namespace crnred::numerics {

namespace {

double to_double(const symalg::Rational& r) { return r.convert_to<double>(); }

int state_position(const std::vector<Sym>& state, const Sym& s) {
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] == s) return static_cast<int>(i);
  return -1;
}

}  // namespace

void NumericSystem::eval(const std::vector<double>& y, std::vector<double>& dy) const {
  dy.resize(entries_.size());
  auto sum = [&](const std::vector<Term>& terms) {
    double acc = 0.0;
    for (const Term& t : terms) {
      double v = t.coeff;
      for (auto [pos, exp] : t.powers)
        for (int e = 0; e < exp; ++e) v *= y[static_cast<std::size_t>(pos)];
      acc += v;
    }
    return acc;
  };
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    double num = sum(entries_[i].num);
    double den = entries_[i].den.empty() ? 1.0 : sum(entries_[i].den);
    if (std::abs(den) < 1e-300)
      throw Error(ErrorKind::Numeric, "pole",
                  "denominator vanishes along the trajectory");
    dy[i] = num / den;
  }
}

std::vector<double> NumericSystem::eval(const std::vector<double>& y) const {
  std::vector<double> dy;
  eval(y, dy);
  return dy;
}

bool NumericSystem::is_zero() const {
  for (const Entry& e : entries_)
    for (const Term& t : e.num)
      if (t.coeff != 0.0) return false;
  return true;
}

NumericSystem compile(const std::vector<RatFn>& rhs, const std::vector<Sym>& state,
                      const Bindings& bindings) {
  NumericSystem sys;
  auto compile_poly = [&](const symalg::Poly& p) {
    std::vector<NumericSystem::Term> out;
    for (const auto& [mono, coeff] : p.terms()) {
      NumericSystem::Term t;
      t.coeff = to_double(coeff);
      for (const auto& [sym, exp] : mono.factors) {
        int pos = state_position(state, sym);
        if (pos >= 0) {
          t.powers.emplace_back(pos, exp);
        } else {
          auto it = bindings.find(sym);
          if (it == bindings.end())
            throw Error(ErrorKind::Input, "unbound-symbol",
                        "symbol " + sym.name + " is neither a state variable nor bound");
          t.coeff *= std::pow(it->second, exp);
        }
      }
      out.push_back(std::move(t));
    }
    return out;
  };
  for (const RatFn& f : rhs) {
    NumericSystem::Entry e;
    e.num = compile_poly(f.num());
    if (!f.den().is_constant() || f.den().constant_value() != 1)
      e.den = compile_poly(f.den());
    sys.entries_.push_back(std::move(e));
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

constexpr double C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
constexpr double A[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
// fifth-order weights are row A[6]; E = b5 - b4 gives the embedded error
constexpr double E[7] = {71.0 / 57600,     0,          -71.0 / 16695, 71.0 / 1920,
                         -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

struct StepResult {
  std::vector<double> y;   // fifth-order solution
  std::vector<double> f;   // FSAL derivative at the new point
  double err;              // scaled error norm
};

// One Dormand-Prince step from (t, y) with derivative f0; throws poles through.
StepResult dp_step(const NumericSystem& sys, double t, const std::vector<double>& y,
                   const std::vector<double>& f0, double h, double rel_tol,
                   double abs_tol) {
  (void)t;
  const std::size_t d = y.size();
  std::vector<std::vector<double>> k(7);
  k[0] = f0;
  std::vector<double> stage(d);
  for (int s = 1; s < 7; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int j = 0; j < s; ++j) acc += A[s][j] * k[static_cast<std::size_t>(j)][i];
      stage[i] = y[i] + h * acc;
    }
    k[static_cast<std::size_t>(s)] = sys.eval(stage);
  }
  StepResult res;
  res.y.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 6; ++j) acc += A[6][j] * k[static_cast<std::size_t>(j)][i];
    res.y[i] = y[i] + h * acc;
  }
  res.f = k[6];  // stage 7 is evaluated at (t + h, y_new)
  double errsq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double e = 0.0;
    for (int j = 0; j < 7; ++j) e += E[j] * k[static_cast<std::size_t>(j)][i];
    double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(res.y[i]));
    errsq += (h * e / sc) * (h * e / sc);
  }
  res.err = std::sqrt(errsq / static_cast<double>(d));
  return res;
}

double initial_step(const NumericSystem& sys, const std::vector<double>& y0,
                    const std::vector<double>& f0, double span, double rel_tol,
                    double abs_tol) {
  const std::size_t d = y0.size();
  double d0 = 0, d1 = 0;
  for (std::size_t i = 0; i < d; ++i) {
    double sc = abs_tol + rel_tol * std::abs(y0[i]);
    d0 = std::max(d0, std::abs(y0[i]) / sc);
    d1 = std::max(d1, std::abs(f0[i]) / sc);
  }
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  std::vector<double> y1(d);
  for (std::size_t i = 0; i < d; ++i) y1[i] = y0[i] + h0 * f0[i];
  double d2 = 0;
  try {
    std::vector<double> f1 = sys.eval(y1);
    for (std::size_t i = 0; i < d; ++i) {
      double sc = abs_tol + rel_tol * std::abs(y0[i]);
      d2 = std::max(d2, std::abs(f1[i] - f0[i]) / sc / h0);
    }
  } catch (const Error&) {
    return std::min(h0 * 1e-3, span);
  }
  double m = std::max(d1, d2);
  double h1 = m < 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
  return std::min({100 * h0, h1, span});
}

}  // namespace

std::vector<double> Trajectory::eval(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times.begin());
  if (hi == 0) hi = 1;
  if (hi >= times.size()) hi = times.size() - 1;
  std::size_t lo = hi - 1;
  double h = times[hi] - times[lo];
  double s = (t - times[lo]) / h;
  // cubic Hermite on (y, f) at the two knots
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  std::vector<double> out(states[lo].size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = h00 * states[lo][i] + h * h10 * derivs[lo][i] + h01 * states[hi][i] +
             h * h11 * derivs[hi][i];
  return out;
}

Trajectory integrate(const NumericSystem& sys, const std::vector<double>& x0,
                     double t_begin, double t_end, double rel_tol, double abs_tol) {
  if (rel_tol < 1e-12)
    throw Error(ErrorKind::Input, "tolerance", "rel_tol below the 1e-12 floor");
  if (!(t_end > t_begin))
    throw Error(ErrorKind::Input, "time-span", "t_end must exceed t_begin");

  Trajectory traj;
  double t = t_begin;
  std::vector<double> y = x0;
  std::vector<double> f = sys.eval(y);
  traj.times.push_back(t);
  traj.states.push_back(y);
  traj.derivs.push_back(f);

  double h = initial_step(sys, y, f, t_end - t_begin, rel_tol, abs_tol);
  double err_prev = 1.0;
  double facmax = 5.0;
  auto underflow_check = [&](double step) {
    if (step < 16 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
      throw Error(ErrorKind::Numeric, "step-underflow",
                  "step size underflow: the fast system is too stiff for this "
                  "budget; use a smaller epsilon range or a tighter manifold "
                  "initialization");
  };
  while (t < t_end) {
    h = std::min(h, t_end - t);
    underflow_check(h);
    StepResult st;
    try {
      st = dp_step(sys, t, y, f, h, rel_tol, abs_tol);
    } catch (const Error& e) {
      if (e.code() != "pole") throw;
      h *= 0.5;  // a stage overshot into a pole; retry shorter
      facmax = 1.0;
      continue;
    }
    if (!std::isfinite(st.err)) {  // overflow mid-step; retreat hard
      h *= 0.1;
      facmax = 1.0;
      continue;
    }
    if (st.err <= 1.0) {
      t += h;
      y = std::move(st.y);
      f = std::move(st.f);
      traj.times.push_back(t);
      traj.states.push_back(y);
      traj.derivs.push_back(f);
      // PI controller, Hairer II.4: err^(-0.7/5) with err_prev^(0.4/5) damping
      double fac = 0.9 * std::pow(std::max(st.err, 1e-10), -0.14) *
                   std::pow(std::max(err_prev, 1e-10), 0.08);
      h *= std::clamp(fac, 0.2, facmax);
      err_prev = std::max(st.err, 1e-10);
      facmax = 5.0;
    } else {
      h *= std::clamp(0.9 * std::pow(st.err, -0.2), 0.2, 1.0);
      facmax = 1.0;
    }
  }
  return traj;
}

std::vector<double> integrate_fixed(const NumericSystem& sys, const std::vector<double>& x0,
                                    double t_begin, double t_end, int n_steps) {
  double h = (t_end - t_begin) / n_steps;
  std::vector<double> y = x0;
  std::vector<double> f = sys.eval(y);
  double t = t_begin;
  for (int s = 0; s < n_steps; ++s) {
    StepResult st = dp_step(sys, t, y, f, h, 1.0, 1.0);
    y = std::move(st.y);
    f = std::move(st.f);
    t += h;
  }
  return y;
}

// ---------------------------------------------------------------------------

std::pair<double, std::map<std::string, double>> eig_sample(
    const RFMatrix& mat, const std::map<Sym, std::pair<double, double>>& box, int n,
    std::uint64_t seed) {
  if (mat.rows() != mat.cols())
    throw Error(ErrorKind::Input, "not-square", "eigenvalue sampling needs a square matrix");
  std::vector<Sym> syms;
  for (int i = 0; i < mat.rows(); ++i)
    for (int j = 0; j < mat.cols(); ++j)
      for (const Sym& s : mat.at(i, j).symbols())
        if (std::find(syms.begin(), syms.end(), s) == syms.end()) syms.push_back(s);
  for (const Sym& s : syms)
    if (!box.count(s))
      throw Error(ErrorKind::Input, "unbound-symbol",
                  "symbol " + s.name + " has no sampling box");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int p = mat.rows();
  double best = -std::numeric_limits<double>::infinity();
  std::map<std::string, double> worst;
  int samples = 0, draws = 0;
  const int draw_limit = 10 * std::max(n, 1);
  while (samples < n) {
    if (++draws > draw_limit)
      throw Error(ErrorKind::Numeric, "pole-sampling",
                  "sampling keeps hitting poles; shrink or move the boxes");
    Bindings pt;
    std::map<std::string, double> named;
    for (const Sym& s : syms) {
      auto [lo, hi] = box.at(s);
      double v = lo + (hi - lo) * unit(rng);
      pt.emplace(s, v);
      named.emplace(s.name, v);
    }
    Eigen::MatrixXd num(p, p);
    bool pole = false;
    for (int i = 0; i < p && !pole; ++i)
      for (int j = 0; j < p; ++j) {
        try {
          num(i, j) = mat.at(i, j).eval(pt);
        } catch (const Error&) {
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
    if (re > best) {
      best = re;
      worst = std::move(named);
    }
    ++samples;
  }
  return {best, worst};
}

// ---------------------------------------------------------------------------

std::vector<Sym> full_state(const PartitionedSystem& psys) {
  std::vector<Sym> state = psys.xsyms;
  state.insert(state.end(), psys.zsyms.begin(), psys.zsyms.end());
  return state;
}

std::vector<RatFn> full_rhs(const PartitionedSystem& psys) {
  const crn::ReactionNetwork& net = psys.net;
  // species index -> its state symbol and position in the x-then-z order
  std::vector<int> pos(net.species.size(), -1);
  std::vector<Sym> sym(net.species.size());
  for (std::size_t i = 0; i < psys.xspecies.size(); ++i) {
    pos[static_cast<std::size_t>(psys.xspecies[i])] = static_cast<int>(i);
    sym[static_cast<std::size_t>(psys.xspecies[i])] = psys.xsyms[i];
  }
  for (std::size_t i = 0; i < psys.zspecies.size(); ++i) {
    pos[static_cast<std::size_t>(psys.zspecies[i])] = static_cast<int>(psys.n) + static_cast<int>(i);
    sym[static_cast<std::size_t>(psys.zspecies[i])] = psys.zsyms[i];
  }

  std::vector<RatFn> out(net.species.size());
  for (const crn::Reaction& r : net.reactions) {
    RatFn rate = RatFn::var(r.rate);
    for (std::size_t s = 0; s < net.species.size(); ++s)
      if (r.reactant[s] > 0)
        rate *= RatFn(symalg::Poly::var(sym[s], r.reactant[s]), symalg::Poly::constant(1));
    for (std::size_t s = 0; s < net.species.size(); ++s) {
      long d = r.product[s] - r.reactant[s];
      if (d != 0) out[static_cast<std::size_t>(pos[s])] += RatFn::constant(d) * rate;
    }
  }
  return out;
}

Bindings parameter_values(const crn::ReactionNetwork& net, const ConservationBasis& basis,
                          const reduction::TFPVCandidate& cand, const Bindings& values,
                          double eps) {
  auto lookup = [&](const Sym& s) {
    auto it = values.find(s);
    return it == values.end() ? 0.0 : it->second;
  };
  Bindings out;
  for (const crn::Reaction& r : net.reactions) {
    std::size_t idx = static_cast<std::size_t>(r.rate.index);
    double v = cand.kappa_signs[idx] == reduction::Sign::Positive
                   ? lookup(r.rate)
                   : eps * lookup(crn::rate_dir(r.rate));
    out.emplace(r.rate, v);
  }
  for (std::size_t i = 0; i < basis.alpha.size(); ++i) {
    double v = cand.alpha_signs[i] == reduction::Sign::Positive
                   ? lookup(basis.alpha[i])
                   : eps * lookup(crn::alpha_dir(basis.alpha[i]));
    out.emplace(basis.alpha[i], v);
  }
  return out;
}

std::vector<double> manifold_state(const PartitionedSystem& psys,
                                   const ConservationBasis& basis,
                                   const std::vector<RatFn>& w, const std::vector<double>& x0,
                                   const Bindings& bindings) {
  Bindings pt = bindings;
  for (std::size_t i = 0; i < psys.xsyms.size(); ++i) pt[psys.xsyms[i]] = x0[i];
  std::vector<double> state(static_cast<std::size_t>(psys.n + psys.P), 0.0);
  for (std::size_t i = 0; i < x0.size(); ++i) state[i] = x0[i];
  for (std::size_t i = 0; i < w.size(); ++i)
    state[static_cast<std::size_t>(psys.n + basis.retained[i])] = -w[i].eval(pt);
  for (int r = 0; r < basis.k; ++r) {
    auto it = bindings.find(basis.alpha[static_cast<std::size_t>(r)]);
    double total = it == bindings.end() ? 0.0 : it->second;
    int elim = basis.eliminated[static_cast<std::size_t>(r)];
    for (int j = 0; j < psys.P; ++j)
      if (j != elim && basis.W[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] != 0)
        total -= state[static_cast<std::size_t>(psys.n + j)];
    state[static_cast<std::size_t>(psys.n + elim)] = total;
  }
  return state;
}

ConvergenceReport tikhonov_experiment(const PartitionedSystem& psys,
                                      const ConservationBasis& basis,
                                      const reduction::ReductionOutput& red,
                                      const reduction::TFPVCandidate& cand,
                                      const Bindings& values, const ExperimentConfig& cfg) {
  std::vector<double> eps = cfg.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  if (eps.empty() || eps.back() <= 0)
    throw Error(ErrorKind::Input, "epsilons", "epsilon values must be positive");

  const double T = cfg.T;
  const double t0 = cfg.t0 < 0 ? 0.05 * T : cfg.t0;
  const int grid = std::max(cfg.grid_points, 2);

  ConvergenceReport rep;
  rep.epsilons = eps;
  rep.seed = cfg.seed;
  NumericSystem reduced = compile(red.tf_rhs, psys.xsyms, values);
  rep.trivial_reduction = reduced.is_zero();
  Trajectory red_traj = integrate(reduced, cfg.x0, 0.0, T, cfg.rel_tol, cfg.abs_tol);
  if (cfg.keep_trajectories) rep.reduced_trajectory = red_traj;

  std::vector<RatFn> frhs = full_rhs(psys);
  std::vector<Sym> fstate = full_state(psys);

  auto run_one = [&](std::size_t idx) {
    double e = eps[idx];
    Bindings pv = parameter_values(psys.net, basis, cand, values, e);
    Bindings manifold_bind = values;
    for (const Sym& a : basis.alpha) manifold_bind[a] = pv.at(a);
    std::vector<double> y0 = manifold_state(psys, basis, red.w, cfg.x0, manifold_bind);
    if (cfg.init_mode == InitMode::NearManifold && psys.P > 0) {
      double wnorm = 0;
      for (int j = 0; j < psys.P; ++j) {
        double zj = y0[static_cast<std::size_t>(psys.n + j)];
        wnorm += zj * zj;
      }
      double delta = cfg.delta > 0 ? cfg.delta : 0.1 * (1 + std::sqrt(wnorm));
      std::mt19937_64 rng(cfg.seed + idx);
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> dir(static_cast<std::size_t>(basis.p));
      double norm = 0;
      for (double& d : dir) {
        d = gauss(rng);
        norm += d * d;
      }
      norm = std::sqrt(std::max(norm, 1e-300));
      for (int i = 0; i < basis.p; ++i)
        y0[static_cast<std::size_t>(psys.n + basis.retained[static_cast<std::size_t>(i)])] +=
            delta * dir[static_cast<std::size_t>(i)] / norm;
      // rebalance the eliminated coordinates so the conserved totals stay exact
      for (int r = 0; r < basis.k; ++r) {
        double total = manifold_bind.at(basis.alpha[static_cast<std::size_t>(r)]);
        int elim = basis.eliminated[static_cast<std::size_t>(r)];
        for (int j = 0; j < psys.P; ++j)
          if (j != elim && basis.W[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] != 0)
            total -= y0[static_cast<std::size_t>(psys.n + j)];
        y0[static_cast<std::size_t>(psys.n + elim)] = total;
      }
    }
    NumericSystem full = compile(frhs, fstate, pv);
    Trajectory ftraj;
    try {
      ftraj = integrate(full, y0, 0.0, T / e, cfg.rel_tol, cfg.abs_tol);
    } catch (const Error& err) {
      throw Error(err.kind(), err.code(),
                  std::string(err.what()) + " (eps = " + std::to_string(e) + ")");
    }
    double sup = 0;
    for (int g = 0; g < grid; ++g) {
      double tau = t0 + (T - t0) * g / (grid - 1);
      std::vector<double> xf = ftraj.eval(tau / e);
      std::vector<double> xr = red_traj.eval(tau);
      for (int i = 0; i < psys.n; ++i)
        sup = std::max(sup, std::abs(xf[static_cast<std::size_t>(i)] -
                                     xr[static_cast<std::size_t>(i)]));
    }
    if (!cfg.keep_trajectories) ftraj = Trajectory{};
    return std::make_pair(sup, std::move(ftraj));
  };

  std::vector<std::future<std::pair<double, Trajectory>>> jobs;
  for (std::size_t i = 0; i < eps.size(); ++i)
    jobs.push_back(std::async(std::launch::async, run_one, i));
  for (auto& j : jobs) {
    auto [sup, traj] = j.get();
    rep.sup_errors.push_back(sup);
    if (cfg.keep_trajectories) rep.full_trajectories.push_back(std::move(traj));
  }
  for (std::size_t i = 1; i < rep.sup_errors.size(); ++i)
    rep.ratios.push_back(rep.sup_errors[i] / rep.sup_errors[i - 1]);
  return rep;
}

}  // namespace crnred::numerics
