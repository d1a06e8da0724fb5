#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crnreduce/numerics.hpp"

#include <cmath>
#include <string>

using namespace crnred;
using namespace crnred::crn;
using namespace crnred::numerics;
using reduction::ReductionOutput;
using reduction::Sign;
using reduction::TFPVCandidate;
using symalg::Poly;
using symalg::RatFn;
using symalg::RFMatrix;
using symalg::Sym;

namespace {

const char* MM = R"(
species: E S C P
reactions:
  E + S <-> C   ; k1, k2
  C -> E + P    ; k3
)";

const char* PTM2 = R"(
species: E S C1 C2 P
Z: E C1 C2
reactions:
  E + S <-> C1   ; k1, k2
  C1 <-> C2      ; g12, g21
  C2 -> E + P    ; k3
)";

struct Setup {
  PartitionedSystem ps;
  ConservationBasis cb;
  ABBlocks ab;
};

Setup setup(const std::string& text, std::vector<std::string> znames = {}) {
  ParsedInput in = parse_network(text);
  std::vector<int> z;
  if (znames.empty() && in.z) z = *in.z;
  for (const std::string& name : znames) z.push_back(in.network.species_index(name));
  Setup s;
  s.ps = partition_system(in.network, z);
  s.cb = conservation_basis(s.ps);
  s.ab = ab_blocks(s.ps, s.cb);
  return s;
}

Sym rsym(const Setup& s, const std::string& name) {
  for (const Reaction& r : s.ps.net.reactions)
    if (r.rate.name == name) return r.rate;
  REQUIRE(false);
  return Sym();
}

TFPVCandidate cand(const std::string& ks, const std::string& as = "") {
  TFPVCandidate c;
  for (char ch : ks) c.kappa_signs.push_back(ch == '+' ? Sign::Positive : Sign::Zero);
  for (char ch : as) c.alpha_signs.push_back(ch == '+' ? Sign::Positive : Sign::Zero);
  return c;
}

// a single abstract state variable for scalar ODE tests
Sym scalar_sym() { return x_sym(0, "y"); }

NumericSystem scalar_system(const RatFn& rhs) {
  return compile({rhs}, {scalar_sym()}, {});
}

}  // namespace

TEST_CASE("compile and evaluate") {
  Sym y = scalar_sym();

  // zero field
  NumericSystem zero = compile({RatFn(), RatFn()}, {y, x_sym(1, "w")}, {});
  CHECK(zero.eval({3.0, -2.0}) == std::vector<double>{0.0, 0.0});
  CHECK(zero.is_zero());

  // full mass-action field of the open MM network, all species slow
  Setup s = setup(MM);
  std::vector<RatFn> rhs = full_rhs(s.ps);
  Bindings kb{{rsym(s, "k1"), 1.0}, {rsym(s, "k2"), 1.0}, {rsym(s, "k3"), 1.0}};
  NumericSystem sys = compile(rhs, full_state(s.ps), kb);
  CHECK_FALSE(sys.is_zero());
  // state order is declaration order (E, S, C, P); at (1,1,0,0) only E+S->C fires
  std::vector<double> d = sys.eval({1.0, 1.0, 0.0, 0.0});
  CHECK(d[0] == doctest::Approx(-1.0));
  CHECK(d[1] == doctest::Approx(-1.0));
  CHECK(d[2] == doctest::Approx(1.0));
  CHECK(d[3] == doctest::Approx(0.0));
  // with C present the reverse and product channels contribute
  d = sys.eval({1.0, 1.0, 2.0, 0.0});
  CHECK(d[0] == doctest::Approx(-1.0 + 2.0 + 2.0));
  CHECK(d[2] == doctest::Approx(1.0 - 4.0));
  CHECK(d[3] == doctest::Approx(2.0));

  // 1/y has a pole at 0
  NumericSystem inv = scalar_system(RatFn(Poly::constant(1), Poly::var(y)));
  CHECK(inv.eval({2.0})[0] == doctest::Approx(0.5));
  CHECK_THROWS_WITH_AS(inv.eval({0.0}), "pole: denominator vanishes along the trajectory",
                       Error);

  // unbound symbol
  CHECK_THROWS_WITH_AS(compile({RatFn::var(rsym(s, "k1"))}, {y}, {}),
                       "unbound-symbol: symbol k1 is neither a state variable nor bound",
                       Error);
}

TEST_CASE("integrator on scalar fields") {
  Sym y = scalar_sym();
  NumericSystem decay = scalar_system(-RatFn::var(y));

  Trajectory tr = integrate(decay, {1.0}, 0.0, 1.0, 1e-10, 1e-12);
  CHECK(std::abs(tr.states.back()[0] - std::exp(-1.0)) < 1e-8);
  for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);

  // dense output: exact at the knots, accurate in between
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    CHECK(std::abs(tr.eval(tr.times[i])[0] - tr.states[i][0]) < 1e-12);
  for (double t : {0.123, 0.5, 0.987})
    CHECK(std::abs(tr.eval(t)[0] - std::exp(-t)) < 1e-6);

  // constant field
  NumericSystem still = scalar_system(RatFn());
  tr = integrate(still, {4.0}, 0.0, 5.0);
  for (const std::vector<double>& st : tr.states) CHECK(st[0] == 4.0);

  CHECK_THROWS_WITH_AS(integrate(decay, {1.0}, 0.0, 1.0, 1e-13),
                       "tolerance: rel_tol below the 1e-12 floor", Error);

  // y' = y^2 blows up at t = 1; the step size collapses before that
  NumericSystem blowup = scalar_system(RatFn::from_poly(Poly::var(y, 2)));
  CHECK_THROWS_AS(integrate(blowup, {1.0}, 0.0, 2.0), Error);
  try {
    integrate(blowup, {1.0}, 0.0, 2.0);
  } catch (const Error& e) {
    CHECK(e.code() == "step-underflow");
    CHECK(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("fixed-step convergence order") {
  Sym y = scalar_sym();
  NumericSystem decay = scalar_system(-RatFn::var(y));
  double exact = std::exp(-2.0);
  double e16 = std::abs(integrate_fixed(decay, {1.0}, 0.0, 2.0, 16)[0] - exact);
  double e32 = std::abs(integrate_fixed(decay, {1.0}, 0.0, 2.0, 32)[0] - exact);
  double order = std::log2(e16 / e32);
  CHECK(order > 3.8);
  CHECK(order < 5.2);
}

TEST_CASE("first integrals are conserved along trajectories") {
  for (const char* text : {MM, PTM2}) {
    // all species slow: the state is the concentration vector itself
    ParsedInput in = parse_network(text);
    Setup flat;
    flat.ps = partition_system(in.network, {});
    std::vector<RatFn> rhs = full_rhs(flat.ps);
    Bindings kb;
    for (const Reaction& r : flat.ps.net.reactions) kb.emplace(r.rate, 1.3);
    NumericSystem sys = compile(rhs, full_state(flat.ps), kb);

    // left kernel of the stoichiometric matrix
    IntMat N = stoich_matrix(flat.ps.net);
    RFMatrix nm(static_cast<int>(N.size()), static_cast<int>(N[0].size()));
    for (int i = 0; i < nm.rows(); ++i)
      for (int j = 0; j < nm.cols(); ++j)
        nm.at(i, j) = RatFn::constant(static_cast<long>(N[static_cast<std::size_t>(i)]
                                                         [static_cast<std::size_t>(j)]));
    auto kernel = nm.left_nullspace();
    REQUIRE(!kernel.empty());

    std::vector<double> x0(flat.ps.net.species.size());
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = 0.3 + 0.2 * static_cast<double>(i);
    Trajectory tr = integrate(sys, x0, 0.0, 8.0, 1e-9, 1e-11);

    for (const auto& vec : kernel) {
      double c0 = 0;
      for (std::size_t i = 0; i < x0.size(); ++i)
        c0 += vec[i].eval({}) * x0[i];
      for (const std::vector<double>& st : tr.states) {
        double c = 0;
        for (std::size_t i = 0; i < st.size(); ++i) c += vec[i].eval({}) * st[i];
        CHECK(std::abs(c - c0) <= 1e-7 * std::max(1.0, std::abs(c0)));
      }
    }
  }
}

TEST_CASE("eigenvalue sampling") {
  RFMatrix m(1, 1);
  m.at(0, 0) = RatFn::constant(-1);
  auto [re, pt] = eig_sample(m, {}, 10, 1);
  CHECK(re == doctest::Approx(-1.0));
  CHECK(pt.empty());

  // rotation-like compartmental block: eigenvalues -1 +- 5i
  RFMatrix rot(2, 2);
  rot.at(0, 0) = RatFn::constant(-1);
  rot.at(0, 1) = RatFn::constant(-5);
  rot.at(1, 0) = RatFn::constant(5);
  rot.at(1, 1) = RatFn::constant(-1);
  CHECK(eig_sample(rot, {}, 5, 7).first == doctest::Approx(-1.0));

  // MM with Z = {E, C}: Delta = B0 = -k1 xS - k2 - k3, monotone in xS
  Setup s = setup(MM, {"E", "C"});
  TFPVCandidate c = reduction::canonical_qss_candidate(s.ps, s.cb);
  ReductionOutput red = reduction::compute_tf_reduction(s.ps, s.cb, s.ab, c);
  REQUIRE(red.Delta.rows() == 1);
  std::map<Sym, std::pair<double, double>> box;
  for (const Sym& sym : red.Delta.at(0, 0).symbols())
    box[sym] = sym.kind == symalg::SymKind::XConc ? std::pair{0.0, 10.0} : std::pair{1.0, 1.0};
  auto [worst, wpt] = eig_sample(red.Delta, box, 2000, 42);
  CHECK(worst <= -2.0);
  CHECK(worst > -2.1);
  CHECK(wpt.count("x_S") == 1);

  // deterministic in the seed
  CHECK(eig_sample(red.Delta, box, 50, 9).first == eig_sample(red.Delta, box, 50, 9).first);

  CHECK_THROWS_WITH_AS(eig_sample(red.Delta, {}, 5, 0),
                       doctest::Contains("no sampling box"), Error);
  RFMatrix rect(1, 2);
  CHECK_THROWS_WITH_AS(eig_sample(rect, {}, 5, 0), doctest::Contains("square"), Error);
}

TEST_CASE("parameter curve and manifold initialization") {
  Setup s = setup(MM, {"E", "C"});
  TFPVCandidate c = reduction::canonical_qss_candidate(s.ps, s.cb);
  REQUIRE(s.cb.k == 1);
  ReductionOutput red = reduction::compute_tf_reduction(s.ps, s.cb, s.ab, c);

  Bindings values{{rsym(s, "k1"), 1.0},
                  {rsym(s, "k2"), 2.0},
                  {rsym(s, "k3"), 3.0},
                  {alpha_dir(s.cb.alpha[0]), 1.5}};
  Bindings pv = parameter_values(s.ps.net, s.cb, c, values, 0.01);
  CHECK(pv.at(rsym(s, "k1")) == 1.0);
  CHECK(pv.at(rsym(s, "k2")) == 2.0);
  CHECK(pv.at(rsym(s, "k3")) == 3.0);
  CHECK(pv.at(s.cb.alpha[0]) == doctest::Approx(0.015));

  // alpha-hat = 0 forces w = 0: the manifold has no free enzyme and the
  // eliminated coordinate carries the whole conserved total
  for (const RatFn& f : red.w) CHECK(f.is_zero());
  Bindings mb = values;
  mb[s.cb.alpha[0]] = 0.015;
  std::vector<double> st = manifold_state(s.ps, s.cb, red.w, {1.0, 0.0}, mb);
  REQUIRE(st.size() == 4);
  CHECK(st[0] == 1.0);  // x_S
  CHECK(st[1] == 0.0);  // x_P
  // z order (E, C), retained first by declaration, eliminated balances
  double ztotal = st[2] + st[3];
  CHECK(ztotal == doctest::Approx(0.015));
  CHECK(st[2] == 0.0);

  // at eps = 0 the manifold point is stationary for the full system
  Bindings pv0 = parameter_values(s.ps.net, s.cb, c, values, 0.0);
  NumericSystem full = compile(full_rhs(s.ps), full_state(s.ps), pv0);
  Bindings mb0 = values;
  mb0[s.cb.alpha[0]] = 0.0;
  std::vector<double> st0 = manifold_state(s.ps, s.cb, red.w, {1.0, 0.0}, mb0);
  for (double d : full.eval(st0)) CHECK(std::abs(d) < 1e-10);
  Trajectory frozen = integrate(full, st0, 0.0, 10.0);
  for (const std::vector<double>& knot : frozen.states) {
    CHECK(std::abs(knot[0] - 1.0) < 1e-9);
    CHECK(std::abs(knot[1]) < 1e-9);
  }
}

TEST_CASE("Tikhonov convergence experiment") {
  Setup s = setup(MM, {"E", "C"});
  TFPVCandidate c = reduction::canonical_qss_candidate(s.ps, s.cb);
  ReductionOutput red = reduction::compute_tf_reduction(s.ps, s.cb, s.ab, c);

  Bindings values{{rsym(s, "k1"), 1.0},
                  {rsym(s, "k2"), 1.0},
                  {rsym(s, "k3"), 1.0},
                  {alpha_dir(s.cb.alpha[0]), 1.0}};
  ExperimentConfig cfg;
  cfg.epsilons = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  cfg.T = 10.0;
  cfg.t0 = 0.5;
  cfg.x0 = {1.0, 0.0};
  cfg.seed = 11;

  ConvergenceReport rep = tikhonov_experiment(s.ps, s.cb, red, c, values, cfg);
  REQUIRE(rep.sup_errors.size() == 4);
  CHECK_FALSE(rep.trivial_reduction);
  for (std::size_t i = 1; i < rep.sup_errors.size(); ++i) {
    CHECK(rep.sup_errors[i] < rep.sup_errors[i - 1]);
    CHECK(rep.ratios[i - 1] == doctest::Approx(rep.sup_errors[i] / rep.sup_errors[i - 1]));
  }
  CHECK(rep.sup_errors.back() / rep.sup_errors.front() < 0.3);
  CHECK(rep.sup_errors.front() < 0.05);  // already close at eps = 1e-2

  // deterministic: a rerun reproduces the numbers exactly
  ConvergenceReport rep2 = tikhonov_experiment(s.ps, s.cb, red, c, values, cfg);
  CHECK(rep2.sup_errors == rep.sup_errors);

  // the sup error is a property of the systems, not the integrator tolerance
  ExperimentConfig tight = cfg;
  tight.epsilons = {1e-2};
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  ExperimentConfig loose = tight;
  loose.rel_tol = 1e-8;
  loose.abs_tol = 1e-10;
  double e_tight = tikhonov_experiment(s.ps, s.cb, red, c, values, tight).sup_errors[0];
  double e_loose = tikhonov_experiment(s.ps, s.cb, red, c, values, loose).sup_errors[0];
  CHECK(std::abs(e_tight - e_loose) < 1e-6);
  CHECK(tikhonov_experiment(s.ps, s.cb, red, c, values, tight).ratios.empty());

  // near-manifold start converges as well
  ExperimentConfig near = cfg;
  near.init_mode = InitMode::NearManifold;
  near.epsilons = {1e-2, 2.5e-3};
  near.delta = 1e-3;  // the z-offset leaves an eps-independent O(delta) mark on x
  ConvergenceReport nrep = tikhonov_experiment(s.ps, s.cb, red, c, values, near);
  CHECK(nrep.sup_errors[1] < nrep.sup_errors[0]);

  CHECK_THROWS_WITH_AS(
      tikhonov_experiment(s.ps, s.cb, red, c, values, ExperimentConfig{{0.0, -1.0}}),
      doctest::Contains("positive"), Error);
}

TEST_CASE("trivial reduction is flagged") {
  // MM with Z = {S}, pattern (+,0,0) and kappa3* = 0: the reduced system
  // degenerates to x' = 0
  Setup s = setup(MM, {"S"});
  TFPVCandidate c = cand("+00");
  ReductionOutput red = reduction::compute_tf_reduction(s.ps, s.cb, s.ab, c);
  Bindings values{{rsym(s, "k1"), 1.0},
                  {rate_dir(rsym(s, "k2")), 1.0},
                  {rate_dir(rsym(s, "k3")), 0.0}};
  ExperimentConfig cfg;
  cfg.epsilons = {1e-2};
  cfg.T = 5.0;
  cfg.x0 = {1.0, 0.5, 0.2};  // declaration order of the slow species (E, C, P)
  ConvergenceReport rep = tikhonov_experiment(s.ps, s.cb, red, c, values, cfg);
  CHECK(rep.trivial_reduction);
  REQUIRE(rep.sup_errors.size() == 1);
  CHECK(rep.sup_errors[0] < 0.2);

  // a nonzero kappa3* direction makes the same pattern non-trivial
  values[rate_dir(rsym(s, "k3"))] = 1.0;
  CHECK_FALSE(tikhonov_experiment(s.ps, s.cb, red, c, values, cfg).trivial_reduction);
}
