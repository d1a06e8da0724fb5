#include "crnreduce/symalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crnred::symalg {

// ---------------------------------------------------------------------------
// Monomial

int Monomial::degree() const {
  int d = 0;
  for (const auto& [s, e] : factors) d += e;
  return d;
}

int Monomial::degree_in(const Sym& s) const {
  for (const auto& [t, e] : factors)
    if (t == s) return e;
  return 0;
}

bool Monomial::divides(const Monomial& other) const {
  auto it = other.factors.begin();
  for (const auto& [s, e] : factors) {
    while (it != other.factors.end() && it->first < s) ++it;
    if (it == other.factors.end() || !(it->first == s) || it->second < e) return false;
  }
  return true;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  auto a = factors.begin(), b = other.factors.begin();
  while (a != factors.end() || b != other.factors.end()) {
    if (b == other.factors.end() || (a != factors.end() && a->first < b->first)) {
      out.factors.push_back(*a++);
    } else if (a == factors.end() || b->first < a->first) {
      out.factors.push_back(*b++);
    } else {
      out.factors.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  return out;
}

Monomial Monomial::divide(const Monomial& other) const {
  Monomial out;
  auto b = other.factors.begin();
  for (const auto& [s, e] : factors) {
    int sub = 0;
    while (b != other.factors.end() && b->first < s) ++b;
    if (b != other.factors.end() && b->first == s) sub = b->second;
    int rem = e - sub;
    if (rem < 0) throw Error(ErrorKind::Math, "internal", "inexact monomial division");
    if (rem > 0) out.factors.emplace_back(s, rem);
  }
  return out;
}

bool MonoLess::operator()(const Monomial& a, const Monomial& b) const {
  int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // lexicographic on the exponent vectors over the global symbol order
  auto ia = a.factors.begin(), ib = b.factors.begin();
  while (ia != a.factors.end() && ib != b.factors.end()) {
    if (!(ia->first == ib->first)) {
      // the smaller symbol with a positive exponent decides
      return ib->first < ia->first;
    }
    if (ia->second != ib->second) return ia->second < ib->second;
    ++ia;
    ++ib;
  }
  return ia == a.factors.end() && ib != b.factors.end();
}

// ---------------------------------------------------------------------------
// Poly

Poly Poly::constant(const Rational& c) {
  Poly p;
  if (c != 0) p.terms_.emplace(Monomial{}, c);
  return p;
}

Poly Poly::var(const Sym& s, int exp) {
  Poly p;
  if (exp < 0) throw Error(ErrorKind::Input, "bad-exponent", "negative exponent");
  Monomial m;
  if (exp > 0) m.factors.emplace_back(s, exp);
  p.terms_.emplace(std::move(m), Rational(1));
  return p;
}

bool Poly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Rational Poly::constant_value() const {
  if (terms_.empty()) return Rational(0);
  if (!is_constant()) throw Error(ErrorKind::Math, "internal", "non-constant polynomial");
  return terms_.begin()->second;
}

int Poly::total_degree() const {
  if (terms_.empty()) return 0;
  return terms_.rbegin()->first.degree();
}

int Poly::degree_in(const Sym& s) const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree_in(s));
  return d;
}

std::vector<Sym> Poly::symbols() const {
  std::vector<Sym> out;
  for (const auto& [m, c] : terms_)
    for (const auto& [s, e] : m.factors)
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  std::sort(out.begin(), out.end());
  return out;
}

void Poly::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly Poly::operator-() const {
  Poly out;
  for (const auto& [m, c] : terms_) out.terms_.emplace(m, -c);
  return out;
}

Poly Poly::operator+(const Poly& o) const {
  Poly out = *this;
  out += o;
  return out;
}

Poly& Poly::operator+=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Poly Poly::operator-(const Poly& o) const {
  Poly out = *this;
  out -= o;
  return out;
}

Poly& Poly::operator-=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Poly Poly::operator*(const Poly& o) const {
  Poly out;
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) out.add_term(ma * mb, ca * cb);
  return out;
}

Poly Poly::operator*(const Rational& c) const {
  Poly out;
  if (c == 0) return out;
  for (const auto& [m, k] : terms_) out.terms_.emplace(m, k * c);
  return out;
}

Poly Poly::pow(int e) const {
  if (e < 0) throw Error(ErrorKind::Input, "bad-exponent", "negative exponent");
  Poly acc = Poly::constant(1);
  Poly base = *this;
  while (e > 0) {
    if (e & 1) acc = acc * base;
    base = base * base;
    e >>= 1;
  }
  return acc;
}

Poly Poly::diff(const Sym& s) const {
  Poly out;
  for (const auto& [m, c] : terms_) {
    int e = m.degree_in(s);
    if (e == 0) continue;
    Monomial dm;
    for (const auto& [t, k] : m.factors) {
      int nk = (t == s) ? k - 1 : k;
      if (nk > 0) dm.factors.emplace_back(t, nk);
    }
    out.add_term(dm, c * e);
  }
  return out;
}

double Poly::eval(const std::unordered_map<Sym, double, SymHash>& point) const {
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = static_cast<double>(c);
    for (const auto& [s, e] : m.factors) {
      auto it = point.find(s);
      if (it == point.end())
        throw Error(ErrorKind::Input, "unbound-symbol", "symbol " + s.name + " not bound");
      t *= std::pow(it->second, e);
    }
    acc += t;
  }
  return acc;
}

const Monomial& Poly::leading_monomial() const {
  if (terms_.empty()) throw Error(ErrorKind::Math, "internal", "leading term of zero");
  return terms_.rbegin()->first;
}

const Rational& Poly::leading_coeff() const {
  if (terms_.empty()) throw Error(ErrorKind::Math, "internal", "leading term of zero");
  return terms_.rbegin()->second;
}

Rational Poly::content_signed() const {
  if (terms_.empty()) return Rational(1);
  Integer num_gcd = 0, den_lcm = 1;
  for (const auto& [m, c] : terms_) {
    Integer n = boost::multiprecision::abs(numerator(c));
    Integer d = denominator(c);
    num_gcd = boost::multiprecision::gcd(num_gcd, n);
    den_lcm = den_lcm / boost::multiprecision::gcd(den_lcm, d) * d;
  }
  Rational c(num_gcd, den_lcm);
  if (leading_coeff() < 0) c = -c;
  return c;
}

std::string rational_str(const Rational& c) {
  std::ostringstream os;
  os << numerator(c);
  if (denominator(c) != 1) os << "/" << denominator(c);
  return os.str();
}

std::string Poly::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    Rational mag = c < 0 ? Rational(-c) : c;
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    bool coeff_shown = false;
    if (mag != 1 || m.empty()) {
      os << rational_str(mag);
      coeff_shown = true;
    }
    bool firstf = true;
    for (const auto& [s, e] : m.factors) {
      if (coeff_shown || !firstf) os << "*";
      os << s.name;
      if (e > 1) os << "^" << e;
      firstf = false;
      coeff_shown = true;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Division and gcd

std::optional<Poly> try_divide(const Poly& a, const Poly& b) {
  if (b.is_zero()) return std::nullopt;
  if (b.term_count() == 1) {
    const Monomial& mb = b.leading_monomial();
    Rational inv = Rational(1) / b.leading_coeff();
    Poly q;
    for (const auto& [m, c] : a.terms()) {
      if (!mb.divides(m)) return std::nullopt;
      q.add_term(m.divide(mb), c * inv);
    }
    return q;
  }
  Poly q;
  Poly r = a;
  const Monomial& lmb = b.leading_monomial();
  const Rational& lcb = b.leading_coeff();
  while (!r.is_zero()) {
    const Monomial& lmr = r.leading_monomial();
    if (!lmb.divides(lmr)) return std::nullopt;
    Monomial qm = lmr.divide(lmb);
    Rational qc = r.leading_coeff() / lcb;
    Poly t;
    t.add_term(qm, qc);
    q += t;
    r -= t * b;
  }
  return q;
}

Poly divide_exact(const Poly& a, const Poly& b) {
  auto q = try_divide(a, b);
  if (!q) throw Error(ErrorKind::Math, "internal", "inexact polynomial division");
  return *q;
}

namespace {

Poly make_primitive(const Poly& p) {
  if (p.is_zero()) return p;
  return p * (Rational(1) / p.content_signed());
}

// Dense coefficient list of p viewed as univariate in s (index = degree).
std::vector<Poly> to_univar(const Poly& p, const Sym& s) {
  std::vector<Poly> coeffs(static_cast<std::size_t>(p.degree_in(s)) + 1);
  for (const auto& [m, c] : p.terms()) {
    int e = m.degree_in(s);
    Monomial rest;
    for (const auto& [t, k] : m.factors)
      if (!(t == s)) rest.factors.emplace_back(t, k);
    coeffs[static_cast<std::size_t>(e)].add_term(rest, c);
  }
  while (coeffs.size() > 1 && coeffs.back().is_zero()) coeffs.pop_back();
  return coeffs;
}

Poly from_univar(const std::vector<Poly>& coeffs, const Sym& s) {
  Poly out;
  for (std::size_t e = 0; e < coeffs.size(); ++e)
    out += coeffs[e] * Poly::var(s, static_cast<int>(e));
  return out;
}

int udeg(const std::vector<Poly>& u) {
  for (int i = static_cast<int>(u.size()) - 1; i >= 0; --i)
    if (!u[static_cast<std::size_t>(i)].is_zero()) return i;
  return -1;
}

// Pseudo-remainder of a by b (both univariate in the main symbol with Poly
// coefficients); deg a >= deg b >= 0.
std::vector<Poly> upseudo_rem(std::vector<Poly> a, const std::vector<Poly>& b) {
  int db = udeg(b);
  const Poly& lcb = b[static_cast<std::size_t>(db)];
  int da = udeg(a);
  while (da >= db) {
    Poly lca = a[static_cast<std::size_t>(da)];
    for (int i = 0; i <= da; ++i) a[static_cast<std::size_t>(i)] *= lcb;
    for (int i = 0; i <= db; ++i)
      a[static_cast<std::size_t>(da - db + i)] -= lca * b[static_cast<std::size_t>(i)];
    int nd = -1;
    for (int i = da; i >= 0; --i)
      if (!a[static_cast<std::size_t>(i)].is_zero()) { nd = i; break; }
    da = nd;
    if (da < 0) break;
  }
  a.resize(static_cast<std::size_t>(std::max(da, 0)) + 1);
  if (da < 0) a.assign(1, Poly());
  return a;
}

// Primitive pseudo-remainder sequence; correct but slow, used as the
// fallback when the evaluation heuristic fails.
Poly prs_gcd(const Poly& a_in, const Poly& b_in) {
  Poly a = make_primitive(a_in), b = make_primitive(b_in);
  if (a.is_constant() || b.is_constant()) return Poly::constant(1);

  // main variable: greatest symbol present in either operand
  std::vector<Sym> syms = a.symbols();
  for (const Sym& s : b.symbols())
    if (std::find(syms.begin(), syms.end(), s) == syms.end()) syms.push_back(s);
  std::sort(syms.begin(), syms.end());
  const Sym main = syms.back();

  if (!a.depends_on(main)) {
    // gcd(a, cont(b)) since a is free of the main variable
    Poly cb;
    for (const Poly& c : to_univar(b, main)) cb = poly_gcd(cb, c);
    return poly_gcd(a, cb);
  }
  if (!b.depends_on(main)) {
    Poly ca;
    for (const Poly& c : to_univar(a, main)) ca = poly_gcd(ca, c);
    return poly_gcd(ca, b);
  }

  std::vector<Poly> ua = to_univar(a, main), ub = to_univar(b, main);
  Poly ca, cb;
  for (const Poly& c : ua) ca = poly_gcd(ca, c);
  for (const Poly& c : ub) cb = poly_gcd(cb, c);
  Poly cont = poly_gcd(ca, cb);
  Poly pa = divide_exact(a, ca), pb = divide_exact(b, cb);

  std::vector<Poly> fa = to_univar(pa, main), fb = to_univar(pb, main);
  if (udeg(fa) < udeg(fb)) std::swap(fa, fb);
  // primitive PRS
  while (true) {
    std::vector<Poly> r = upseudo_rem(fa, fb);
    if (udeg(r) < 0 || (r.size() == 1 && r[0].is_zero())) break;
    // primitive part of r
    Poly cr;
    for (const Poly& c : r) cr = poly_gcd(cr, c);
    Poly rp = divide_exact(from_univar(r, main), cr);
    fa = fb;
    fb = to_univar(rp, main);
  }
  Poly g = cont * from_univar(fb, main);
  return make_primitive(g);
}

// --- evaluation heuristic (GCDHEU) ------------------------------------------

Integer int_coeff(const Rational& c) {
  if (denominator(c) != 1)
    throw Error(ErrorKind::Math, "internal", "non-integer coefficient in heuristic gcd");
  return numerator(c);
}

Integer max_abs_coeff(const Poly& p) {
  Integer m = 0;
  for (const auto& [mono, c] : p.terms()) {
    Integer a = boost::multiprecision::abs(int_coeff(c));
    if (a > m) m = a;
  }
  return m;
}

Poly eval_at(const Poly& p, const Sym& s, const Integer& xi) {
  Poly out;
  for (const auto& [m, c] : p.terms()) {
    int e = m.degree_in(s);
    Monomial rest;
    for (const auto& [t, k] : m.factors)
      if (!(t == s)) rest.factors.emplace_back(t, k);
    Rational coeff = c;
    if (e > 0) coeff *= Rational(boost::multiprecision::pow(xi, static_cast<unsigned>(e)));
    out.add_term(rest, coeff);
  }
  return out;
}

// Balanced (symmetric) remainder in (-xi/2, xi/2].
Integer smod(const Integer& c, const Integer& xi) {
  Integer r = c % xi;
  if (r < 0) r += xi;
  if (2 * r > xi) r -= xi;
  return r;
}

Poly smod_poly(const Poly& p, const Integer& xi) {
  Poly out;
  for (const auto& [m, c] : p.terms()) out.add_term(m, Rational(smod(int_coeff(c), xi)));
  return out;
}

// Reinterpret the base-xi digits of g as coefficients of powers of s.
Poly digits_to_poly(Poly g, const Sym& s, const Integer& xi) {
  Poly out;
  Rational inv_xi = Rational(1, xi);
  int e = 0;
  while (!g.is_zero()) {
    Poly digit = smod_poly(g, xi);
    out += digit * Poly::var(s, e);
    g = (g - digit) * inv_xi;
    ++e;
    if (e > 4096) throw Error(ErrorKind::Math, "internal", "heuristic gcd digit overflow");
  }
  return out;
}

Integer eval_int(const Poly& p, const std::map<Sym, Integer>& pt) {
  Integer acc = 0;
  for (const auto& [m, c] : p.terms()) {
    Integer t = int_coeff(c);
    for (const auto& [s, e] : m.factors)
      t *= boost::multiprecision::pow(pt.at(s), static_cast<unsigned>(e));
    acc += t;
  }
  return acc;
}

// A nonconstant common factor survives evaluation, and at ~2^40-sized points
// its value is far above 2^20 barring massive cancellation. Two independent
// points with a small integer gcd therefore certify a trivial polynomial gcd;
// the points are fixed, so the outcome is deterministic.
bool screened_coprime(const Poly& a, const Poly& b, const std::vector<Sym>& vars) {
  const Integer small_bound = Integer(1) << 20;
  for (std::uint64_t salt : {0x9e3779b97f4a7c15ull, 0xbf58476d1ce4e5b9ull}) {
    std::map<Sym, Integer> pt;
    for (const Sym& s : vars) {
      std::uint64_t h = salt ^ (static_cast<std::uint64_t>(s.kind) << 40) ^
                        static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.index));
      h *= 0xd6e8feb86659fd93ull;
      h ^= h >> 29;
      h *= 0xd6e8feb86659fd93ull;
      h ^= h >> 32;
      pt.emplace(s, (Integer(h) >> 24) + (Integer(1) << 40));
    }
    Integer g = boost::multiprecision::gcd(eval_int(a, pt), eval_int(b, pt));
    if (g == 0 || g >= small_bound) return false;
  }
  return true;
}

std::optional<Poly> heu_gcd(const Poly& a, const Poly& b, std::vector<Sym> vars, int depth) {
  if (depth > 12) return std::nullopt;
  // Evaluation points widen multiplicatively with each eliminated variable;
  // past a handful of variables the integer images dwarf the PRS fallback.
  if (vars.size() > 4) return std::nullopt;
  if (vars.empty()) {
    Integer g = boost::multiprecision::gcd(int_coeff(a.constant_value()),
                                           int_coeff(b.constant_value()));
    return Poly::constant(Rational(g));
  }
  Sym s = vars.back();
  vars.pop_back();
  Integer na = max_abs_coeff(a), nb = max_abs_coeff(b);
  Integer xi = 2 * (na < nb ? na : nb) + 2;
  if (xi < 4) xi = 4;
  if (boost::multiprecision::msb(xi) > 2048) return std::nullopt;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Poly ea = eval_at(a, s, xi), eb = eval_at(b, s, xi);
    std::optional<Poly> img;
    if (ea.is_zero() || eb.is_zero()) {
      img = std::nullopt;  // unlucky point, retry
    } else {
      img = heu_gcd(ea, eb, vars, depth + 1);
    }
    if (img && !img->is_zero()) {
      // Keep the integer content: it carries the digits of coefficients that
      // are constant at this level but variable further up.
      Poly g = digits_to_poly(*img, s, xi);
      if (!g.is_zero() && try_divide(a, g) && try_divide(b, g)) return g;
    }
    xi = xi * 73794 / 27011 + 1;
  }
  return std::nullopt;
}

// Largest monomial dividing every term.
Monomial monomial_content(const Poly& p) {
  Monomial m = p.terms().begin()->first;
  for (const auto& [t, c] : p.terms()) {
    Monomial next;
    auto a = m.factors.begin();
    for (const auto& [s, e] : t.factors) {
      while (a != m.factors.end() && a->first < s) ++a;
      if (a != m.factors.end() && a->first == s)
        next.factors.emplace_back(s, std::min(a->second, e));
    }
    m = std::move(next);
    if (m.empty()) break;
  }
  return m;
}

Monomial monomial_gcd(const Monomial& a, const Monomial& b) {
  Monomial out;
  auto it = b.factors.begin();
  for (const auto& [s, e] : a.factors) {
    while (it != b.factors.end() && it->first < s) ++it;
    if (it != b.factors.end() && it->first == s)
      out.factors.emplace_back(s, std::min(e, it->second));
  }
  return out;
}

Poly divide_monomial(const Poly& p, const Monomial& m) {
  if (m.empty()) return p;
  Poly out;
  for (const auto& [t, c] : p.terms()) out.add_term(t.divide(m), c);
  return out;
}

}  // namespace

Poly poly_gcd(const Poly& a_in, const Poly& b_in) {
  if (a_in.is_zero()) return make_primitive(b_in);
  if (b_in.is_zero()) return make_primitive(a_in);
  Poly a = make_primitive(a_in), b = make_primitive(b_in);
  if (a == b) return a;
  if (a.is_constant() || b.is_constant()) return Poly::constant(1);

  Monomial mc = monomial_gcd(monomial_content(a), monomial_content(b));
  a = divide_monomial(a, monomial_content(a));
  b = divide_monomial(b, monomial_content(b));
  Poly mono;
  mono.add_term(mc, Rational(1));

  Poly core;
  if (a.is_constant() || b.is_constant()) {
    core = Poly::constant(1);
  } else if (try_divide(a, b)) {
    core = b;
  } else if (try_divide(b, a)) {
    core = a;
  } else {
    std::vector<Sym> vars = a.symbols();
    for (const Sym& s : b.symbols())
      if (std::find(vars.begin(), vars.end(), s) == vars.end()) vars.push_back(s);
    std::sort(vars.begin(), vars.end());
    if (screened_coprime(a, b, vars)) {
      core = Poly::constant(1);
    } else {
      auto g = heu_gcd(a, b, vars, 0);
      core = g ? *g : prs_gcd(a, b);
    }
  }
  return make_primitive(core * mono);
}

// ---------------------------------------------------------------------------
// RatFn

RatFn::RatFn(Poly num, Poly den, bool reduce_gcd) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw Error(ErrorKind::Math, "zero-divisor", "zero denominator");
  if (reduce_gcd && !num_.is_zero() && !(den_.is_constant())) {
    Poly g = poly_gcd(num_, den_);
    if (!g.is_constant()) {
      num_ = divide_exact(num_, g);
      den_ = divide_exact(den_, g);
    }
  }
  normalize_content();
}

RatFn RatFn::constant(const Rational& c) {
  return RatFn(Poly::constant(c), Poly::constant(1), false);
}

void RatFn::normalize_content() {
  if (num_.is_zero()) {
    den_ = Poly::constant(1);
    return;
  }
  Rational c = den_.content_signed();
  if (c != 1) {
    Rational inv = Rational(1) / c;
    den_ = den_ * inv;
    num_ = num_ * inv;
  }
}

bool RatFn::is_constant_in(std::span<const Sym> syms) const {
  for (const Sym& s : syms)
    if (num_.depends_on(s) || den_.depends_on(s)) {
      if (!diff(s).is_zero()) return false;
    }
  return true;
}

RatFn RatFn::operator-() const { return RatFn(-num_, den_, false); }

RatFn RatFn::operator+(const RatFn& o) const {
  if (den_ == o.den_) return RatFn(num_ + o.num_, den_, false);
  return RatFn(num_ * o.den_ + o.num_ * den_, den_ * o.den_, false);
}

RatFn RatFn::operator-(const RatFn& o) const {
  if (den_ == o.den_) return RatFn(num_ - o.num_, den_, false);
  return RatFn(num_ * o.den_ - o.num_ * den_, den_ * o.den_, false);
}

RatFn RatFn::operator*(const RatFn& o) const {
  return RatFn(num_ * o.num_, den_ * o.den_, false);
}

RatFn RatFn::operator/(const RatFn& o) const {
  if (o.is_zero())
    throw Error(ErrorKind::Math, "zero-divisor", "division by the zero rational function");
  return RatFn(num_ * o.den_, den_ * o.num_, false);
}

bool operator==(const RatFn& a, const RatFn& b) {
  return (a.num_ * b.den_ - b.num_ * a.den_).is_zero();
}

RatFn RatFn::diff(const Sym& s) const {
  // quotient rule; fully reduced afterwards
  Poly dn = num_.diff(s), dd = den_.diff(s);
  return RatFn(dn * den_ - num_ * dd, den_ * den_, true);
}

namespace {

RatFn ratfn_pow(const RatFn& f, int e) {
  RatFn acc = RatFn::constant(1);
  for (int i = 0; i < e; ++i) acc *= f;
  return acc;
}

RatFn subst_poly(const Poly& p, const std::map<Sym, RatFn>& bindings) {
  RatFn acc;
  for (const auto& [m, c] : p.terms()) {
    RatFn term = RatFn::constant(c);
    for (const auto& [s, e] : m.factors) {
      auto it = bindings.find(s);
      if (it == bindings.end())
        term *= RatFn::from_poly(Poly::var(s, e));
      else
        term *= ratfn_pow(it->second, e);
    }
    acc += term;
  }
  return acc;
}

}  // namespace

RatFn RatFn::subst(const std::map<Sym, RatFn>& bindings) const {
  if (bindings.empty()) return *this;
  RatFn n = subst_poly(num_, bindings);
  RatFn d = subst_poly(den_, bindings);
  if (d.is_zero())
    throw Error(ErrorKind::Math, "singular substitution",
                "substitution makes the denominator vanish identically");
  return (n / d).reduced();
}

double RatFn::eval(const std::unordered_map<Sym, double, SymHash>& point) const {
  double d = den_.eval(point);
  if (std::abs(d) < 1e-300)
    throw Error(ErrorKind::Numeric, "pole", "denominator vanishes at the evaluation point");
  return num_.eval(point) / d;
}

RatFn RatFn::reduced() const { return RatFn(num_, den_, true); }

std::vector<Sym> RatFn::symbols() const {
  std::vector<Sym> out = num_.symbols();
  for (const Sym& s : den_.symbols())
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  std::sort(out.begin(), out.end());
  return out;
}

std::string RatFn::str() const {
  RatFn r = reduced();
  if (r.den_.is_constant() && r.den_.constant_value() == 1) return r.num_.str();
  std::string n = r.num_.str(), d = r.den_.str();
  bool den_simple = r.den_.term_count() == 1 &&
                    r.den_.terms().begin()->first.factors.size() == 1 &&
                    r.den_.terms().begin()->second == 1;
  std::string out;
  out += (r.num_.term_count() > 1) ? "(" + n + ")" : n;
  out += "/";
  out += den_simple ? d : "(" + d + ")";
  return out;
}

RatFn operator*(const Rational& c, const RatFn& f) {
  return RatFn(f.num() * c, f.den(), false);
}

// ---------------------------------------------------------------------------
// RFMatrix

RFMatrix::RFMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0)
    throw Error(ErrorKind::Input, "bad-dimension", "negative matrix dimension");
  entries_.assign(static_cast<std::size_t>(rows) * cols, RatFn());
}

RFMatrix RFMatrix::identity(int n) {
  RFMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = RatFn::constant(1);
  return m;
}

RFMatrix RFMatrix::operator+(const RFMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw Error(ErrorKind::Input, "dimension-mismatch", "matrix addition");
  RFMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.entries_[i] = entries_[i] + o.entries_[i];
  return out;
}

RFMatrix RFMatrix::operator-(const RFMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw Error(ErrorKind::Input, "dimension-mismatch", "matrix subtraction");
  RFMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.entries_[i] = entries_[i] - o.entries_[i];
  return out;
}

RFMatrix RFMatrix::operator-() const {
  RFMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i) out.entries_[i] = -entries_[i];
  return out;
}

RFMatrix RFMatrix::operator*(const RFMatrix& o) const {
  if (cols_ != o.rows_)
    throw Error(ErrorKind::Input, "dimension-mismatch", "matrix product");
  RFMatrix out(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < o.cols_; ++j) {
      RatFn acc;
      for (int k = 0; k < cols_; ++k) acc += at(i, k) * o.at(k, j);
      out.at(i, j) = acc.reduced();
    }
  return out;
}

RFMatrix RFMatrix::scaled(const RatFn& f) const {
  RFMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.entries_[i] = (entries_[i] * f).reduced();
  return out;
}

RFMatrix RFMatrix::transposed() const {
  RFMatrix out(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out.at(j, i) = at(i, j);
  return out;
}

bool operator==(const RFMatrix& a, const RFMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i)
    if (a.entries_[i] != b.entries_[i]) return false;
  return true;
}

bool RFMatrix::is_zero() const {
  for (const RatFn& e : entries_)
    if (!e.is_zero()) return false;
  return true;
}

bool RFMatrix::is_constant_in(std::span<const Sym> syms) const {
  for (const RatFn& e : entries_)
    if (!e.is_constant_in(syms)) return false;
  return true;
}

namespace {

// Clears denominators: returns (P, L) with P = L * A entrywise polynomial.
std::pair<std::vector<Poly>, Poly> clear_denominators(const RFMatrix& a) {
  Poly lcm = Poly::constant(1);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const Poly& d = a.at(i, j).den();
      lcm = divide_exact(lcm * d, poly_gcd(lcm, d));
    }
  std::vector<Poly> p;
  p.reserve(static_cast<std::size_t>(a.rows()) * a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      p.push_back(a.at(i, j).num() * divide_exact(lcm, a.at(i, j).den()));
  return {std::move(p), std::move(lcm)};
}

// Fraction-free determinant of a dense polynomial matrix.
Poly bareiss_det(std::vector<Poly> a, int n) {
  if (n == 0) return Poly::constant(1);
  auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
  int sign = 1;
  Poly prev = Poly::constant(1);
  for (int k = 0; k + 1 < n; ++k) {
    if (a[idx(k, k)].is_zero()) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (!a[idx(i, k)].is_zero()) { piv = i; break; }
      if (piv < 0) return Poly();
      for (int j = 0; j < n; ++j) std::swap(a[idx(k, j)], a[idx(piv, j)]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j)
        a[idx(i, j)] = divide_exact(a[idx(i, j)] * a[idx(k, k)] - a[idx(i, k)] * a[idx(k, j)], prev);
    prev = a[idx(k, k)];
  }
  Poly det = a[idx(n - 1, n - 1)];
  return sign < 0 ? -det : det;
}

}  // namespace

RatFn RFMatrix::determinant() const {
  if (rows_ != cols_)
    throw Error(ErrorKind::Input, "dimension-mismatch", "determinant of non-square matrix");
  auto [p, lcm] = clear_denominators(*this);
  Poly det = bareiss_det(std::move(p), rows_);
  return RatFn(std::move(det), lcm.pow(rows_), true);
}

RFMatrix RFMatrix::inverse() const {
  if (rows_ != cols_)
    throw Error(ErrorKind::Input, "dimension-mismatch", "inverse of non-square matrix");
  const int n = rows_;
  auto [p, lcm] = clear_denominators(*this);
  Poly det = bareiss_det(p, n);
  if (det.is_zero())
    throw Error(ErrorKind::Math, "generically singular",
                "matrix determinant is identically zero");
  RFMatrix out(n, n);
  auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // adj(P)_{ji} = (-1)^{i+j} det(minor of P without row i, column j)
      std::vector<Poly> minor;
      minor.reserve(static_cast<std::size_t>(n - 1) * (n - 1));
      for (int r = 0; r < n; ++r) {
        if (r == j) continue;
        for (int c = 0; c < n; ++c) {
          if (c == i) continue;
          minor.push_back(p[idx(r, c)]);
        }
      }
      Poly cof = bareiss_det(std::move(minor), n - 1);
      if ((i + j) % 2 != 0) cof = -cof;
      out.at(i, j) = RatFn(cof * lcm, det, true);
    }
  return out;
}

int RFMatrix::rank() const {
  // Fraction-free elimination over cleared denominators; no gcd reduction.
  auto [a, lcm] = clear_denominators(*this);
  (void)lcm;
  auto idx = [this](int i, int j) { return static_cast<std::size_t>(i) * cols_ + j; };
  int rank = 0;
  Poly prev = Poly::constant(1);
  for (int col = 0; col < cols_ && rank < rows_; ++col) {
    int piv = -1;
    for (int i = rank; i < rows_; ++i)
      if (!a[idx(i, col)].is_zero()) { piv = i; break; }
    if (piv < 0) continue;
    if (piv != rank)
      for (int j = 0; j < cols_; ++j) std::swap(a[idx(rank, j)], a[idx(piv, j)]);
    for (int i = rank + 1; i < rows_; ++i) {
      for (int j = col + 1; j < cols_; ++j)
        a[idx(i, j)] = divide_exact(
            a[idx(i, j)] * a[idx(rank, col)] - a[idx(i, col)] * a[idx(rank, j)], prev);
      a[idx(i, col)] = Poly();
    }
    prev = a[idx(rank, col)];
    ++rank;
  }
  return rank;
}

std::vector<std::vector<RatFn>> RFMatrix::left_nullspace() const {
  // Right null space of the transpose via reduced row echelon form.
  RFMatrix m = transposed();
  const int rows = m.rows(), cols = m.cols();
  std::vector<int> pivot_col;
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int piv = -1;
    for (int i = rank; i < rows; ++i)
      if (!m.at(i, col).is_zero()) { piv = i; break; }
    if (piv < 0) continue;
    for (int j = 0; j < cols; ++j) std::swap(m.at(rank, j), m.at(piv, j));
    RatFn inv = (RatFn::constant(1) / m.at(rank, col)).reduced();
    for (int j = col; j < cols; ++j) m.at(rank, j) = (m.at(rank, j) * inv).reduced();
    for (int i = 0; i < rows; ++i) {
      if (i == rank || m.at(i, col).is_zero()) continue;
      RatFn f = m.at(i, col);
      for (int j = col; j < cols; ++j)
        m.at(i, j) = (m.at(i, j) - f * m.at(rank, j)).reduced();
    }
    pivot_col.push_back(col);
    ++rank;
  }
  std::vector<std::vector<RatFn>> basis;
  for (int col = 0; col < cols; ++col) {
    if (std::find(pivot_col.begin(), pivot_col.end(), col) != pivot_col.end()) continue;
    std::vector<RatFn> v(static_cast<std::size_t>(cols));
    v[static_cast<std::size_t>(col)] = RatFn::constant(1);
    for (int r = 0; r < rank; ++r)
      v[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(r)])] =
          (-m.at(r, col)).reduced();
    basis.push_back(std::move(v));
  }
  return basis;
}

RFMatrix RFMatrix::subst(const std::map<Sym, RatFn>& bindings) const {
  RFMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.entries_[i] = entries_[i].subst(bindings);
  return out;
}

}  // namespace crnred::symalg
