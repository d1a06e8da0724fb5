#pragma once

// Exact symbolic arithmetic: sparse multivariate polynomials over
// arbitrary-precision rationals, rational functions, matrices thereof,
// differentiation, substitution and fraction-free (Bareiss) elimination.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace crnred {

// Error category, used by the CLI to pick exit codes.
enum class ErrorKind { Input, Math, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& code, const std::string& what)
      : std::runtime_error(code + ": " + what), kind_(kind), code_(code) {}
  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

namespace symalg {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Symbols

enum class SymKind : std::uint8_t {
  XConc = 0,       // concentration of a retained (slow) species
  ZConc = 1,       // concentration of a non-interacting species
  Rate = 2,        // rate constant (the "hat" value of kappa)
  Conserved = 3,   // conserved amount (the "hat" value of alpha)
  Epsilon = 4,     // perturbation parameter
  RateDir = 5,     // perturbation direction for a rate constant
  ConservedDir = 6 // perturbation direction for a conserved amount
};

// A symbol is identified by (kind, index); the name is carried along for
// rendering only. The kind-major, index-minor order fixes the monomial order.
struct Sym {
  SymKind kind{SymKind::XConc};
  int index{0};
  std::string name;

  Sym() = default;
  Sym(SymKind k, int i, std::string n) : kind(k), index(i), name(std::move(n)) {}

  friend bool operator==(const Sym& a, const Sym& b) {
    return a.kind == b.kind && a.index == b.index;
  }
  friend bool operator!=(const Sym& a, const Sym& b) { return !(a == b); }
  friend bool operator<(const Sym& a, const Sym& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.index < b.index;
  }
};

struct SymHash {
  std::size_t operator()(const Sym& s) const {
    return (static_cast<std::size_t>(s.kind) << 32) ^ static_cast<std::size_t>(s.index);
  }
};

// ---------------------------------------------------------------------------
// Monomials

// Product of symbol powers, factors sorted by symbol order, exponents >= 1.
struct Monomial {
  std::vector<std::pair<Sym, int>> factors;

  int degree() const;
  int degree_in(const Sym& s) const;
  bool divides(const Monomial& other) const;     // this | other
  Monomial operator*(const Monomial& other) const;
  Monomial divide(const Monomial& other) const;  // this / other, must be exact
  bool empty() const { return factors.empty(); }

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.factors == b.factors;
  }
};

// Graded lexicographic order (degree first, then symbol-wise lex).
struct MonoLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

// ---------------------------------------------------------------------------
// Polynomials

class Poly {
 public:
  using TermMap = std::map<Monomial, Rational, MonoLess>;

  Poly() = default;
  static Poly constant(const Rational& c);
  static Poly constant(long c) { return constant(Rational(c)); }
  static Poly var(const Sym& s, int exp = 1);

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  // Constant value; throws if not constant.
  Rational constant_value() const;

  const TermMap& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }

  int total_degree() const;
  int degree_in(const Sym& s) const;
  std::vector<Sym> symbols() const;
  bool depends_on(const Sym& s) const { return degree_in(s) > 0; }

  Poly operator-() const;
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly& operator*=(const Poly& o) { *this = *this * o; return *this; }
  Poly operator*(const Rational& c) const;
  Poly pow(int e) const;

  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  Poly diff(const Sym& s) const;
  double eval(const std::unordered_map<Sym, double, SymHash>& point) const;

  // Leading term with respect to the graded lex order.
  const Monomial& leading_monomial() const;
  const Rational& leading_coeff() const;

  // Rational c with c > 0 or the sign of the leading coefficient, such that
  // (*this) / c has coprime integer coefficients and positive leading one.
  Rational content_signed() const;

  void add_term(const Monomial& m, const Rational& c);

  std::string str() const;

 private:
  TermMap terms_;
};

inline Poly operator*(const Rational& c, const Poly& p) { return p * c; }

// Exact division; returns nullopt when b does not divide a.
std::optional<Poly> try_divide(const Poly& a, const Poly& b);
// Exact division; throws on failure.
Poly divide_exact(const Poly& a, const Poly& b);
// Multivariate gcd over Q (primitive PRS); result is primitive with positive
// leading coefficient. gcd(0, 0) = 0.
Poly poly_gcd(const Poly& a, const Poly& b);

// ---------------------------------------------------------------------------
// Rational functions

class RatFn {
 public:
  RatFn() : num_(), den_(Poly::constant(1)) {}
  RatFn(Poly num, Poly den, bool reduce_gcd = true);
  static RatFn constant(const Rational& c);
  static RatFn constant(long c) { return constant(Rational(c)); }
  static RatFn var(const Sym& s) { return RatFn(Poly::var(s), Poly::constant(1)); }
  static RatFn from_poly(Poly p) { return RatFn(std::move(p), Poly::constant(1), false); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool is_zero() const { return num_.is_zero(); }
  bool is_polynomial() const { return den_.is_constant(); }
  bool is_constant_in(std::span<const Sym> syms) const;

  RatFn operator-() const;
  RatFn operator+(const RatFn& o) const;
  RatFn operator-(const RatFn& o) const;
  RatFn operator*(const RatFn& o) const;
  RatFn operator/(const RatFn& o) const;  // throws "zero-divisor" on o == 0
  RatFn& operator+=(const RatFn& o) { *this = *this + o; return *this; }
  RatFn& operator-=(const RatFn& o) { *this = *this - o; return *this; }
  RatFn& operator*=(const RatFn& o) { *this = *this * o; return *this; }

  // Exact equality via cross multiplication (independent of lazy reduction).
  friend bool operator==(const RatFn& a, const RatFn& b);
  friend bool operator!=(const RatFn& a, const RatFn& b) { return !(a == b); }

  RatFn diff(const Sym& s) const;
  RatFn subst(const std::map<Sym, RatFn>& bindings) const;
  double eval(const std::unordered_map<Sym, double, SymHash>& point) const;

  // Full num/den gcd reduction; returns the canonical representative.
  RatFn reduced() const;
  std::vector<Sym> symbols() const;

  std::string str() const;  // canonical: always rendered from reduced form

 private:
  void normalize_content();
  Poly num_, den_;
};

RatFn operator*(const Rational& c, const RatFn& f);

// ---------------------------------------------------------------------------
// Matrices of rational functions

class RFMatrix {
 public:
  RFMatrix() : rows_(0), cols_(0) {}
  RFMatrix(int rows, int cols);
  static RFMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  RatFn& at(int r, int c) { return entries_[static_cast<std::size_t>(r) * cols_ + c]; }
  const RatFn& at(int r, int c) const {
    return entries_[static_cast<std::size_t>(r) * cols_ + c];
  }

  RFMatrix operator+(const RFMatrix& o) const;
  RFMatrix operator-(const RFMatrix& o) const;
  RFMatrix operator*(const RFMatrix& o) const;
  RFMatrix operator-() const;
  RFMatrix scaled(const RatFn& f) const;
  RFMatrix transposed() const;

  friend bool operator==(const RFMatrix& a, const RFMatrix& b);

  bool is_zero() const;
  bool is_constant_in(std::span<const Sym> syms) const;

  // Fraction-free determinant (Bareiss over cleared denominators).
  RatFn determinant() const;
  // Exact inverse; throws "generically singular" when det == 0.
  RFMatrix inverse() const;
  // Generic rank over the rational function field.
  int rank() const;
  // Basis of the left null space (rows v with v * this == 0).
  std::vector<std::vector<RatFn>> left_nullspace() const;

  RFMatrix subst(const std::map<Sym, RatFn>& bindings) const;

 private:
  int rows_, cols_;
  std::vector<RatFn> entries_;
};

}  // namespace symalg
}  // namespace crnred
