#include "crnreduce/crn.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

namespace crnred::crn {

using symalg::Poly;
using symalg::Rational;

Sym x_sym(int species_index, const std::string& species_name) {
  return Sym(SymKind::XConc, species_index, "x_" + species_name);
}
Sym z_sym(int species_index, const std::string& species_name) {
  return Sym(SymKind::ZConc, species_index, "z_" + species_name);
}
Sym rate_sym(int index, const std::string& name) { return Sym(SymKind::Rate, index, name); }
Sym rate_dir(const Sym& rate) { return Sym(SymKind::RateDir, rate.index, rate.name + "'"); }
Sym alpha_sym(int index) {
  return Sym(SymKind::Conserved, index, "alpha" + std::to_string(index + 1));
}
Sym alpha_dir(const Sym& alpha) {
  return Sym(SymKind::ConservedDir, alpha.index, alpha.name + "'");
}
Sym eps_sym() { return Sym(SymKind::Epsilon, 0, "eps"); }

int ReactionNetwork::species_index(const std::string& name) const {
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i] == name) return static_cast<int>(i);
  return -1;
}

int ReactionNetwork::rate_count() const {
  int m = 0;
  for (const Reaction& r : reactions) m = std::max(m, r.rate.index + 1);
  return m;
}

bool operator==(const Reaction& a, const Reaction& b) {
  return a.reactant == b.reactant && a.product == b.product && a.rate == b.rate &&
         a.rate_name == b.rate_name;
}

bool operator==(const ReactionNetwork& a, const ReactionNetwork& b) {
  return a.species == b.species && a.reactions == b.reactions && a.aliases == b.aliases;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw Error(ErrorKind::Input, "parse", "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<int> parse_complex(const std::string& text, const ReactionNetwork& net, int line) {
  std::vector<int> coeffs(net.species.size(), 0);
  std::string t = trim(text);
  if (t.empty()) parse_error(line, "empty complex (use 0 for the empty complex)");
  if (t == "0") return coeffs;
  for (const std::string& raw : split_on(t, '+')) {
    std::string term = trim(raw);
    if (term.empty()) parse_error(line, "empty summand in complex");
    int coeff = 1;
    std::size_t i = 0;
    while (i < term.size() && std::isdigit(static_cast<unsigned char>(term[i]))) ++i;
    if (i > 0) {
      coeff = std::stoi(term.substr(0, i));
      if (coeff <= 0) parse_error(line, "non-positive stoichiometric coefficient");
    }
    std::string name = trim(term.substr(i));
    if (name.empty()) parse_error(line, "missing species name in term '" + term + "'");
    int idx = net.species_index(name);
    if (idx < 0) parse_error(line, "unknown species '" + name + "'");
    coeffs[static_cast<std::size_t>(idx)] += coeff;
  }
  return coeffs;
}

}  // namespace

ParsedInput parse_network(const std::string& text) {
  ParsedInput out;
  ReactionNetwork& net = out.network;
  std::map<std::string, std::string> alias;  // name -> target
  struct RawReaction {
    std::vector<int> reactant, product;
    std::string rate_name;
    int line;
  };
  std::vector<RawReaction> raws;
  bool in_reactions = false;
  bool seen_species = false;

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.rfind("species:", 0) == 0) {
      if (seen_species) parse_error(lineno, "duplicate species: line");
      seen_species = true;
      for (const std::string& name : split_ws(line.substr(8))) {
        if (net.species_index(name) >= 0) parse_error(lineno, "duplicate species '" + name + "'");
        net.species.push_back(name);
      }
      if (net.species.empty()) parse_error(lineno, "no species declared");
      continue;
    }
    if (line.rfind("Z:", 0) == 0) {
      if (!seen_species) parse_error(lineno, "Z: before species:");
      std::vector<int> z;
      for (const std::string& name : split_ws(line.substr(2))) {
        int idx = net.species_index(name);
        if (idx < 0) parse_error(lineno, "unknown species '" + name + "'");
        z.push_back(idx);
      }
      std::sort(z.begin(), z.end());
      out.z = std::move(z);
      continue;
    }
    if (line.rfind("alias:", 0) == 0) {
      auto sides = split_on(line.substr(6), '=');
      if (sides.size() != 2) parse_error(lineno, "alias syntax is 'alias: new = old'");
      std::string from = trim(sides[0]), to = trim(sides[1]);
      if (from.empty() || to.empty() || from == to) parse_error(lineno, "bad alias");
      if (alias.count(from)) parse_error(lineno, "duplicate alias '" + from + "'");
      alias[from] = to;
      net.aliases.emplace_back(from, to);
      continue;
    }
    if (line == "reactions:") {
      if (!seen_species) parse_error(lineno, "reactions: before species:");
      in_reactions = true;
      continue;
    }
    if (!in_reactions) parse_error(lineno, "unexpected line '" + line + "'");

    std::size_t semi = line.find(';');
    if (semi == std::string::npos) parse_error(lineno, "missing '; rate' part");
    std::string lhs_rhs = line.substr(0, semi);
    std::vector<std::string> rates;
    for (const std::string& r : split_on(line.substr(semi + 1), ',')) {
      std::string t = trim(r);
      if (t.empty()) parse_error(lineno, "empty rate symbol");
      rates.push_back(t);
    }
    bool reversible = false;
    std::size_t arrow = lhs_rhs.find("<->");
    std::size_t alen = 3;
    if (arrow != std::string::npos) {
      reversible = true;
    } else {
      arrow = lhs_rhs.find("->");
      alen = 2;
      if (arrow == std::string::npos) parse_error(lineno, "missing '->'");
    }
    std::vector<int> reactant = parse_complex(lhs_rhs.substr(0, arrow), net, lineno);
    std::vector<int> product = parse_complex(lhs_rhs.substr(arrow + alen), net, lineno);
    if (reactant == product) parse_error(lineno, "reactant equals product");
    if (reversible) {
      if (rates.size() != 2) parse_error(lineno, "'<->' needs two comma-separated rates");
      raws.push_back({reactant, product, rates[0], lineno});
      raws.push_back({product, reactant, rates[1], lineno});
    } else {
      if (rates.size() != 1) parse_error(lineno, "'->' takes exactly one rate");
      raws.push_back({std::move(reactant), std::move(product), rates[0], lineno});
    }
  }

  if (!seen_species) throw Error(ErrorKind::Input, "parse", "missing species: line");
  if (raws.empty()) throw Error(ErrorKind::Input, "parse", "no reactions");

  // Resolve rate symbols: a name may be used once; shared values only via alias.
  std::map<std::string, int> canonical;  // canonical name -> symbol index
  std::set<std::string> used;
  for (const RawReaction& r : raws) {
    if (!used.insert(r.rate_name).second)
      parse_error(r.line, "duplicate rate symbol '" + r.rate_name + "'");
    std::string canon = r.rate_name;
    std::set<std::string> seen_chain;
    while (alias.count(canon)) {
      if (!seen_chain.insert(canon).second) parse_error(r.line, "alias cycle");
      canon = alias[canon];
    }
    int idx;
    auto it = canonical.find(canon);
    if (it != canonical.end()) {
      idx = it->second;
    } else {
      idx = static_cast<int>(canonical.size());
      canonical.emplace(canon, idx);
    }
    net.reactions.push_back(
        {r.reactant, r.product, rate_sym(idx, canon), r.rate_name, r.line});
  }
  for (const auto& [from, to] : alias)
    if (!canonical.count(to) && !alias.count(to))
      throw Error(ErrorKind::Input, "parse", "alias target '" + to + "' is never used");

  for (std::size_t s = 0; s < net.species.size(); ++s) {
    bool seen = false;
    for (const Reaction& r : net.reactions)
      if (r.reactant[s] != 0 || r.product[s] != 0) seen = true;
    if (!seen)
      throw Error(ErrorKind::Input, "unused-species",
                  "species '" + net.species[s] + "' takes part in no reaction");
  }
  return out;
}

namespace {

std::string complex_str(const std::vector<int>& coeffs, const ReactionNetwork& net) {
  std::string out;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    if (!out.empty()) out += " + ";
    if (coeffs[i] > 1) out += std::to_string(coeffs[i]) + " ";
    out += net.species[i];
  }
  return out.empty() ? "0" : out;
}

}  // namespace

std::string render_network(const ParsedInput& input) {
  const ReactionNetwork& net = input.network;
  std::ostringstream os;
  os << "species:";
  for (const std::string& s : net.species) os << " " << s;
  os << "\n";
  if (input.z) {
    os << "Z:";
    for (int idx : *input.z) os << " " << net.species[static_cast<std::size_t>(idx)];
    os << "\n";
  }
  for (const auto& [from, to] : net.aliases) os << "alias: " << from << " = " << to << "\n";
  os << "reactions:\n";
  for (const Reaction& r : net.reactions)
    os << "  " << complex_str(r.reactant, net) << " -> " << complex_str(r.product, net)
       << " ; " << r.rate_name << "\n";
  return os.str();
}

IntMat stoich_matrix(const ReactionNetwork& net) {
  IntMat n(net.species.size(), std::vector<long long>(net.reactions.size(), 0));
  for (std::size_t j = 0; j < net.reactions.size(); ++j)
    for (std::size_t i = 0; i < net.species.size(); ++i)
      n[i][j] = net.reactions[j].product[i] - net.reactions[j].reactant[i];
  return n;
}

bool check_noninteracting(const ReactionNetwork& net, const std::vector<int>& z) {
  for (const Reaction& r : net.reactions) {
    long long lhs = 0, rhs = 0;
    for (int idx : z) {
      lhs += r.reactant[static_cast<std::size_t>(idx)];
      rhs += r.product[static_cast<std::size_t>(idx)];
    }
    if (lhs > 1 || rhs > 1) return false;
  }
  return true;
}

namespace {

// Maximal independent sets via Bron-Kerbosch on the complement graph.
void mis_recurse(std::uint64_t r, std::uint64_t p, std::uint64_t x,
                 const std::vector<std::uint64_t>& nonadj,
                 std::vector<std::uint64_t>& out) {
  if (p == 0 && x == 0) {
    out.push_back(r);
    return;
  }
  std::uint64_t px = p | x;
  int pivot = std::countr_zero(px);
  std::uint64_t cand = p & ~nonadj[static_cast<std::size_t>(pivot)];
  while (cand) {
    int v = std::countr_zero(cand);
    std::uint64_t bit = 1ull << v;
    cand &= ~bit;
    mis_recurse(r | bit, p & nonadj[static_cast<std::size_t>(v)],
                x & nonadj[static_cast<std::size_t>(v)], nonadj, out);
    p &= ~bit;
    x |= bit;
  }
}

}  // namespace

std::vector<std::vector<int>> enumerate_noninteracting_sets(const ReactionNetwork& net) {
  const int ns = static_cast<int>(net.species.size());
  if (ns > 63)
    throw Error(ErrorKind::Input, "too-many-species",
                "non-interacting set enumeration supports at most 63 species");
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(ns),
                                     std::vector<bool>(static_cast<std::size_t>(ns), false));
  std::vector<bool> excluded(static_cast<std::size_t>(ns), false);
  for (const Reaction& r : net.reactions)
    for (const std::vector<int>* side : {&r.reactant, &r.product})
      for (int i = 0; i < ns; ++i) {
        if ((*side)[static_cast<std::size_t>(i)] == 0) continue;
        if ((*side)[static_cast<std::size_t>(i)] >= 2) excluded[static_cast<std::size_t>(i)] = true;
        for (int j = i + 1; j < ns; ++j)
          if ((*side)[static_cast<std::size_t>(j)] != 0)
            adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                adj[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = true;
      }
  std::uint64_t eligible = 0;
  for (int i = 0; i < ns; ++i)
    if (!excluded[static_cast<std::size_t>(i)]) eligible |= 1ull << i;
  std::vector<std::uint64_t> nonadj(static_cast<std::size_t>(ns), 0);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j)
      if (j != i && !adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        nonadj[static_cast<std::size_t>(i)] |= 1ull << j;
    nonadj[static_cast<std::size_t>(i)] &= eligible;
  }
  std::vector<std::uint64_t> masks;
  mis_recurse(0, eligible, 0, nonadj, masks);
  std::vector<std::vector<int>> out;
  for (std::uint64_t m : masks) {
    std::vector<int> s;
    for (int i = 0; i < ns; ++i)
      if (m & (1ull << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Partition

PartitionedSystem partition_system(const ReactionNetwork& net, const std::vector<int>& z) {
  if (!check_noninteracting(net, z))
    throw Error(ErrorKind::Input, "not-noninteracting",
                "the given species set is not non-interacting");
  PartitionedSystem ps;
  ps.net = net;
  ps.zspecies = z;
  std::sort(ps.zspecies.begin(), ps.zspecies.end());
  for (int i = 0; i < static_cast<int>(net.species.size()); ++i)
    if (std::find(ps.zspecies.begin(), ps.zspecies.end(), i) == ps.zspecies.end())
      ps.xspecies.push_back(i);
  ps.n = static_cast<int>(ps.xspecies.size());
  ps.P = static_cast<int>(ps.zspecies.size());
  for (int idx : ps.xspecies) ps.xsyms.push_back(x_sym(idx, net.species[static_cast<std::size_t>(idx)]));
  for (int idx : ps.zspecies) ps.zsyms.push_back(z_sym(idx, net.species[static_cast<std::size_t>(idx)]));

  auto z_reactant_pos = [&](const Reaction& r) -> int {
    for (int pz = 0; pz < ps.P; ++pz)
      if (r.reactant[static_cast<std::size_t>(ps.zspecies[static_cast<std::size_t>(pz)])] != 0)
        return pz;
    return -1;
  };
  std::vector<int> block1, block2;
  for (int i = 0; i < static_cast<int>(net.reactions.size()); ++i)
    (z_reactant_pos(net.reactions[static_cast<std::size_t>(i)]) < 0 ? block1 : block2).push_back(i);
  ps.m1 = static_cast<int>(block1.size());
  ps.m2 = static_cast<int>(block2.size());
  ps.reaction_order = block1;
  ps.reaction_order.insert(ps.reaction_order.end(), block2.begin(), block2.end());

  IntMat N = stoich_matrix(net);
  auto block = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
    IntMat out(rows.size(), std::vector<long long>(cols.size(), 0));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        out[i][j] = N[static_cast<std::size_t>(rows[i])][static_cast<std::size_t>(cols[j])];
    return out;
  };
  ps.N11 = block(ps.xspecies, block1);
  ps.N12 = block(ps.xspecies, block2);
  ps.N21 = block(ps.zspecies, block1);
  ps.N22 = block(ps.zspecies, block2);

  // mass-action x-part of a reactant
  auto x_monomial = [&](const Reaction& r) {
    Poly p = Poly::var(r.rate);
    for (int xi = 0; xi < ps.n; ++xi) {
      int sp = ps.xspecies[static_cast<std::size_t>(xi)];
      int e = r.reactant[static_cast<std::size_t>(sp)];
      if (e > 0) p = p * Poly::var(ps.xsyms[static_cast<std::size_t>(xi)], e);
    }
    return RatFn::from_poly(std::move(p));
  };
  for (int i : block1) ps.v1.push_back(x_monomial(net.reactions[static_cast<std::size_t>(i)]));
  for (int i : block2) {
    const Reaction& r = net.reactions[static_cast<std::size_t>(i)];
    ps.nu2.emplace_back(x_monomial(r), z_reactant_pos(r));
  }

  ps.K1 = RFMatrix(ps.n, ps.P);
  ps.K2 = RFMatrix(ps.P, ps.P);
  for (int i = 0; i < ps.m2; ++i) {
    int j = ps.nu2[static_cast<std::size_t>(i)].second;
    const RatFn& f = ps.nu2[static_cast<std::size_t>(i)].first;
    for (int r = 0; r < ps.n; ++r) {
      long long c = ps.N12[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
      if (c != 0) ps.K1.at(r, j) += RatFn::constant(c) * f;
    }
    for (int r = 0; r < ps.P; ++r) {
      long long c = ps.N22[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
      if (c != 0) ps.K2.at(r, j) += RatFn::constant(c) * f;
    }
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Conservation basis

namespace {

RFMatrix int_to_rf(const IntMat& m, int rows, int cols) {
  RFMatrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) = RatFn::constant(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return out;
}

std::vector<RatFn> int_mat_vec(const IntMat& m, const std::vector<RatFn>& v) {
  std::vector<RatFn> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    RatFn acc;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (m[i][j] != 0) acc += RatFn::constant(m[i][j]) * v[j];
    out[i] = acc.reduced();
  }
  return out;
}

}  // namespace

ConservationBasis conservation_basis(const PartitionedSystem& psys,
                                     const std::vector<int>* eliminate_override) {
  ConservationBasis cb;
  const int P = psys.P;
  const int m = psys.m1 + psys.m2;

  IntMat nz(static_cast<std::size_t>(P), std::vector<long long>(static_cast<std::size_t>(m), 0));
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < psys.m1; ++j) nz[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = psys.N21[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (int j = 0; j < psys.m2; ++j) nz[static_cast<std::size_t>(i)][static_cast<std::size_t>(psys.m1 + j)] = psys.N22[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  int k_stoich = P - int_to_rf(nz, P, m).rank();

  // 0/1 disjoint-support integrals: indicator vectors of connected components
  // of the z-row support graph, kept when the component's row sum is zero.
  std::vector<int> comp(static_cast<std::size_t>(P), -1);
  int ncomp = 0;
  for (int s = 0; s < P; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack{s};
    comp[static_cast<std::size_t>(s)] = ncomp;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int c = 0; c < m; ++c) {
        if (nz[static_cast<std::size_t>(u)][static_cast<std::size_t>(c)] == 0) continue;
        for (int w = 0; w < P; ++w)
          if (comp[static_cast<std::size_t>(w)] < 0 && nz[static_cast<std::size_t>(w)][static_cast<std::size_t>(c)] != 0) {
            comp[static_cast<std::size_t>(w)] = ncomp;
            stack.push_back(w);
          }
      }
    }
    ++ncomp;
  }
  for (int c = 0; c < ncomp; ++c) {
    std::vector<long long> row(static_cast<std::size_t>(P), 0);
    for (int i = 0; i < P; ++i)
      if (comp[static_cast<std::size_t>(i)] == c) row[static_cast<std::size_t>(i)] = 1;
    bool integral = true;
    for (int j = 0; j < m && integral; ++j) {
      long long sum = 0;
      for (int i = 0; i < P; ++i) sum += row[static_cast<std::size_t>(i)] * nz[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (sum != 0) integral = false;
    }
    if (integral) cb.W.push_back(std::move(row));
  }
  cb.k = static_cast<int>(cb.W.size());
  if (cb.k != k_stoich)
    throw Error(ErrorKind::Math, "conservation-basis",
                "stoichiometric z-integrals admit no 0/1 disjoint-support basis");
  cb.p = P - cb.k;

  // z-only linear integrals of the fast system beyond the stoichiometric
  // ones are a hard error: left kernel of [K2 | N21 v1].
  RFMatrix aug(P, P + 1);
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < P; ++j) aug.at(i, j) = psys.K2.at(i, j);
  std::vector<RatFn> n21v1 = int_mat_vec(psys.N21, psys.v1);
  for (int i = 0; i < P; ++i) aug.at(i, P) = n21v1[static_cast<std::size_t>(i)];
  if (P - aug.rank() > k_stoich)
    throw Error(ErrorKind::Math, "non-stoichiometric first integral",
                "the fast system has a z-only first integral not induced by stoichiometry");

  if (eliminate_override && static_cast<int>(eliminate_override->size()) != cb.k)
    throw Error(ErrorKind::Input, "bad-eliminate", "one eliminated index per conservation row");
  for (int r = 0; r < cb.k; ++r) {
    int choice = -1;
    if (eliminate_override) {
      choice = (*eliminate_override)[static_cast<std::size_t>(r)];
      if (choice < 0 || choice >= P || cb.W[static_cast<std::size_t>(r)][static_cast<std::size_t>(choice)] == 0)
        throw Error(ErrorKind::Input, "bad-eliminate",
                    "eliminated index outside the support of its conservation row");
    } else {
      for (int i = 0; i < P; ++i)
        if (cb.W[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] != 0) choice = i;
    }
    cb.eliminated.push_back(choice);
  }
  for (int i = 0; i < P; ++i)
    if (std::find(cb.eliminated.begin(), cb.eliminated.end(), i) == cb.eliminated.end())
      cb.retained.push_back(i);
  cb.Wprime.assign(static_cast<std::size_t>(cb.k),
                   std::vector<long long>(static_cast<std::size_t>(cb.p), 0));
  for (int r = 0; r < cb.k; ++r)
    for (int j = 0; j < cb.p; ++j)
      cb.Wprime[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] =
          cb.W[static_cast<std::size_t>(r)][static_cast<std::size_t>(cb.retained[static_cast<std::size_t>(j)])];
  for (int r = 0; r < cb.k; ++r) cb.alpha.push_back(alpha_sym(r));
  return cb;
}

std::map<Sym, RatFn> rate_direction_map(const ReactionNetwork& net) {
  std::map<Sym, RatFn> out;
  for (const Reaction& r : net.reactions)
    out.emplace(r.rate, RatFn::var(rate_dir(r.rate)));
  return out;
}

// ---------------------------------------------------------------------------
// (a, A, b, B) blocks

ABBlocks ab_blocks(const PartitionedSystem& psys, const ConservationBasis& basis) {
  ABBlocks ab;
  ab.n = psys.n;
  ab.p = basis.p;
  ab.k = basis.k;

  auto cols = [&](const RFMatrix& src, const std::vector<int>& which, bool rows_retained) {
    int rows = rows_retained ? basis.p : src.rows();
    RFMatrix out(rows, static_cast<int>(which.size()));
    for (int i = 0; i < rows; ++i) {
      int srow = rows_retained ? basis.retained[static_cast<std::size_t>(i)] : i;
      for (std::size_t j = 0; j < which.size(); ++j)
        out.at(i, static_cast<int>(j)) = src.at(srow, which[j]);
    }
    return out;
  };
  RFMatrix K11 = cols(psys.K1, basis.retained, false);   // n x p
  RFMatrix K12 = cols(psys.K1, basis.eliminated, false); // n x k
  RFMatrix Kt21 = cols(psys.K2, basis.retained, true);   // p x p
  RFMatrix Kt22 = cols(psys.K2, basis.eliminated, true); // p x k

  IntMat N21t(static_cast<std::size_t>(basis.p));
  for (int i = 0; i < basis.p; ++i)
    N21t[static_cast<std::size_t>(i)] = psys.N21[static_cast<std::size_t>(basis.retained[static_cast<std::size_t>(i)])];

  RFMatrix Wp(basis.k, basis.p);
  for (int r = 0; r < basis.k; ++r)
    for (int j = 0; j < basis.p; ++j)
      Wp.at(r, j) = RatFn::constant(basis.Wprime[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)]);

  std::vector<RatFn> alpha_hat, alpha_star;
  for (const Sym& a : basis.alpha) {
    alpha_hat.push_back(RatFn::var(a));
    alpha_star.push_back(RatFn::var(alpha_dir(a)));
  }

  std::map<Sym, RatFn> dir = rate_direction_map(psys.net);
  auto subst_vec = [&](const std::vector<RatFn>& v) {
    std::vector<RatFn> out;
    for (const RatFn& f : v) out.push_back(f.subst(dir));
    return out;
  };
  std::vector<RatFn> v1s = subst_vec(psys.v1);
  RFMatrix K11s = K11.subst(dir), K12s = K12.subst(dir);
  RFMatrix Kt21s = Kt21.subst(dir), Kt22s = Kt22.subst(dir);

  auto add = [](std::vector<RatFn> a, const std::vector<RatFn>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = (a[i] + b[i]).reduced();
    return a;
  };
  auto mat_vec_local = [](const RFMatrix& m, const std::vector<RatFn>& v) {
    std::vector<RatFn> out(static_cast<std::size_t>(m.rows()));
    for (int i = 0; i < m.rows(); ++i) {
      RatFn acc;
      for (int j = 0; j < m.cols(); ++j) acc += m.at(i, j) * v[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = acc.reduced();
    }
    return out;
  };

  ab.a0 = add(int_mat_vec(psys.N11, psys.v1), mat_vec_local(K12, alpha_hat));
  ab.A0 = K11 - K12 * Wp;
  ab.b0 = add(int_mat_vec(N21t, psys.v1), mat_vec_local(Kt22, alpha_hat));
  ab.B0 = Kt21 - Kt22 * Wp;

  ab.a1 = add(add(int_mat_vec(psys.N11, v1s), mat_vec_local(K12s, alpha_hat)),
              mat_vec_local(K12, alpha_star));
  ab.A1 = K11s - K12s * Wp;
  ab.b1 = add(add(int_mat_vec(N21t, v1s), mat_vec_local(Kt22s, alpha_hat)),
              mat_vec_local(Kt22, alpha_star));
  ab.B1 = Kt21s - Kt22s * Wp;
  return ab;
}

}  // namespace crnred::crn
