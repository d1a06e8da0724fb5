#pragma once

// Reaction networks with mass-action kinetics: parsing, stoichiometry,
// non-interacting species sets, the block partition induced by such a set,
// the 0/1 conservation basis W = (W' | I_k) and the symbolic (a, A, b, B)
// blocks with their first-order expansion in the perturbation direction.

#include "crnreduce/symalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crnred::crn {

using symalg::RatFn;
using symalg::RFMatrix;
using symalg::Sym;
using symalg::SymKind;

using IntMat = std::vector<std::vector<long long>>;

// Symbol constructors; (kind, index) identity, display name carried along.
Sym x_sym(int species_index, const std::string& species_name);
Sym z_sym(int species_index, const std::string& species_name);
Sym rate_sym(int index, const std::string& name);
Sym rate_dir(const Sym& rate);      // the kappa* direction of a rate constant
Sym alpha_sym(int index);           // conserved amount, named alpha1, alpha2, ...
Sym alpha_dir(const Sym& alpha);    // the alpha* direction
Sym eps_sym();

struct Reaction {
  std::vector<int> reactant;  // per species, non-negative
  std::vector<int> product;
  Sym rate;                   // canonical (alias-resolved) rate symbol
  std::string rate_name;      // as written in the input
  int line = 0;
};

struct ReactionNetwork {
  std::vector<std::string> species;
  std::vector<Reaction> reactions;
  std::vector<std::pair<std::string, std::string>> aliases;  // name -> target

  int species_index(const std::string& name) const;
  int rate_count() const;  // number of distinct rate symbols
};

struct ParsedInput {
  ReactionNetwork network;
  std::optional<std::vector<int>> z;  // species indices from the Z: line
};

ParsedInput parse_network(const std::string& text);
std::string render_network(const ParsedInput& input);

bool operator==(const Reaction& a, const Reaction& b);
bool operator==(const ReactionNetwork& a, const ReactionNetwork& b);

// Column i = product - reactant of reaction i; rows = species.
IntMat stoich_matrix(const ReactionNetwork& net);

// True iff every reaction has total Z-multiplicity <= 1 on each side.
bool check_noninteracting(const ReactionNetwork& net, const std::vector<int>& z);

// All inclusion-maximal non-interacting sets, as sorted species-index lists
// in deterministic order. Maximal independent sets of the co-occurrence graph.
std::vector<std::vector<int>> enumerate_noninteracting_sets(const ReactionNetwork& net);

// The ordered split induced by a non-interacting set: reactions with no
// Z-species in the reactant first (m1 of them), the rest (m2) second.
struct PartitionedSystem {
  ReactionNetwork net;
  std::vector<int> zspecies;  // species indices, declaration order
  std::vector<int> xspecies;
  std::vector<Sym> xsyms;     // length n
  std::vector<Sym> zsyms;     // length P

  std::vector<int> reaction_order;  // permutation of reactions, block 1 first
  int m1 = 0, m2 = 0, n = 0, P = 0;

  IntMat N11, N12, N21, N22;

  // Block-1 rates v1_i(x, kappa) and block-2 factors v2_i = nu2_i(x, kappa) * z_j.
  std::vector<RatFn> v1;
  std::vector<std::pair<RatFn, int>> nu2;  // (factor, z position 0..P-1)

  RFMatrix K1;  // n x P, with (K1; K2) z = (N12; N22) v2
  RFMatrix K2;  // P x P
};

PartitionedSystem partition_system(const ReactionNetwork& net, const std::vector<int>& z);

// z-only stoichiometric first integrals in 0/1 disjoint-support form.
struct ConservationBasis {
  int k = 0;  // number of integrals
  int p = 0;  // retained z dimension, P - k
  IntMat W;       // k x P
  IntMat Wprime;  // k x p
  std::vector<int> eliminated;  // z positions forming the identity block, per row
  std::vector<int> retained;    // z positions, size p, declaration order
  std::vector<Sym> alpha;       // size k
};

// eliminate_override: per W-row choice of eliminated z position; the default
// picks the largest z index in each support.
ConservationBasis conservation_basis(const PartitionedSystem& psys,
                                     const std::vector<int>* eliminate_override = nullptr);

// Substitution kappa_i -> kappa*_i for every rate symbol of the network.
std::map<Sym, RatFn> rate_direction_map(const ReactionNetwork& net);

struct ABBlocks {
  int n = 0, p = 0, k = 0;
  // epsilon-order 0, in (x, kappa-hat, alpha-hat)
  std::vector<RatFn> a0, b0;
  RFMatrix A0, B0;
  // epsilon-order 1, additionally in (kappa*, alpha*)
  std::vector<RatFn> a1, b1;
  RFMatrix A1, B1;
};

ABBlocks ab_blocks(const PartitionedSystem& psys, const ConservationBasis& basis);

}  // namespace crnred::crn
