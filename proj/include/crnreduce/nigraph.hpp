#pragma once

// The labelled multi-digraph on the non-interacting species plus the
// distinguished node *: rooted spanning trees, simple cycles, the cycles
// with nonzero net x-production, and the tree/cycle form of the reduced
// right-hand side a0 - A0 B0^{-1} b0.

#include "crnreduce/crn.hpp"

#include <string>
#include <vector>

namespace crnred::nigraph {

using crn::ConservationBasis;
using crn::PartitionedSystem;
using symalg::RatFn;
using symalg::Sym;

struct Edge {
  int source = 0;  // node id: 0..P-1 are z positions, P is *
  int target = 0;
  RatFn label;       // monomial in (x, kappa)
  int reaction = 0;  // index into net.reactions
};

struct NIGraph {
  int P = 0;     // number of z nodes; the star node has id P
  int star = 0;  // == P
  std::vector<std::string> node_names;  // size P+1, last is "*"
  std::vector<Edge> edges;

  // Undirected connected components; components[0] contains *.  Non-star
  // components are listed by smallest z node and each maps to one row of
  // the conservation basis.
  std::vector<std::vector<int>> components;
  std::vector<int> comp_of;    // node -> component index
  std::vector<int> alpha_row;  // per component, W row index; -1 for component 0

  int d() const { return static_cast<int>(components.size()) - 1; }
};

// Errors when the node cap is exceeded or the component count does not
// match the conservation basis ("conservation/component mismatch").
NIGraph build_graph(const PartitionedSystem& psys, const ConservationBasis& basis,
                    int max_nodes = 16);

// Copy with the edges of zeroed-out reactions removed; nodes and the
// component structure of the full graph are kept.
NIGraph drop_edges(const NIGraph& graph, const std::vector<bool>& keep_edge);

struct SpanningTree {
  int root = 0;
  std::vector<int> edges;  // indices into graph.edges, one per non-root node
  RatFn label;             // product of edge labels; 1 for a single-node tree
};

// Exhaustive enumeration of spanning trees of a component directed toward
// root; parallel edges give distinct trees. Deterministic order.
std::vector<SpanningTree> spanning_trees(const NIGraph& graph, int component, int root);

// The same sum of tree labels via the principal minor of the weighted
// out-degree Laplacian.
RatFn matrix_tree_sum(const NIGraph& graph, int component, int root);

// All simple directed cycles as edge-index lists, each starting at its
// smallest node; includes self-loops; parallel edges give distinct cycles.
std::vector<std::vector<int>> enumerate_cycles(const NIGraph& graph);

struct SigmaCycle {
  std::vector<int> cycle;          // edge indices
  int component = 0;
  std::vector<long long> zeta;     // net x-production, length n
  // Each entry is the sorted edge set of tau united with the cycle, where tau
  // is a spanning tree rooted at the source of a fixed cycle edge that
  // contains the rest of the cycle.
  std::vector<std::vector<int>> gamma;
  RatFn label;                     // product of the cycle's edge labels
};

// Gamma built from a chosen cycle edge; the result is independent of the
// choice. Cycles are kept iff zeta != 0 and gamma is nonempty.
std::vector<std::vector<int>> gamma_of_cycle(const NIGraph& graph,
                                             const std::vector<int>& cycle,
                                             std::size_t edge_choice = 0);
std::vector<SigmaCycle> sigma_cycles(const NIGraph& graph, const PartitionedSystem& psys);

struct TreeFormula {
  std::vector<int> i_reactions;   // reactions touching no non-interacting species
  std::vector<SigmaCycle> cycles;
  std::vector<RatFn> q;           // per component: rooted-tree label sums
  std::vector<RatFn> total;       // length n
};

// The tree/cycle expansion of a0 - A0 B0^{-1} b0: the direct terms of the
// reactions in I plus, per cycle, alpha/q times the summed gamma labels
// times zeta.
TreeFormula rhs_tree_formula(const PartitionedSystem& psys, const ConservationBasis& basis,
                             const NIGraph& graph);

std::string to_dot(const NIGraph& graph);

}  // namespace crnred::nigraph
