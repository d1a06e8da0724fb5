#include "crnreduce/nigraph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace crnred::nigraph {

using symalg::RFMatrix;

NIGraph build_graph(const PartitionedSystem& psys, const ConservationBasis& basis,
                    int max_nodes) {
  if (psys.P > max_nodes)
    throw Error(ErrorKind::Input, "too-many-nodes",
                "graph has " + std::to_string(psys.P) +
                    " non-interacting species, cap is " + std::to_string(max_nodes));
  NIGraph g;
  g.P = psys.P;
  g.star = psys.P;
  for (int i = 0; i < psys.P; ++i)
    g.node_names.push_back(psys.net.species[static_cast<std::size_t>(psys.zspecies[static_cast<std::size_t>(i)])]);
  g.node_names.push_back("*");

  auto z_product_pos = [&](const crn::Reaction& r) -> int {
    for (int pz = 0; pz < psys.P; ++pz)
      if (r.product[static_cast<std::size_t>(psys.zspecies[static_cast<std::size_t>(pz)])] != 0)
        return pz;
    return -1;
  };
  for (int i = 0; i < psys.m1; ++i) {
    int orig = psys.reaction_order[static_cast<std::size_t>(i)];
    int tgt = z_product_pos(psys.net.reactions[static_cast<std::size_t>(orig)]);
    if (tgt >= 0) g.edges.push_back({g.star, tgt, psys.v1[static_cast<std::size_t>(i)], orig});
  }
  for (int i = 0; i < psys.m2; ++i) {
    int orig = psys.reaction_order[static_cast<std::size_t>(psys.m1 + i)];
    int tgt = z_product_pos(psys.net.reactions[static_cast<std::size_t>(orig)]);
    g.edges.push_back({psys.nu2[static_cast<std::size_t>(i)].second, tgt >= 0 ? tgt : g.star,
                       psys.nu2[static_cast<std::size_t>(i)].first, orig});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& a, const Edge& b) { return a.reaction < b.reaction; });

  // undirected components; the star component comes first
  g.comp_of.assign(static_cast<std::size_t>(g.P + 1), -1);
  std::vector<std::vector<int>> comps;
  for (int s = g.star; s >= 0; --s) {
    if (g.comp_of[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack{s}, nodes;
    g.comp_of[static_cast<std::size_t>(s)] = static_cast<int>(comps.size());
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      nodes.push_back(u);
      for (const Edge& e : g.edges) {
        int other = -1;
        if (e.source == u) other = e.target;
        if (e.target == u) other = e.source;
        if (other >= 0 && g.comp_of[static_cast<std::size_t>(other)] < 0) {
          g.comp_of[static_cast<std::size_t>(other)] = static_cast<int>(comps.size());
          stack.push_back(other);
        }
      }
    }
    std::sort(nodes.begin(), nodes.end());
    comps.push_back(std::move(nodes));
  }
  // starting the search at * makes comps[0] the star component; order the
  // rest by smallest node
  std::vector<int> order(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin() + 1, order.end(),
            [&](int a, int b) { return comps[static_cast<std::size_t>(a)][0] < comps[static_cast<std::size_t>(b)][0]; });
  std::vector<int> newpos(comps.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    newpos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    g.components.push_back(comps[static_cast<std::size_t>(order[i])]);
  }
  for (int& c : g.comp_of) c = newpos[static_cast<std::size_t>(c)];

  // every non-star component must carry exactly one conservation relation
  if (g.d() != basis.k)
    throw Error(ErrorKind::Math, "component-mismatch",
                "conservation/component mismatch: " + std::to_string(g.d()) +
                    " non-star components vs " + std::to_string(basis.k) + " integrals");
  g.alpha_row.assign(g.components.size(), -1);
  for (int c = 1; c <= g.d(); ++c) {
    const std::vector<int>& nodes = g.components[static_cast<std::size_t>(c)];
    if (nodes.size() < 2)
      throw Error(ErrorKind::Math, "component-mismatch",
                  "conservation/component mismatch: single-node component");
    for (int r = 0; r < basis.k; ++r) {
      std::vector<int> support;
      for (int i = 0; i < basis.p + basis.k; ++i)
        if (basis.W[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] != 0) support.push_back(i);
      if (support == nodes) g.alpha_row[static_cast<std::size_t>(c)] = r;
    }
    if (g.alpha_row[static_cast<std::size_t>(c)] < 0)
      throw Error(ErrorKind::Math, "component-mismatch",
                  "conservation/component mismatch: component without matching integral");
  }
  return g;
}

NIGraph drop_edges(const NIGraph& graph, const std::vector<bool>& keep_edge) {
  NIGraph g = graph;
  g.edges.clear();
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    if (keep_edge[i]) g.edges.push_back(graph.edges[i]);
  return g;
}

std::vector<SpanningTree> spanning_trees(const NIGraph& graph, int component, int root) {
  const std::vector<int>& nodes = graph.components[static_cast<std::size_t>(component)];
  std::vector<int> others;
  for (int v : nodes)
    if (v != root) others.push_back(v);
  std::vector<SpanningTree> out;
  if (others.empty()) {
    out.push_back({root, {}, RatFn::constant(1)});
    return out;
  }
  std::map<int, std::vector<int>> out_edges;
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    if (graph.comp_of[static_cast<std::size_t>(graph.edges[i].source)] == component &&
        graph.edges[i].source != graph.edges[i].target)
      out_edges[graph.edges[i].source].push_back(static_cast<int>(i));

  std::vector<int> chosen(others.size());
  std::map<int, int> next;  // node -> target of its chosen edge
  auto recurse = [&](auto&& self, std::size_t idx) -> void {
    if (idx == others.size()) {
      RatFn label = RatFn::constant(1);
      for (int e : chosen) label *= graph.edges[static_cast<std::size_t>(e)].label;
      out.push_back({root, chosen, label.reduced()});
      return;
    }
    int node = others[idx];
    for (int e : out_edges[node]) {
      // adding node -> target must not close a directed cycle
      int u = graph.edges[static_cast<std::size_t>(e)].target;
      bool cyc = u == node;
      while (!cyc && next.count(u)) {
        u = next[u];
        cyc = u == node;
      }
      if (cyc) continue;
      chosen[idx] = e;
      next[node] = graph.edges[static_cast<std::size_t>(e)].target;
      self(self, idx + 1);
      next.erase(node);
    }
  };
  recurse(recurse, 0);
  return out;
}

RatFn matrix_tree_sum(const NIGraph& graph, int component, int root) {
  const std::vector<int>& nodes = graph.components[static_cast<std::size_t>(component)];
  const int s = static_cast<int>(nodes.size());
  if (s == 1) return RatFn::constant(1);
  std::map<int, int> pos;
  for (int i = 0; i < s; ++i) pos[nodes[static_cast<std::size_t>(i)]] = i;
  // weighted out-degree Laplacian; self-loops cancel and are skipped
  RFMatrix lap(s, s);
  for (const Edge& e : graph.edges) {
    if (graph.comp_of[static_cast<std::size_t>(e.source)] != component || e.source == e.target) continue;
    int a = pos[e.source], b = pos[e.target];
    lap.at(a, a) += e.label;
    lap.at(a, b) -= e.label;
  }
  int r = pos[root];
  RFMatrix minor(s - 1, s - 1);
  for (int i = 0, mi = 0; i < s; ++i) {
    if (i == r) continue;
    for (int j = 0, mj = 0; j < s; ++j) {
      if (j == r) continue;
      minor.at(mi, mj) = lap.at(i, j);
      ++mj;
    }
    ++mi;
  }
  return minor.determinant();
}

std::vector<std::vector<int>> enumerate_cycles(const NIGraph& graph) {
  std::vector<std::vector<int>> out;
  std::map<int, std::vector<int>> out_edges;
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    out_edges[graph.edges[i].source].push_back(static_cast<int>(i));
  // each simple cycle is found once, rooted at its smallest node
  for (int s = 0; s <= graph.P; ++s) {
    std::vector<int> path;
    std::set<int> on_path{s};
    auto dfs = [&](auto&& self, int u) -> void {
      for (int e : out_edges[u]) {
        int t = graph.edges[static_cast<std::size_t>(e)].target;
        if (t < s) continue;
        if (t == s) {
          path.push_back(e);
          out.push_back(path);
          path.pop_back();
        } else if (!on_path.count(t)) {
          path.push_back(e);
          on_path.insert(t);
          self(self, t);
          on_path.erase(t);
          path.pop_back();
        }
      }
    };
    dfs(dfs, s);
  }
  return out;
}

std::vector<std::vector<int>> gamma_of_cycle(const NIGraph& graph,
                                             const std::vector<int>& cycle,
                                             std::size_t edge_choice) {
  int e = cycle[edge_choice];
  int src = graph.edges[static_cast<std::size_t>(e)].source;
  int comp = graph.comp_of[static_cast<std::size_t>(src)];
  std::set<int> rest(cycle.begin(), cycle.end());
  rest.erase(e);
  std::vector<std::vector<int>> out;
  for (const SpanningTree& tau : spanning_trees(graph, comp, src)) {
    std::set<int> tree_edges(tau.edges.begin(), tau.edges.end());
    if (!std::includes(tree_edges.begin(), tree_edges.end(), rest.begin(), rest.end())) continue;
    std::set<int> joined = tree_edges;
    joined.insert(cycle.begin(), cycle.end());
    out.emplace_back(joined.begin(), joined.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SigmaCycle> sigma_cycles(const NIGraph& graph, const PartitionedSystem& psys) {
  crn::IntMat N = crn::stoich_matrix(psys.net);
  std::vector<SigmaCycle> out;
  for (const std::vector<int>& cycle : enumerate_cycles(graph)) {
    SigmaCycle sc;
    sc.cycle = cycle;
    sc.component = graph.comp_of[static_cast<std::size_t>(graph.edges[static_cast<std::size_t>(cycle[0])].source)];
    sc.zeta.assign(static_cast<std::size_t>(psys.n), 0);
    for (int e : cycle)
      for (int j = 0; j < psys.n; ++j)
        sc.zeta[static_cast<std::size_t>(j)] +=
            N[static_cast<std::size_t>(psys.xspecies[static_cast<std::size_t>(j)])]
             [static_cast<std::size_t>(graph.edges[static_cast<std::size_t>(e)].reaction)];
    if (std::all_of(sc.zeta.begin(), sc.zeta.end(), [](long long v) { return v == 0; })) continue;
    sc.gamma = gamma_of_cycle(graph, cycle);
    if (sc.gamma.empty()) continue;
    sc.label = RatFn::constant(1);
    for (int e : cycle) sc.label *= graph.edges[static_cast<std::size_t>(e)].label;
    sc.label = sc.label.reduced();
    out.push_back(std::move(sc));
  }
  return out;
}

TreeFormula rhs_tree_formula(const PartitionedSystem& psys, const ConservationBasis& basis,
                             const NIGraph& graph) {
  TreeFormula tf;
  tf.total.assign(static_cast<std::size_t>(psys.n), RatFn());

  crn::IntMat N = crn::stoich_matrix(psys.net);
  for (int i = 0; i < psys.m1; ++i) {
    int orig = psys.reaction_order[static_cast<std::size_t>(i)];
    const crn::Reaction& r = psys.net.reactions[static_cast<std::size_t>(orig)];
    bool touches_z = false;
    for (int pz : psys.zspecies)
      if (r.product[static_cast<std::size_t>(pz)] != 0) touches_z = true;
    if (touches_z) continue;
    tf.i_reactions.push_back(orig);
    for (int j = 0; j < psys.n; ++j)
      tf.total[static_cast<std::size_t>(j)] +=
          psys.v1[static_cast<std::size_t>(i)] *
          RatFn::constant(N[static_cast<std::size_t>(psys.xspecies[static_cast<std::size_t>(j)])]
                           [static_cast<std::size_t>(orig)]);
  }

  for (int c = 0; c < static_cast<int>(graph.components.size()); ++c) {
    if (c == 0) {
      tf.q.push_back(matrix_tree_sum(graph, 0, graph.star));
    } else {
      RatFn q;
      for (int v : graph.components[static_cast<std::size_t>(c)])
        q += matrix_tree_sum(graph, c, v);
      tf.q.push_back(q.reduced());
    }
  }

  tf.cycles = sigma_cycles(graph, psys);
  for (const SigmaCycle& sc : tf.cycles) {
    RatFn gsum;
    for (const std::vector<int>& gamma : sc.gamma) {
      RatFn l = RatFn::constant(1);
      for (int e : gamma) l *= graph.edges[static_cast<std::size_t>(e)].label;
      gsum += l;
    }
    const RatFn& q = tf.q[static_cast<std::size_t>(sc.component)];
    if (q.is_zero())
      throw Error(ErrorKind::Math, "no-spanning-tree",
                  "tree/cycle expansion needs a rooted spanning tree in every component");
    RatFn factor = gsum / q;
    if (sc.component > 0)
      factor *= RatFn::var(
          basis.alpha[static_cast<std::size_t>(graph.alpha_row[static_cast<std::size_t>(sc.component)])]);
    for (int j = 0; j < psys.n; ++j)
      if (sc.zeta[static_cast<std::size_t>(j)] != 0)
        tf.total[static_cast<std::size_t>(j)] +=
            factor * RatFn::constant(sc.zeta[static_cast<std::size_t>(j)]);
  }
  for (RatFn& f : tf.total) f = f.reduced();
  return tf;
}

std::string to_dot(const NIGraph& graph) {
  std::ostringstream os;
  os << "digraph nigraph {\n";
  auto name = [&](int v) { return v == graph.star ? std::string("star") : graph.node_names[static_cast<std::size_t>(v)]; };
  for (int v = 0; v <= graph.P; ++v)
    os << "  \"" << name(v) << "\"" << (v == graph.star ? " [label=\"*\"]" : "") << ";\n";
  for (const Edge& e : graph.edges)
    os << "  \"" << name(e.source) << "\" -> \"" << name(e.target) << "\" [label=\""
       << e.label.str() << " [r" << e.reaction + 1 << "]\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace crnred::nigraph
