#include "pcmp/relgraph.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <ostream>
#include <string>

#include "pcmp/errors.hpp"
#include "pcmp/layers.hpp"

namespace pcmp {

const char* to_string(GraphKind kind) { return kind == GraphKind::Relation ? "relation" : "node"; }

GraphKind parse_graph_kind(const std::string& text) {
  if (text == "relation" || text == "line" || text == "lg") return GraphKind::Relation;
  if (text == "node" || text == "ng") return GraphKind::Node;
  throw Error(ErrorCode::InvalidArgument, "unknown graph kind '" + text + "'");
}

namespace {

void finish(GraphStructure& g) {
  std::sort(g.edges.begin(), g.edges.end());
  g.neighbors.assign(g.n_nodes(), {});
  for (const auto& [u, v] : g.edges) {
    g.neighbors[u].push_back(v);
    g.neighbors[v].push_back(u);
  }
  for (auto& n : g.neighbors) std::sort(n.begin(), n.end());
}

}  // namespace

GraphStructure relation_structure(std::size_t n_items) {
  if (n_items < 2) throw Error(ErrorCode::TooFewItems, "relation graph needs at least 2 items");
  GraphStructure g;
  g.kind = GraphKind::Relation;
  g.n_items = n_items;
  for (NodeIndex i = 0; i < n_items; ++i) {
    for (NodeIndex j = i + 1; j < n_items; ++j) g.node_items.emplace_back(i, j);
  }
  const auto n = static_cast<NodeIndex>(g.n_nodes());
  for (NodeIndex u = 0; u < n; ++u) {
    const auto [a, b] = g.node_items[u];
    for (NodeIndex v = u + 1; v < n; ++v) {
      const auto [c, d] = g.node_items[v];
      const int common = (a == c) + (a == d) + (b == c) + (b == d);
      if (common == 1) g.edges.emplace_back(u, v);
    }
  }
  finish(g);
  return g;
}

GraphStructure node_structure(std::size_t n_items) {
  if (n_items < 2) throw Error(ErrorCode::TooFewItems, "node graph needs at least 2 items");
  GraphStructure g;
  g.kind = GraphKind::Node;
  g.n_items = n_items;
  for (NodeIndex i = 0; i < n_items; ++i) g.node_items.emplace_back(i, i);
  for (NodeIndex u = 0; u < n_items; ++u) {
    for (NodeIndex v = u + 1; v < n_items; ++v) g.edges.emplace_back(u, v);
  }
  finish(g);
  return g;
}

GraphStructure structure_for(GraphKind kind, std::size_t n_items) {
  return kind == GraphKind::Relation ? relation_structure(n_items) : node_structure(n_items);
}

std::shared_ptr<const GraphStructure> cached_structure(GraphKind kind, std::size_t n_items) {
  static std::mutex mu;
  static std::map<std::pair<GraphKind, std::size_t>, std::shared_ptr<const GraphStructure>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{kind, n_items}];
  if (!slot) slot = std::make_shared<const GraphStructure>(structure_for(kind, n_items));
  return slot;
}

RelationGraph build_relation_graph(const Matrix& item_features, const DenseLayer& embed) {
  RelationGraph g{cached_structure(GraphKind::Relation, item_features.rows()), {}};
  const Matrix z = dense_forward(item_features, embed);
  g.node_features = Matrix(g.n_nodes(), z.cols());
  for (std::size_t k = 0; k < g.n_nodes(); ++k) {
    const auto [i, j] = g.structure->node_items[k];
    auto out = g.node_features.row(k);
    const auto zi = z.row(i), zj = z.row(j);
    for (std::size_t c = 0; c < z.cols(); ++c) out[c] = zi[c] * zj[c];
  }
  return g;
}

NodeGraph build_node_graph(const Matrix& item_features, const DenseLayer& embed) {
  return {cached_structure(GraphKind::Node, item_features.rows()), dense_forward(item_features, embed)};
}

void dump_graph(const GraphStructure& g, std::ostream& out) {
  for (const auto& [u, v] : g.edges) out << u << ' ' << v << '\n';
  for (std::size_t k = 0; k < g.n_nodes(); ++k) {
    out << "node " << k << ' ' << g.node_items[k].first << ' ' << g.node_items[k].second << '\n';
  }
}

}  // namespace pcmp
