#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pcmp/matrix.hpp"

namespace pcmp {

enum class GraphKind { Relation, Node };

const char* to_string(GraphKind kind);
GraphKind parse_graph_kind(const std::string& text);

using NodeIndex = std::uint32_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

/// Topology shared by every outfit with the same item count.
struct GraphStructure {
  GraphKind kind = GraphKind::Relation;
  std::size_t n_items = 0;
  /// Relation graph: item pair (i, j), i < j, per node in lexicographic order.
  /// Node graph: (i, i).
  std::vector<std::pair<NodeIndex, NodeIndex>> node_items;
  std::vector<Edge> edges;                         // u < v, sorted
  std::vector<std::vector<NodeIndex>> neighbors;   // ascending per node

  std::size_t n_nodes() const noexcept { return node_items.size(); }
};

/// Line graph of the complete graph on `n_items` items: one node per
/// unordered pair, edges between pairs that share exactly one item.
GraphStructure relation_structure(std::size_t n_items);
/// Complete graph with one node per item.
GraphStructure node_structure(std::size_t n_items);
GraphStructure structure_for(GraphKind kind, std::size_t n_items);

/// Memoised lookup; returned structures are immutable and shared.
std::shared_ptr<const GraphStructure> cached_structure(GraphKind kind, std::size_t n_items);

struct DenseLayer;

struct RelationGraph {
  std::shared_ptr<const GraphStructure> structure;
  Matrix node_features;  // n_nodes x d_h

  std::size_t n_nodes() const { return structure->n_nodes(); }
};
using NodeGraph = RelationGraph;

/// Node (i, j) carries Z(f_i) * Z(f_j) elementwise.
RelationGraph build_relation_graph(const Matrix& item_features, const DenseLayer& embed);
/// Node i carries Z(f_i).
NodeGraph build_node_graph(const Matrix& item_features, const DenseLayer& embed);

/// Text dump: one "u v" line per edge, then "node k i j" per node.
void dump_graph(const GraphStructure& g, std::ostream& out);

}  // namespace pcmp
