#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steep/core.hpp"

namespace steep {

/// Unrooted binary tree over taxa 1..n.
///
/// Node ids 0..n-1 are the leaves (node k carries taxon k+1); ids n..2n-3 are
/// internal nodes of degree 3. Equality is topological: two trees compare equal
/// iff their canonical encodings do, regardless of internal node numbering.
class TreeTopology {
 public:
  struct Edge {
    int a;
    int b;
  };

  /// Builds from an explicit edge list; validates the unrooted binary shape.
  TreeTopology(std::size_t n_taxa, const std::vector<Edge>& edges);

  /// Parses Newick with integer taxon labels 1..n. A bifurcating top level is
  /// unrooted by merging the two root edges. Branch lengths are ignored.
  static TreeTopology from_newick(std::string_view newick);

  std::size_t n_taxa() const { return n_; }
  std::size_t node_count() const { return adj_.size(); }
  /// All 2n-3 edges, ordered by (smaller endpoint, larger endpoint).
  std::vector<Edge> edges() const;
  /// The n-3 edges joining two internal nodes, in the same order.
  std::vector<Edge> internal_edges() const;
  std::size_t internal_edge_count() const { return n_ - 3; }
  std::span<const int> neighbors(int node) const {
    return {adj_[static_cast<std::size_t>(node)].data(), is_leaf(node) ? 1u : 3u};
  }
  bool is_leaf(int node) const { return node < static_cast<int>(n_); }

  /// Nearest-neighbor interchange across internal edge `internal_index`
  /// (position in internal_edges()); `variant` in {0, 1} selects which of the
  /// two alternative quartets is produced.
  TreeTopology nni(std::size_t internal_index, int variant) const;
  /// All 2(n-3) NNI neighbors, in internal-edge order.
  std::vector<TreeTopology> nni_neighbors() const;

  /// Canonical Newick: rooted at the internal node next to taxon 1, children
  /// ordered by their smallest taxon label, e.g. "(1,(2,3),(4,5));".
  std::string canonical() const;

  /// Number of edges on the path between two taxa (1-based labels).
  int path_length(int taxon_a, int taxon_b) const;

  /// Returns a copy with a new leaf (taxon n+1) attached to the middle of edge `edge_index`.
  TreeTopology with_leaf_on_edge(std::size_t edge_index) const;

  friend bool operator==(const TreeTopology& x, const TreeTopology& y) {
    return x.canonical() == y.canonical();
  }

 private:
  std::string encode_subtree(int node, int parent, int& min_label) const;
  void sort_node(int node);

  std::size_t n_ = 0;
  // Sorted neighbor ids; leaves use slot 0 only.
  std::vector<std::array<int, 3>> adj_;
};

/// Trees are states of the phylogenetic target; membership means matching taxon count.
void check_state(const SpaceDescriptor& space, const TreeTopology& t);

/// Every unrooted binary topology on n taxa, 4 <= n <= 8; (2n-5)!! of them.
std::vector<TreeTopology> enumerate_topologies(std::size_t n_taxa);

/// (2n-5)!!
std::size_t topology_count(std::size_t n_taxa);

}  // namespace steep
