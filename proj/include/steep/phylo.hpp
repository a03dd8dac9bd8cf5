#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "steep/core.hpp"
#include "steep/rng.hpp"
#include "steep/tree.hpp"

namespace steep {

struct JcTransition {
  double p_same;
  double p_diff;
};

/// Jukes-Cantor transition probabilities along a branch of length b >= 0.
JcTransition jc_transition(double branch_length);

/// Fixed branch lengths by edge type.
struct BranchLengths {
  double inner = 0.1;
  double tip = 0.01;

  double of(const TreeTopology& t, const TreeTopology::Edge& e) const {
    return (t.is_leaf(e.a) || t.is_leaf(e.b)) ? tip : inner;
  }
};

/// n_taxa x n_sites nucleotide matrix; row i is taxon i+1, cells hold 0..3 for A,C,G,T.
class SequenceAlignment {
 public:
  SequenceAlignment(std::vector<std::vector<std::uint8_t>> rows);

  std::size_t n_taxa() const { return rows_.size(); }
  std::size_t n_sites() const { return n_sites_; }
  const std::vector<std::uint8_t>& row(std::size_t taxon_index) const { return rows_[taxon_index]; }
  std::uint8_t at(std::size_t taxon_index, std::size_t site) const { return rows_[taxon_index][site]; }

  /// Same sites with the rows of two taxa (1-based labels) exchanged.
  SequenceAlignment with_swapped_taxa(int taxon_a, int taxon_b) const;
  /// Columns of `other` appended after this alignment's columns.
  SequenceAlignment concatenated(const SequenceAlignment& other) const;

  /// Plain FASTA with '>k' headers (k = 1-based taxon label).
  void write_fasta(std::ostream& out) const;
  static SequenceAlignment read_fasta(std::istream& in);

 private:
  std::vector<std::vector<std::uint8_t>> rows_;
  std::size_t n_sites_ = 0;
};

char nucleotide_char(std::uint8_t code);
std::uint8_t nucleotide_code(char c);

/// Jukes-Cantor likelihood target over tree topologies with fixed branch lengths.
///
/// Identical site columns are pooled into weighted patterns before pruning.
class PhyloTarget {
 public:
  explicit PhyloTarget(const SequenceAlignment& alignment, BranchLengths lengths = {});

  std::size_t n_taxa() const { return n_taxa_; }
  std::size_t n_sites() const { return n_sites_; }
  std::size_t n_patterns() const { return weights_.size(); }
  const BranchLengths& lengths() const { return lengths_; }

  /// Felsenstein pruning with the root placed on edge `root_edge` of the tree.
  double log_likelihood(const TreeTopology& tree, std::size_t root_edge = 0) const;

  /// Target over topologies (uniform prior) with a thread-safe memo keyed by
  /// canonical encoding.
  TargetDensity<TreeTopology> as_target() const;

  /// Patterns as columns (n_taxa codes each) with their multiplicities.
  const std::vector<std::vector<std::uint8_t>>& patterns() const { return patterns_; }
  const std::vector<double>& pattern_weights() const { return weights_; }

 private:
  void partial(const TreeTopology& tree, int node, int parent, std::vector<double>& out,
               std::vector<double>& log_scale) const;

  std::size_t n_taxa_;
  std::size_t n_sites_;
  BranchLengths lengths_;
  std::vector<std::vector<std::uint8_t>> patterns_;  // pattern-major
  std::vector<double> weights_;
};

/// Free-function form of PhyloTarget::log_likelihood.
double pruning_loglik(const TreeTopology& tree, const PhyloTarget& target, std::size_t root_edge = 0);

/// i.i.d. sites from the Jukes-Cantor process on `tree` with uniform root state.
SequenceAlignment simulate_alignment(const TreeTopology& tree, std::size_t n_sites, Rng& rng,
                                     BranchLengths lengths = {});

/// The two generating trees of the 8-taxon mixture experiment.
TreeTopology paper_tree_a();
TreeTopology paper_tree_b();

/// 1000 sites simulated on tree A, followed by the same block with taxa 2 and 7
/// exchanged. Trees A and B have identical likelihood on the result.
SequenceAlignment build_paper_alignment(Rng& rng, std::size_t block_sites = 1000);

/// max(log L(A), log L(B)) minus the best log-likelihood over the NNI
/// neighbors of A and B; positive when A and B are separated local maxima.
double paper_neighbor_gap(const PhyloTarget& target);

struct TopologyPosterior {
  std::vector<TreeTopology> trees;
  std::vector<double> log_likelihood;
  std::vector<double> probability;
  std::map<std::string, std::size_t> index;  // canonical encoding -> position

  double mass_of(const TreeTopology& t) const;
};

/// Normalized likelihood over every topology on the target's taxa (n <= 8).
TopologyPosterior exact_topology_posterior(const PhyloTarget& target);

}  // namespace steep
