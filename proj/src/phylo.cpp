#include "steep/phylo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace steep {
namespace {

constexpr double kRescaleThreshold = 1e-280;

// out[a] = sum_b P(a, b) in[b] for a Jukes-Cantor branch.
inline void propagate(const JcTransition& p, const double* in, double* out) {
  const double sum = in[0] + in[1] + in[2] + in[3];
  const double diag = p.p_same - p.p_diff;
  for (int a = 0; a < 4; ++a) out[a] = p.p_diff * sum + diag * in[a];
}

}  // namespace

JcTransition jc_transition(double branch_length) {
  if (!(branch_length >= 0.0)) {
    throw ConfigError("branch length must be non-negative, got " + std::to_string(branch_length));
  }
  const double e = std::exp(-4.0 * branch_length / 3.0);
  const double p_diff = 0.25 - 0.25 * e;
  return {1.0 - 3.0 * p_diff, p_diff};
}

char nucleotide_char(std::uint8_t code) {
  static constexpr char kChars[4] = {'A', 'C', 'G', 'T'};
  if (code > 3) throw std::invalid_argument("nucleotide code out of range");
  return kChars[code];
}

std::uint8_t nucleotide_code(char c) {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': return 3;
    default: throw std::invalid_argument(std::string("character outside {A,C,G,T}: '") + c + "'");
  }
}

SequenceAlignment::SequenceAlignment(std::vector<std::vector<std::uint8_t>> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw std::invalid_argument("alignment has no taxa");
  n_sites_ = rows_.front().size();
  for (const auto& r : rows_) {
    if (r.size() != n_sites_) throw std::invalid_argument("alignment rows have different lengths");
    for (auto c : r) {
      if (c > 3) throw std::invalid_argument("alignment cell outside {A,C,G,T}");
    }
  }
}

SequenceAlignment SequenceAlignment::with_swapped_taxa(int taxon_a, int taxon_b) const {
  auto rows = rows_;
  std::swap(rows.at(static_cast<std::size_t>(taxon_a - 1)), rows.at(static_cast<std::size_t>(taxon_b - 1)));
  return SequenceAlignment(std::move(rows));
}

SequenceAlignment SequenceAlignment::concatenated(const SequenceAlignment& other) const {
  if (other.n_taxa() != n_taxa()) throw std::invalid_argument("cannot concatenate alignments of different taxa");
  auto rows = rows_;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].insert(rows[i].end(), other.rows_[i].begin(), other.rows_[i].end());
  }
  return SequenceAlignment(std::move(rows));
}

void SequenceAlignment::write_fasta(std::ostream& out) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    out << '>' << (i + 1) << '\n';
    std::string seq(rows_[i].size(), 'A');
    for (std::size_t k = 0; k < seq.size(); ++k) seq[k] = nucleotide_char(rows_[i][k]);
    out << seq << '\n';
  }
}

SequenceAlignment SequenceAlignment::read_fasta(std::istream& in) {
  std::map<int, std::vector<std::uint8_t>> by_label;
  std::string line;
  std::vector<std::uint8_t>* current = nullptr;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      std::istringstream hs(line.substr(1));
      int label = 0;
      if (!(hs >> label) || label <= 0) {
        throw std::invalid_argument("FASTA line " + std::to_string(line_no) + ": header must be a positive taxon number");
      }
      if (by_label.count(label)) {
        throw std::invalid_argument("FASTA line " + std::to_string(line_no) + ": duplicate taxon " + std::to_string(label));
      }
      current = &by_label[label];
      continue;
    }
    if (!current) throw std::invalid_argument("FASTA line " + std::to_string(line_no) + ": sequence before header");
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      try {
        current->push_back(nucleotide_code(c));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("FASTA line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  std::vector<std::vector<std::uint8_t>> rows;
  int expect = 1;
  for (auto& [label, seq] : by_label) {
    if (label != expect++) throw std::invalid_argument("FASTA taxa must be numbered 1..n");
    rows.push_back(std::move(seq));
  }
  return SequenceAlignment(std::move(rows));
}

PhyloTarget::PhyloTarget(const SequenceAlignment& alignment, BranchLengths lengths)
    : n_taxa_(alignment.n_taxa()), n_sites_(alignment.n_sites()), lengths_(lengths) {
  std::map<std::vector<std::uint8_t>, double> counts;
  for (std::size_t s = 0; s < n_sites_; ++s) {
    std::vector<std::uint8_t> col(n_taxa_);
    for (std::size_t i = 0; i < n_taxa_; ++i) col[i] = alignment.at(i, s);
    counts[col] += 1.0;
  }
  for (auto& [col, w] : counts) {
    patterns_.push_back(col);
    weights_.push_back(w);
  }
}

void PhyloTarget::partial(const TreeTopology& tree, int node, int parent, std::vector<double>& out,
                          std::vector<double>& log_scale) const {
  const std::size_t np = weights_.size();
  out.assign(4 * np, 0.0);
  if (tree.is_leaf(node)) {
    for (std::size_t p = 0; p < np; ++p) out[4 * p + patterns_[p][static_cast<std::size_t>(node)]] = 1.0;
    return;
  }
  std::fill(out.begin(), out.end(), 1.0);
  std::vector<double> child;
  double tmp[4];
  for (int c : tree.neighbors(node)) {
    if (c == parent) continue;
    partial(tree, c, node, child, log_scale);
    const auto p = jc_transition(lengths_.of(tree, {node, c}));
    for (std::size_t k = 0; k < np; ++k) {
      propagate(p, &child[4 * k], tmp);
      for (int a = 0; a < 4; ++a) out[4 * k + static_cast<std::size_t>(a)] *= tmp[a];
    }
  }
  for (std::size_t k = 0; k < np; ++k) {
    double* v = &out[4 * k];
    const double m = std::max({v[0], v[1], v[2], v[3]});
    if (m < kRescaleThreshold && m > 0.0) {
      for (int a = 0; a < 4; ++a) v[a] /= m;
      log_scale[k] += std::log(m);
    }
  }
}

double PhyloTarget::log_likelihood(const TreeTopology& tree, std::size_t root_edge) const {
  if (tree.n_taxa() != n_taxa_) {
    throw std::invalid_argument("tree has " + std::to_string(tree.n_taxa()) + " taxa but alignment has " +
                                std::to_string(n_taxa_));
  }
  const auto e = tree.edges().at(root_edge);
  const std::size_t np = weights_.size();
  std::vector<double> log_scale(np, 0.0);
  std::vector<double> pu, pv;
  partial(tree, e.a, e.b, pu, log_scale);
  partial(tree, e.b, e.a, pv, log_scale);
  const auto p = jc_transition(lengths_.of(tree, e));
  double total = 0.0;
  double tmp[4];
  for (std::size_t k = 0; k < np; ++k) {
    propagate(p, &pv[4 * k], tmp);
    double site = 0.0;
    for (int a = 0; a < 4; ++a) site += 0.25 * pu[4 * k + static_cast<std::size_t>(a)] * tmp[a];
    total += weights_[k] * (std::log(site) + log_scale[k]);
  }
  return total;
}

TargetDensity<TreeTopology> PhyloTarget::as_target() const {
  struct Memo {
    explicit Memo(const PhyloTarget& t) : target(t) {}
    PhyloTarget target;
    std::mutex mutex;
    std::unordered_map<std::string, double> cache;
  };
  auto memo = std::make_shared<Memo>(*this);
  return TargetDensity<TreeTopology>(
      [memo](const TreeTopology& t) {
        std::string key = t.canonical();
        {
          std::lock_guard lock(memo->mutex);
          auto it = memo->cache.find(key);
          if (it != memo->cache.end()) return it->second;
        }
        const double v = memo->target.log_likelihood(t);
        std::lock_guard lock(memo->mutex);
        memo->cache.emplace(std::move(key), v);
        return v;
      },
      SpaceDescriptor::tree(n_taxa_));
}

double pruning_loglik(const TreeTopology& tree, const PhyloTarget& target, std::size_t root_edge) {
  return target.log_likelihood(tree, root_edge);
}

SequenceAlignment simulate_alignment(const TreeTopology& tree, std::size_t n_sites, Rng& rng,
                                     BranchLengths lengths) {
  if (n_sites == 0) throw ConfigError("n_sites must be >= 1");
  const std::size_t n = tree.n_taxa();
  std::vector<std::vector<std::uint8_t>> rows(n, std::vector<std::uint8_t>(n_sites));
  std::vector<std::uint8_t> state(tree.node_count());
  // Preorder from the first internal node; the traversal order is fixed per tree.
  const int root = static_cast<int>(n);
  std::vector<std::pair<int, int>> order;  // (node, parent)
  std::vector<std::pair<int, int>> stack{{root, -1}};
  while (!stack.empty()) {
    auto [v, par] = stack.back();
    stack.pop_back();
    order.emplace_back(v, par);
    const auto& nb = tree.neighbors(v);
    for (auto it = nb.rbegin(); it != nb.rend(); ++it) {
      if (*it != par) stack.emplace_back(*it, v);
    }
  }
  for (std::size_t s = 0; s < n_sites; ++s) {
    for (auto [v, par] : order) {
      if (par < 0) {
        state[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(rng.uniform_index(4));
        continue;
      }
      const auto p = jc_transition(lengths.of(tree, {par, v}));
      const std::uint8_t from = state[static_cast<std::size_t>(par)];
      std::uint8_t to = from;
      if (rng.uniform() >= p.p_same) {
        to = static_cast<std::uint8_t>(rng.uniform_index(3));
        if (to >= from) ++to;
      }
      state[static_cast<std::size_t>(v)] = to;
    }
    for (std::size_t i = 0; i < n; ++i) rows[i][s] = state[i];
  }
  return SequenceAlignment(std::move(rows));
}

TreeTopology paper_tree_a() { return TreeTopology::from_newick("((((((1,2),3),4),5),6),(7,8));"); }

TreeTopology paper_tree_b() { return TreeTopology::from_newick("((((((1,7),3),4),5),6),(2,8));"); }

SequenceAlignment build_paper_alignment(Rng& rng, std::size_t block_sites) {
  const auto block = simulate_alignment(paper_tree_a(), block_sites, rng);
  return block.concatenated(block.with_swapped_taxa(2, 7));
}

double paper_neighbor_gap(const PhyloTarget& target) {
  const auto a = paper_tree_a(), b = paper_tree_b();
  double best = kNegInf;
  for (const auto& t : {a, b}) {
    for (const auto& nb : t.nni_neighbors()) best = std::max(best, target.log_likelihood(nb));
  }
  return std::max(target.log_likelihood(a), target.log_likelihood(b)) - best;
}

double TopologyPosterior::mass_of(const TreeTopology& t) const {
  auto it = index.find(t.canonical());
  return it == index.end() ? 0.0 : probability[it->second];
}

TopologyPosterior exact_topology_posterior(const PhyloTarget& target) {
  TopologyPosterior out;
  out.trees = enumerate_topologies(target.n_taxa());
  out.log_likelihood.reserve(out.trees.size());
  for (std::size_t i = 0; i < out.trees.size(); ++i) {
    out.log_likelihood.push_back(target.log_likelihood(out.trees[i]));
    out.index.emplace(out.trees[i].canonical(), i);
  }
  const double z = log_sum_exp(out.log_likelihood);
  for (double ll : out.log_likelihood) out.probability.push_back(std::exp(ll - z));
  return out;
}

}  // namespace steep
