#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "steep/phylo.hpp"

using namespace steep;

namespace {

SequenceAlignment one_site(std::vector<std::uint8_t> codes) {
  std::vector<std::vector<std::uint8_t>> rows;
  for (auto c : codes) rows.push_back({c});
  return SequenceAlignment(rows);
}

// Likelihood of ((1,2),(3,4)) at one site by summing over both internal states.
double quartet_brute_force(const std::vector<std::uint8_t>& x, double tip, double inner) {
  auto p = [](int a, int b, double len) { return a == b ? oracle::jc_same(len) : oracle::jc_diff(len); };
  double total = 0.0;
  for (int u = 0; u < 4; ++u) {
    for (int v = 0; v < 4; ++v) {
      total += 0.25 * p(u, v, inner) * p(u, x[0], tip) * p(u, x[1], tip) * p(v, x[2], tip) * p(v, x[3], tip);
    }
  }
  return std::log(total);
}

}  // namespace

TEST_SUITE("phylo") {
  TEST_CASE("jukes-cantor transition") {
    CHECK(jc_transition(0).p_same == 1.0);
    CHECK(jc_transition(0).p_diff == 0.0);
    CHECK(jc_transition(1e6).p_same == doctest::Approx(0.25));
    CHECK(jc_transition(1e6).p_diff == doctest::Approx(0.25));
    CHECK(jc_transition(0.1).p_same == doctest::Approx(0.90638).epsilon(1e-5));
    CHECK(jc_transition(0.1).p_same == doctest::Approx(oracle::jc_same(0.1)).epsilon(1e-14));
    CHECK(jc_transition(0.3).p_same + 3 * jc_transition(0.3).p_diff == doctest::Approx(1.0));
    CHECK_THROWS_AS(jc_transition(-0.1), ConfigError);
  }

  TEST_CASE("pruning matches a brute-force sum on four taxa") {
    const auto quartet = TreeTopology::from_newick("((1,2),(3,4));");
    const BranchLengths bl{0.1, 0.01};
    for (const auto& site : std::vector<std::vector<std::uint8_t>>{{0, 0, 0, 0}, {0, 1, 0, 1}, {2, 2, 3, 3}, {0, 1, 2, 3}}) {
      const PhyloTarget t(one_site(site), bl);
      CHECK(pruning_loglik(quartet, t) == doctest::Approx(quartet_brute_force(site, 0.01, 0.1)).epsilon(1e-12));
    }
  }

  TEST_CASE("likelihood does not depend on the root edge") {
    Rng rng(1, 0);
    const auto a = paper_tree_a();
    const PhyloTarget t(simulate_alignment(a, 500, rng));
    const auto other = TreeTopology::from_newick("(1,((2,3),(4,5)),((6,7),8));");
    for (const auto& tree : {a, other}) {
      const double ref = t.log_likelihood(tree, 0);
      for (std::size_t e = 1; e < tree.edges().size(); ++e) CHECK(std::abs(t.log_likelihood(tree, e) - ref) < 1e-10);
    }
  }

  TEST_CASE("pattern pooling does not change the likelihood") {
    Rng rng(2, 0);
    const auto aln = simulate_alignment(paper_tree_a(), 300, rng);
    const PhyloTarget pooled(aln);
    CHECK(pooled.n_patterns() < 300);
    double sum = 0.0;
    for (std::size_t s = 0; s < aln.n_sites(); ++s) {
      std::vector<std::vector<std::uint8_t>> rows;
      for (std::size_t i = 0; i < aln.n_taxa(); ++i) rows.push_back({aln.at(i, s)});
      sum += PhyloTarget(SequenceAlignment(rows)).log_likelihood(paper_tree_b());
    }
    CHECK(pooled.log_likelihood(paper_tree_b()) == doctest::Approx(sum).epsilon(1e-12));
  }

  TEST_CASE("taxa mismatch is an error") {
    const PhyloTarget t(one_site({0, 0, 0, 0}));
    CHECK_THROWS(t.log_likelihood(paper_tree_a()));
    CHECK_THROWS_AS(t.as_target().log_density(paper_tree_a()), DimensionError);
  }

  TEST_CASE("the two-tree alignment") {
    Rng rng(7, 0);
    const auto aln = build_paper_alignment(rng);
    CHECK(aln.n_sites() == 2000);
    CHECK(aln.n_taxa() == 8);
    const PhyloTarget t(aln);
    const double la = t.log_likelihood(paper_tree_a()), lb = t.log_likelihood(paper_tree_b());
    CHECK(std::abs(la - lb) < 1e-8);
    double best = -1e300;
    for (const auto& tree : {paper_tree_a(), paper_tree_b()}) {
      for (const auto& nb : tree.nni_neighbors()) best = std::max(best, t.log_likelihood(nb));
    }
    CHECK(la - best > 0.0);
    CHECK(paper_neighbor_gap(t) == doctest::Approx(la - best).epsilon(1e-12));
  }

  TEST_CASE("some realizations favor a neighbor of A or B") {
    int separated = 0, not_separated = 0;
    for (std::uint64_t s = 1; s <= 12; ++s) {
      Rng rng(s, 0);
      (paper_neighbor_gap(PhyloTarget(build_paper_alignment(rng))) > 0 ? separated : not_separated) += 1;
    }
    CHECK(separated > 0);
    CHECK(not_separated > 0);
  }

  TEST_CASE("zero branch lengths copy the root sequence") {
    Rng rng(4, 0);
    const auto aln = simulate_alignment(paper_tree_a(), 1000, rng, {0.0, 0.0});
    for (std::size_t i = 1; i < 8; ++i) CHECK(aln.row(i) == aln.row(0));
    CHECK_THROWS_AS(simulate_alignment(paper_tree_a(), 0, rng), ConfigError);
  }

  TEST_CASE("simulated mismatch fraction and marginals") {
    Rng rng(5, 0);
    const std::size_t n = 100000;
    const auto aln = simulate_alignment(paper_tree_a(), n, rng);
    // Taxa 1 and 2 are cherries: path length two tips. Taxa 1 and 8: 2 tips + 5 inner edges.
    const std::pair<int, double> cases[] = {{1, 0.02}, {7, 0.02 + 5 * 0.1}};
    for (const auto& [other, len] : cases) {
      double mism = 0;
      for (std::size_t s = 0; s < n; ++s) mism += aln.at(0, s) != aln.at(static_cast<std::size_t>(other), s);
      const double p = 3 * oracle::jc_diff(len);
      CHECK(std::abs(mism / n - p) < 4 * std::sqrt(p * (1 - p) / n));
    }
    std::vector<double> counts(4, 0.0);
    for (std::size_t s = 0; s < n; ++s) counts[aln.at(3, s)] += 1;
    CHECK(oracle::chi2_sf(oracle::chi2_stat(counts, std::vector<double>(4, n / 4.0)), 3) > 0.001);
  }

  TEST_CASE("topology enumeration counts") {
    CHECK(enumerate_topologies(4).size() == 3);
    CHECK(enumerate_topologies(5).size() == 15);
    CHECK(enumerate_topologies(6).size() == 105);
    const auto all8 = enumerate_topologies(8);
    CHECK(all8.size() == 10395);
    CHECK(topology_count(8) == 10395);
    std::set<std::string> distinct;
    for (const auto& t : all8) distinct.insert(t.canonical());
    CHECK(distinct.size() == 10395);
    CHECK_THROWS_AS(enumerate_topologies(9), ConfigError);
  }

  TEST_CASE("nni connects all six-taxon topologies") {
    const auto start = enumerate_topologies(6).front();
    std::set<std::string> seen{start.canonical()};
    std::deque<TreeTopology> q{start};
    while (!q.empty()) {
      const auto t = q.front();
      q.pop_front();
      for (const auto& nb : t.nni_neighbors()) {
        if (seen.insert(nb.canonical()).second) q.push_back(nb);
      }
    }
    CHECK(seen.size() == 105);
  }

  TEST_CASE("tree shape and canonical form") {
    const auto a = paper_tree_a();
    CHECK(a.edges().size() == 13);
    CHECK(a.internal_edges().size() == 5);
    for (std::size_t v = 0; v < a.node_count(); ++v) {
      CHECK(a.neighbors(static_cast<int>(v)).size() == (a.is_leaf(static_cast<int>(v)) ? 1u : 3u));
    }
    CHECK(TreeTopology::from_newick(a.canonical()).canonical() == a.canonical());
    CHECK(TreeTopology::from_newick("((2,1),(4,3));") == TreeTopology::from_newick("((3,4),(1,2));"));
    CHECK_FALSE(TreeTopology::from_newick("((1,3),(2,4));") == TreeTopology::from_newick("((1,2),(3,4));"));
    CHECK(TreeTopology::from_newick("(1,2,(3,4));").canonical() == "(1,2,(3,4));");
    CHECK(a.path_length(1, 2) == 2);
    CHECK(a.path_length(1, 8) == 7);
    CHECK_THROWS(TreeTopology::from_newick("((1,2),(3,3));"));
    CHECK_THROWS(TreeTopology::from_newick("((1,2),(3,4)"));
  }

  TEST_CASE("posterior concentrates on the generating quartet") {
    Rng rng(6, 0);
    const auto gen = TreeTopology::from_newick("((1,3),(2,4));");
    const PhyloTarget t(simulate_alignment(gen, 10000, rng));
    const auto post = exact_topology_posterior(t);
    CHECK(post.trees.size() == 3);
    CHECK(post.mass_of(gen) > 0.9);
  }

  TEST_CASE("posterior of the two-tree alignment") {
    Rng rng(7, 0);
    const PhyloTarget t(build_paper_alignment(rng));
    const auto post = exact_topology_posterior(t);
    const double a = post.mass_of(paper_tree_a()), b = post.mass_of(paper_tree_b());
    CHECK(std::abs(a - b) < 1e-6);
    CHECK(a + b > 0.99);
  }

  TEST_CASE("no sites gives a uniform posterior") {
    const PhyloTarget t(SequenceAlignment(std::vector<std::vector<std::uint8_t>>(5)));
    const auto post = exact_topology_posterior(t);
    for (double p : post.probability) CHECK(p == doctest::Approx(1.0 / 15));
  }

  TEST_CASE("fasta round trip and errors") {
    Rng rng(8, 0);
    const auto aln = simulate_alignment(paper_tree_a(), 137, rng);
    std::stringstream ss;
    aln.write_fasta(ss);
    const auto back = SequenceAlignment::read_fasta(ss);
    REQUIRE(back.n_taxa() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(back.row(i) == aln.row(i));
    std::stringstream bad_char(">1\nACGX\n>2\nACGT\n");
    CHECK_THROWS(SequenceAlignment::read_fasta(bad_char));
    std::stringstream ragged(">1\nACGT\n>2\nACG\n");
    CHECK_THROWS(SequenceAlignment::read_fasta(ragged));
    std::stringstream gap(">1\nACGT\n>3\nACGT\n");
    CHECK_THROWS(SequenceAlignment::read_fasta(gap));
    std::stringstream headless("ACGT\n");
    CHECK_THROWS(SequenceAlignment::read_fasta(headless));
  }

  TEST_CASE("memoized target matches direct pruning") {
    Rng rng(9, 0);
    const PhyloTarget t(simulate_alignment(paper_tree_a(), 200, rng));
    const auto target = t.as_target();
    for (const auto& tree : paper_tree_a().nni_neighbors()) {
      CHECK(target.log_density(tree) == t.log_likelihood(tree));
      CHECK(target.log_density(tree) == t.log_likelihood(tree));
    }
  }
}
