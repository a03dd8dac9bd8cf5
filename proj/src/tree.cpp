#include "steep/tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <memory>
#include <queue>
#include <stdexcept>

namespace steep {
namespace {

struct NewickNode {
  int label = 0;  // > 0 for leaves
  std::vector<std::unique_ptr<NewickNode>> children;
};

class NewickParser {
 public:
  explicit NewickParser(std::string_view s) : s_(s) {}

  std::unique_ptr<NewickNode> parse() {
    skip_ws();
    auto root = subtree();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ';') ++pos_;
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return root;
  }

 private:
  std::unique_ptr<NewickNode> subtree() {
    auto node = std::make_unique<NewickNode>();
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      node->children.push_back(subtree());
      skip_ws();
      while (peek() == ',') {
        ++pos_;
        node->children.push_back(subtree());
        skip_ws();
      }
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      skip_label();
    } else {
      node->label = integer();
    }
    skip_length();
    return node;
  }

  int integer() {
    skip_ws();
    int value = 0;
    auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
    if (ec != std::errc() || value <= 0) fail("expected a positive integer taxon label");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return value;
  }

  void skip_label() {
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
  }

  void skip_length() {
    skip_ws();
    if (peek() != ':') return;
    ++pos_;
    while (pos_ < s_.size() && std::string_view("0123456789.eE+-").find(s_[pos_]) != std::string_view::npos) ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("newick parse error at offset " + std::to_string(pos_) + ": " + what);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void count_leaves(const NewickNode& node, std::vector<int>& labels) {
  if (node.children.empty()) {
    labels.push_back(node.label);
    return;
  }
  for (const auto& c : node.children) count_leaves(*c, labels);
}

int emit_edges(const NewickNode& node, int& next_internal, std::vector<TreeTopology::Edge>& edges) {
  if (node.children.empty()) return node.label - 1;
  if (node.children.size() != 2) throw std::invalid_argument("newick tree is not binary");
  const int id = next_internal++;
  for (const auto& c : node.children) edges.push_back({id, emit_edges(*c, next_internal, edges)});
  return id;
}

}  // namespace

TreeTopology::TreeTopology(std::size_t n_taxa, const std::vector<Edge>& edges) : n_(n_taxa) {
  if (n_taxa < 3) throw ConfigError("a tree needs at least 3 taxa");
  const std::size_t nodes = 2 * n_taxa - 2;
  if (edges.size() != 2 * n_taxa - 3) {
    throw std::invalid_argument("unrooted binary tree on " + std::to_string(n_taxa) + " taxa needs " +
                                std::to_string(2 * n_taxa - 3) + " edges");
  }
  adj_.assign(nodes, {-1, -1, -1});
  std::vector<int> degree(nodes, 0);
  auto attach = [&](int from, int to) {
    const auto v = static_cast<std::size_t>(from);
    const int cap = is_leaf(from) ? 1 : 3;
    if (degree[v] >= cap) throw std::invalid_argument("tree node has wrong degree");
    adj_[v][static_cast<std::size_t>(degree[v]++)] = to;
  };
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(e.a) >= nodes ||
        static_cast<std::size_t>(e.b) >= nodes || e.a == e.b) {
      throw std::invalid_argument("tree edge references an invalid node");
    }
    attach(e.a, e.b);
    attach(e.b, e.a);
  }
  for (std::size_t v = 0; v < nodes; ++v) {
    const int want = v < n_ ? 1 : 3;
    if (degree[v] != want) throw std::invalid_argument("tree node has wrong degree");
    sort_node(static_cast<int>(v));
  }
  std::vector<char> seen(nodes, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : neighbors(u)) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        q.push(w);
      }
    }
  }
  if (reached != nodes) throw std::invalid_argument("tree is not connected");
}

void TreeTopology::sort_node(int node) {
  if (!is_leaf(node)) {
    auto& a = adj_[static_cast<std::size_t>(node)];
    std::sort(a.begin(), a.end());
  }
}

std::vector<TreeTopology::Edge> TreeTopology::edges() const {
  std::vector<Edge> out;
  out.reserve(2 * n_ - 3);
  for (std::size_t u = 0; u < adj_.size(); ++u) {
    for (int w : neighbors(static_cast<int>(u))) {
      if (static_cast<int>(u) < w) out.push_back({static_cast<int>(u), w});
    }
  }
  return out;
}

std::vector<TreeTopology::Edge> TreeTopology::internal_edges() const {
  std::vector<Edge> out;
  out.reserve(n_ - 3);
  for (std::size_t u = n_; u < adj_.size(); ++u) {
    for (int w : neighbors(static_cast<int>(u))) {
      if (static_cast<int>(u) < w) out.push_back({static_cast<int>(u), w});
    }
  }
  return out;
}

TreeTopology TreeTopology::from_newick(std::string_view newick) {
  auto root = NewickParser(newick).parse();
  std::vector<int> labels;
  count_leaves(*root, labels);
  const std::size_t n = labels.size();
  std::sort(labels.begin(), labels.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != static_cast<int>(i) + 1) {
      throw std::invalid_argument("newick taxa must be exactly 1..n, each once");
    }
  }
  if (n < 3) throw ConfigError("a tree needs at least 3 taxa");
  int next_internal = static_cast<int>(n);
  std::vector<Edge> edges;
  if (root->children.size() == 2) {
    const int a = emit_edges(*root->children[0], next_internal, edges);
    const int b = emit_edges(*root->children[1], next_internal, edges);
    edges.push_back({a, b});
  } else if (root->children.size() == 3) {
    const int id = next_internal++;
    for (const auto& c : root->children) edges.push_back({id, emit_edges(*c, next_internal, edges)});
  } else {
    throw std::invalid_argument("newick top level must have 2 or 3 children");
  }
  return TreeTopology(n, edges);
}

TreeTopology TreeTopology::nni(std::size_t internal_index, int variant) const {
  if (internal_index >= internal_edge_count()) throw std::out_of_range("NNI edge index out of range");
  if (variant != 0 && variant != 1) throw std::out_of_range("NNI variant must be 0 or 1");
  const Edge e = internal_edges()[internal_index];
  auto others = [&](int node, int excluded) {
    std::array<int, 2> out{};
    std::size_t k = 0;
    for (int w : neighbors(node)) {
      if (w != excluded) out[k++] = w;
    }
    return out;
  };
  const auto uo = others(e.a, e.b);  // {a, b}
  const auto vo = others(e.b, e.a);  // {c, d}
  const int moved_from_u = uo[1];
  const int moved_from_v = vo[static_cast<std::size_t>(variant)];

  TreeTopology out = *this;
  auto replace = [&](int node, int from, int to) {
    auto& nb = out.adj_[static_cast<std::size_t>(node)];
    std::replace(nb.begin(), nb.begin() + (out.is_leaf(node) ? 1 : 3), from, to);
    out.sort_node(node);
  };
  replace(e.a, moved_from_u, moved_from_v);
  replace(e.b, moved_from_v, moved_from_u);
  replace(moved_from_u, e.a, e.b);
  replace(moved_from_v, e.b, e.a);
  return out;
}

std::vector<TreeTopology> TreeTopology::nni_neighbors() const {
  std::vector<TreeTopology> out;
  out.reserve(2 * internal_edge_count());
  for (std::size_t i = 0; i < internal_edge_count(); ++i) {
    out.push_back(nni(i, 0));
    out.push_back(nni(i, 1));
  }
  return out;
}

std::string TreeTopology::encode_subtree(int node, int parent, int& min_label) const {
  if (is_leaf(node)) {
    min_label = node + 1;
    return std::to_string(node + 1);
  }
  std::vector<std::pair<int, std::string>> parts;
  for (int w : neighbors(node)) {
    if (w == parent) continue;
    int m = 0;
    std::string s = encode_subtree(w, node, m);
    parts.emplace_back(m, std::move(s));
  }
  std::sort(parts.begin(), parts.end());
  min_label = parts.front().first;
  std::string out = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i].second;
  }
  out += ')';
  return out;
}

std::string TreeTopology::canonical() const {
  const int anchor = adj_[0][0];
  int m = 0;
  std::string inner = encode_subtree(anchor, 0, m);
  // inner is "(X,Y)"; splice taxon 1 in front to get the unrooted trifurcation.
  return "(1," + inner.substr(1) + ";";
}

int TreeTopology::path_length(int taxon_a, int taxon_b) const {
  const int src = taxon_a - 1;
  const int dst = taxon_b - 1;
  if (src < 0 || dst < 0 || src >= static_cast<int>(n_) || dst >= static_cast<int>(n_)) {
    throw std::out_of_range("taxon label out of range");
  }
  std::vector<int> dist(adj_.size(), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(src)] = 0;
  q.push(src);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    if (u == dst) return dist[static_cast<std::size_t>(u)];
    for (int w : neighbors(u)) {
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
        q.push(w);
      }
    }
  }
  return -1;
}

TreeTopology TreeTopology::with_leaf_on_edge(std::size_t edge_index) const {
  const auto old_edges = edges();
  if (edge_index >= old_edges.size()) throw std::out_of_range("edge index out of range");
  const int n_old = static_cast<int>(n_);
  // Leaves keep their ids, internal ids shift up by one to make room for the new leaf.
  auto remap = [n_old](int v) { return v < n_old ? v : v + 1; };
  const int new_leaf = n_old;
  const int new_internal = 2 * (n_old + 1) - 3;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < old_edges.size(); ++i) {
    const Edge e{remap(old_edges[i].a), remap(old_edges[i].b)};
    if (i == edge_index) {
      edges.push_back({e.a, new_internal});
      edges.push_back({new_internal, e.b});
      edges.push_back({new_internal, new_leaf});
    } else {
      edges.push_back(e);
    }
  }
  return TreeTopology(n_ + 1, edges);
}

void check_state(const SpaceDescriptor& space, const TreeTopology& t) {
  if (space.kind != SpaceKind::tree) throw std::invalid_argument("tree passed to a non-tree target");
  if (t.n_taxa() != space.size) throw DimensionError(space.size, t.n_taxa());
}

std::size_t topology_count(std::size_t n_taxa) {
  std::size_t count = 1;
  for (std::size_t k = 3; k + 2 <= 2 * n_taxa - 3; k += 2) count *= k;
  return count;
}

std::vector<TreeTopology> enumerate_topologies(std::size_t n_taxa) {
  if (n_taxa < 4 || n_taxa > 8) {
    throw ConfigError("exhaustive topology enumeration supports 4 to 8 taxa, got " +
                      std::to_string(n_taxa));
  }
  std::vector<TreeTopology> current{TreeTopology(3, {{3, 0}, {3, 1}, {3, 2}})};
  for (std::size_t n = 3; n < n_taxa; ++n) {
    std::vector<TreeTopology> next;
    next.reserve(current.size() * (2 * n - 3));
    for (const auto& t : current) {
      for (std::size_t e = 0; e < t.edges().size(); ++e) next.push_back(t.with_leaf_on_edge(e));
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace steep
