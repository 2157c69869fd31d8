// Copyright 2026 The Sticker Recommendation Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sr/clusterer/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "sr/common/error.hpp"
#include "sr/kernels/kernels.hpp"

namespace sr::clusterer {
namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite_into(int child_root, int new_root) { parent_[child_root] = new_root; }

 private:
  std::vector<int> parent_;
};

double distance(const Mat& p, int a, int b) { return std::sqrt(kernels::squared_distance(p.row(a), p.row(b))); }

}  // namespace

std::vector<double> core_distances(const Mat& points, int k) {
  const int n = points.rows;
  if (k < 1) throw ConfigError("core distance k must be >= 1");
  if (n < k + 1) throw Error("core distance needs at least k + 1 points");
  std::vector<double> core(n);
  std::vector<double> d(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) d[m++] = distance(points, i, j);
    }
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    core[i] = d[k - 1];
  }
  return core;
}

double mutual_reachability(std::span<const double> a, std::span<const double> b, double core_a, double core_b) {
  return std::max({core_a, core_b, std::sqrt(kernels::squared_distance(a, b))});
}

std::vector<MstEdge> minimum_spanning_tree(const Mat& points, const std::vector<double>& core) {
  const int n = points.rows;
  std::vector<MstEdge> edges;
  if (n <= 1) return edges;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> from(n, -1);
  std::vector<bool> in_tree(n, false);
  int cur = 0;
  in_tree[0] = true;
  for (int step = 1; step < n; ++step) {
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({core[cur], core[j], distance(points, cur, j)});
      if (w < best[j]) {
        best[j] = w;
        from[j] = cur;
      }
      if (next < 0 || best[j] < best[next]) next = j;
    }
    in_tree[next] = true;
    edges.push_back({from[next], next, best[next]});
    cur = next;
  }
  return edges;
}

Hierarchy single_linkage(int n_points, std::vector<MstEdge> mst) {
  if (n_points < 1) throw Error("hierarchy needs at least one point");
  if (static_cast<int>(mst.size()) != n_points - 1) throw Error("spanning tree has the wrong edge count");
  std::sort(mst.begin(), mst.end(), [](const MstEdge& x, const MstEdge& y) { return x.weight < y.weight; });
  Hierarchy h;
  h.n_points = n_points;
  h.nodes.resize(n_points);
  // Union-find over node ids; each root maps to the hierarchy node for its
  // current component.
  UnionFind uf(2 * n_points);
  for (size_t i = 0; i < mst.size();) {
    size_t j = i;
    while (j < mst.size() && mst[j].weight == mst[i].weight) ++j;
    // Group the components touched by this weight level into new components.
    std::map<int, int> level;  // union-find over the component roots touched here
    auto find = [&level](int x) {
      while (true) {
        const auto it = level.find(x);
        if (it == level.end() || it->second == x) return x;
        x = it->second;
      }
    };
    for (size_t e = i; e < j; ++e) {
      const int ra = uf.find(mst[e].a);
      const int rb = uf.find(mst[e].b);
      level.try_emplace(ra, ra);
      level.try_emplace(rb, rb);
      const int la = find(ra);
      const int lb = find(rb);
      if (la != lb) level[std::max(la, lb)] = std::min(la, lb);
    }
    std::map<int, std::vector<int>> groups;  // level root -> merged component roots
    for (const auto& entry : level) groups[find(entry.first)].push_back(entry.first);
    for (auto& [g, members] : groups) {
      HierarchyNode node;
      node.distance = mst[i].weight;
      node.size = 0;
      for (int m : members) {
        node.children.push_back(m);
        node.size += h.nodes[m].size;
      }
      const int id = static_cast<int>(h.nodes.size());
      h.nodes.push_back(std::move(node));
      for (int m : members) uf.unite_into(m, id);
    }
    i = j;
  }
  return h;
}

CondensedTree condense(const Hierarchy& h, int min_cluster_size) {
  if (min_cluster_size < 2) throw ConfigError("min_cluster_size must be >= 2");
  const int n = h.n_points;
  CondensedTree t;
  t.point_cluster.assign(n, 0);
  t.point_lambda.assign(n, 0.0);
  const double top = h.nodes[h.root()].distance;
  const double floor = top * 1e-12;
  auto lambda_of = [&](double d) { return 1.0 / std::max(d, floor); };

  t.clusters.push_back({-1, lambda_of(top), 0.0, h.nodes[h.root()].size, {}});

  auto fall_out = [&](int node, int cluster, double lambda) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (x < n) {
        t.point_cluster[x] = cluster;
        t.point_lambda[x] = lambda;
      } else {
        for (int c : h.nodes[x].children) stack.push_back(c);
      }
    }
  };

  // (hierarchy node, cluster it belongs to)
  std::vector<std::pair<int, int>> work{{h.root(), 0}};
  while (!work.empty()) {
    const auto [node, cluster] = work.back();
    work.pop_back();
    if (node < n) {
      // Only reachable when min_cluster_size == 1, which is rejected above.
      fall_out(node, cluster, std::numeric_limits<double>::infinity());
      continue;
    }
    const HierarchyNode& hn = h.nodes[node];
    const double lambda = lambda_of(hn.distance);
    std::vector<int> big;
    for (int c : hn.children) {
      if (h.nodes[c].size >= min_cluster_size) {
        big.push_back(c);
      } else {
        fall_out(c, cluster, lambda);
      }
    }
    if (big.size() == 1) {
      work.emplace_back(big[0], cluster);
    } else {
      for (int c : big) {
        const int id = static_cast<int>(t.clusters.size());
        t.clusters.push_back({cluster, lambda, 0.0, h.nodes[c].size, {}});
        t.clusters[cluster].children.push_back(id);
        work.emplace_back(c, id);
      }
    }
  }

  for (int p = 0; p < n; ++p) {
    auto& c = t.clusters[t.point_cluster[p]];
    c.stability += t.point_lambda[p] - c.birth_lambda;
  }
  for (size_t id = 1; id < t.clusters.size(); ++id) {
    auto& parent = t.clusters[t.clusters[id].parent];
    parent.stability += t.clusters[id].size * (t.clusters[id].birth_lambda - parent.birth_lambda);
  }
  return t;
}

std::vector<int> select_clusters(const CondensedTree& tree) {
  const size_t m = tree.clusters.size();
  std::vector<double> subtree(m, 0.0);
  std::vector<bool> selected(m, false);
  // Children always have larger ids than their parent.
  for (size_t i = m; i-- > 0;) {
    const auto& c = tree.clusters[i];
    double children = 0.0;
    for (int k : c.children) children += subtree[k];
    if (!c.children.empty() && children > c.stability) {
      subtree[i] = children;
    } else {
      subtree[i] = c.stability;
      selected[i] = true;
      std::vector<int> stack(c.children.begin(), c.children.end());
      while (!stack.empty()) {
        const int k = stack.back();
        stack.pop_back();
        selected[k] = false;
        for (int g : tree.clusters[k].children) stack.push_back(g);
      }
    }
  }
  std::vector<int> out;
  for (size_t i = 0; i < m; ++i) {
    if (selected[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> hdbscan(const Mat& points, int min_cluster_size) {
  if (min_cluster_size < 2) throw ConfigError("min_cluster_size must be >= 2");
  const int n = points.rows;
  std::vector<int> labels(n, -1);
  if (n == 0) return labels;
  if (n < min_cluster_size) return labels;
  const int k = std::min(min_cluster_size, n - 1);
  if (k < 1) return labels;
  const std::vector<double> core = core_distances(points, k);
  const Hierarchy h = single_linkage(n, minimum_spanning_tree(points, core));
  if (h.nodes[h.root()].distance == 0.0) {
    std::fill(labels.begin(), labels.end(), 0);
    return labels;
  }
  const CondensedTree tree = condense(h, min_cluster_size);
  const std::vector<int> sel = select_clusters(tree);
  std::vector<int> chosen(tree.clusters.size(), -1);
  for (int s : sel) chosen[s] = s;
  // Map each cluster to its selected ancestor (or itself).
  std::vector<int> owner(tree.clusters.size(), -1);
  for (size_t i = 0; i < tree.clusters.size(); ++i) {
    const int p = tree.clusters[i].parent;
    owner[i] = chosen[i] >= 0 ? static_cast<int>(i) : (p >= 0 ? owner[p] : -1);
  }
  const double root_birth = tree.clusters[0].birth_lambda;
  std::map<int, int> dense;
  for (int p = 0; p < n; ++p) {
    const int c = tree.point_cluster[p];
    const int o = owner[c];
    if (o < 0) continue;
    if (o == 0 && c == 0 && tree.point_lambda[p] <= root_birth) continue;
    const auto it = dense.emplace(o, static_cast<int>(dense.size())).first;
    labels[p] = it->second;
  }
  return labels;
}

}  // namespace sr::clusterer
