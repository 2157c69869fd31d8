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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "sr/clusterer/cluster_model.hpp"
#include "sr/clusterer/hdbscan.hpp"
#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "support/hdbscan_oracle.hpp"

using namespace sr;
using namespace sr::clusterer;

namespace {

using testing::HdbscanOracle;

Mat random_points(Rng& rng, int n, bool grid) {
  Mat p(n, 2);
  const int blobs = 1 + static_cast<int>(rng.below(3));
  for (int i = 0; i < n; ++i) {
    if (grid) {
      p(i, 0) = static_cast<double>(rng.below(6));
      p(i, 1) = static_cast<double>(rng.below(6));
    } else {
      const double cx = 10.0 * static_cast<double>(i % blobs);
      p(i, 0) = cx + rng.normal();
      p(i, 1) = rng.normal();
    }
  }
  return p;
}

std::set<std::pair<double, std::vector<int>>> hierarchy_nodes(const Hierarchy& h) {
  std::set<std::pair<double, std::vector<int>>> out;
  for (size_t id = h.n_points; id < h.nodes.size(); ++id) {
    std::vector<int> members;
    std::vector<int> stack{static_cast<int>(id)};
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (x < h.n_points) {
        members.push_back(x);
      } else {
        for (int c : h.nodes[x].children) stack.push_back(c);
      }
    }
    std::sort(members.begin(), members.end());
    out.emplace(h.nodes[id].distance, members);
  }
  return out;
}

// Minimum total weight over all labeled trees, enumerated by Prufer sequence.
double brute_force_mst_weight(const Mat& w) {
  const int n = w.rows;
  if (n == 2) return w(0, 1);
  std::vector<int> seq(n - 2, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> degree(n, 1);
    for (int x : seq) ++degree[x];
    double total = 0.0;
    for (int x : seq) {
      int leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      total += w(leaf, x);
      --degree[leaf];
      --degree[x];
    }
    int u = -1, v = -1;
    for (int i = 0; i < n; ++i) {
      if (degree[i] == 1) (u < 0 ? u : v) = i;
    }
    total += w(u, v);
    best = std::min(best, total);
    int pos = 0;
    while (pos < n - 2 && ++seq[pos] == n) seq[pos++] = 0;
    if (pos == n - 2) break;
  }
  return best;
}

std::vector<corpus::Conversation> conversations(const std::vector<std::vector<std::string>>& raw) {
  std::vector<corpus::Conversation> out;
  for (const auto& c : raw) {
    corpus::Conversation conv;
    for (const auto& m : c) conv.push_back(corpus::make_message(m));
    out.push_back(conv);
  }
  return out;
}

}  // namespace

TEST_SUITE("clusterer") {
  TEST_CASE("core distances against sorted brute force") {
    Mat p(4, 1);
    p.data = {0.0, 1.0, 3.0, 7.0};
    const auto c1 = core_distances(p, 1);
    CHECK(c1 == std::vector<double>{1.0, 1.0, 2.0, 4.0});
    const auto c2 = core_distances(p, 2);
    CHECK(c2 == std::vector<double>{3.0, 2.0, 3.0, 6.0});
    CHECK_THROWS(core_distances(p, 4));
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const Mat q = random_points(rng, 3 + static_cast<int>(rng.below(12)), trial % 2 == 0);
      const int k = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(q.rows - 1)));
      HdbscanOracle o(q, k);
      const auto got = core_distances(q, k);
      for (int i = 0; i < q.rows; ++i) CHECK(got[i] == doctest::Approx(o.core()[i]).epsilon(1e-12));
    }
    const double a[] = {0.0, 0.0};
    const double b[] = {3.0, 4.0};
    CHECK(mutual_reachability(a, b, 1.0, 2.0) == 5.0);
    CHECK(mutual_reachability(a, b, 6.0, 2.0) == 6.0);
  }

  TEST_CASE("spanning tree weight matches enumeration of all trees") {
    Rng rng(11);
    for (int n = 2; n <= 9; ++n) {
      const int trials = n <= 7 ? 6 : 2;
      for (int t = 0; t < trials; ++t) {
        const Mat p = random_points(rng, n, t % 2 == 0);
        const int mcs = 2 + static_cast<int>(rng.below(2));
        HdbscanOracle o(p, std::min(mcs, n));
        const auto core = core_distances(p, std::min(mcs, n - 1));
        const auto mst = minimum_spanning_tree(p, core);
        REQUIRE(static_cast<int>(mst.size()) == n - 1);
        double total = 0.0;
        std::vector<int> comp(n);
        std::iota(comp.begin(), comp.end(), 0);
        for (const auto& e : mst) {
          CHECK(e.weight == doctest::Approx(o.weights()(e.a, e.b)).epsilon(1e-12));
          total += e.weight;
          const int from = comp[e.b], to = comp[e.a];
          for (int& c : comp) {
            if (c == from) c = to;
          }
        }
        CHECK(std::all_of(comp.begin(), comp.end(), [&](int c) { return c == comp[0]; }));
        CHECK(total == doctest::Approx(brute_force_mst_weight(o.weights())).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("hierarchy matches the top-down bottleneck construction") {
    Rng rng(21);
    for (int trial = 0; trial < 80; ++trial) {
      const int n = 2 + static_cast<int>(rng.below(20));
      const Mat p = random_points(rng, n, trial % 2 == 0);
      const int k = std::min(2 + static_cast<int>(rng.below(3)), n - 1);
      HdbscanOracle o(p, k);
      const auto h = single_linkage(n, minimum_spanning_tree(p, core_distances(p, k)));
      CHECK(h.nodes[h.root()].size == n);
      const auto got = hierarchy_nodes(h);
      const auto want = o.hierarchy();
      REQUIRE(got.size() == want.size());
      auto g = got.begin();
      for (auto w = want.begin(); w != want.end(); ++w, ++g) {
        CHECK(g->first == doctest::Approx(w->first).epsilon(1e-12));
        CHECK(g->second == w->second);
      }
    }
  }

  TEST_CASE("tied edges merge in one n-ary step") {
    // four corners of a unit square: every spanning edge has weight 1
    Mat p(4, 2);
    p.data = {0, 0, 1, 0, 0, 1, 1, 1};
    const auto h = single_linkage(4, minimum_spanning_tree(p, core_distances(p, 1)));
    REQUIRE(h.nodes.size() == 5);
    CHECK(h.nodes[4].children.size() == 4);
    CHECK(h.nodes[4].distance == 1.0);
    std::vector<MstEdge> edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}};
    std::vector<MstEdge> reversed(edges.rbegin(), edges.rend());
    CHECK(hierarchy_nodes(single_linkage(4, edges)) == hierarchy_nodes(single_linkage(4, reversed)));
    CHECK_THROWS(single_linkage(4, {{0, 1, 1.0}}));
  }

  TEST_CASE("labels match the reference over random point sets") {
    Rng rng(31);
    int clustered = 0, with_noise = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(30));
      const Mat p = random_points(rng, n, trial % 3 == 0);
      const int mcs = 2 + static_cast<int>(rng.below(4));
      CAPTURE(trial);
      CAPTURE(n);
      CAPTURE(mcs);
      std::vector<int> want(n, -1);
      if (n >= 2) want = HdbscanOracle(p, mcs).labels();
      const auto got = hdbscan(p, mcs);
      CHECK(got == want);
      clustered += *std::max_element(got.begin(), got.end()) >= 1;
      with_noise += std::count(got.begin(), got.end(), -1) > 0;
    }
    // the random sets exercise both multi-cluster and noisy outcomes
    CHECK(clustered > 30);
    CHECK(with_noise > 30);
  }

  TEST_CASE("labels do not depend on point order") {
    Rng rng(41);
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 4 + static_cast<int>(rng.below(20));
      const Mat p = random_points(rng, n, trial % 2 == 0);
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      Mat q(n, 2);
      for (int i = 0; i < n; ++i) std::copy_n(p.row(perm[i]).begin(), 2, q.row(i).begin());
      const auto a = hdbscan(p, 3);
      const auto b = hdbscan(q, 3);
      // same partition up to relabeling, same noise
      std::map<int, int> map;
      for (int i = 0; i < n; ++i) {
        const int la = a[perm[i]], lb = b[i];
        CHECK((la < 0) == (lb < 0));
        if (la >= 0) CHECK(map.emplace(la, lb).first->second == lb);
      }
    }
  }

  TEST_CASE("separated blobs, identical points and tiny inputs") {
    Mat p(10, 2);
    for (int i = 0; i < 5; ++i) {
      p(i, 0) = 0.1 * i;
      p(i + 5, 0) = 50.0 + 0.1 * i;
      p(i + 5, 1) = 0.05 * (i % 2);
    }
    CHECK(hdbscan(p, 3) == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    CHECK(hdbscan(Mat(6, 3, 0.25), 3) == std::vector<int>(6, 0));
    CHECK(hdbscan(Mat(2, 2), 3) == std::vector<int>(2, -1));
    CHECK(hdbscan(Mat(0, 2), 3).empty());
    CHECK_THROWS_AS(hdbscan(p, 1), ConfigError);
  }

  TEST_CASE("phrase counting") {
    const auto convs = conversations({{"ok", "OK", "good night", "<sticker>", "a b c d e f"}, {"ok", "good night"}});
    const auto phrases = count_phrases(convs, 10);
    REQUIRE(phrases.size() == 2);
    CHECK(phrases[0].phrase == "ok");
    CHECK(phrases[0].freq == 3);
    CHECK(phrases[1].phrase == "good night");
    CHECK(phrases[1].freq == 2);
    CHECK(count_phrases(convs, 1).size() == 1);
    CHECK(count_phrases(convs, 10, 6).size() == 3);
    const auto ties = count_phrases(conversations({{"b", "a", "c"}}), 10);
    CHECK(ties[0].phrase == "a");
    CHECK(ties[2].phrase == "c");
  }

  TEST_CASE("row normalisation keeps zero rows") {
    Mat m(2, 2);
    m.data = {3.0, 4.0, 0.0, 0.0};
    const Mat u = l2_normalize_rows(m);
    CHECK(u(0, 0) == doctest::Approx(0.6));
    CHECK(u(0, 1) == doctest::Approx(0.8));
    CHECK(u(1, 0) == 0.0);
  }

  TEST_CASE("model from labels, export and cluster table") {
    const std::vector<PhraseFreq> phrases = {{"a", 10}, {"b", 9}, {"c", 8}, {"d", 7}, {"e", 30}};
    const ClusterModel m = model_from_labels(phrases, {5, -1, 5, 2, -1});
    CHECK(m.num_clusters() == 4);
    CHECK(m.assignment.at("a") == 0);
    CHECK(m.assignment.at("b") == 1);
    CHECK(m.assignment.at("c") == 0);
    CHECK(m.assignment.at("d") == 2);
    CHECK(m.assignment.at("e") == 3);
    CHECK_THROWS(model_from_labels({{"a", 1}, {"a", 2}}, {0, 0}));
    CHECK_THROWS(model_from_labels(phrases, {0}));

    // totals: {a,c}=18, b=9, d=7, e=30
    const auto rows = export_classes(m, 3);
    REQUIRE(rows.size() == 4);
    CHECK(num_classes(rows) == 3);
    CHECK(rows[0].phrase == "e");
    CHECK(rows[0].cluster_id == 0);
    CHECK(rows[1].phrase == "a");
    CHECK(rows[2].phrase == "c");
    CHECK(rows[2].cluster_id == 1);
    CHECK(rows[3].phrase == "b");
    CHECK(rows[3].cluster_id == 2);

    const auto tied = export_classes(model_from_labels({{"x", 4}, {"y", 4}}, {-1, -1}), 5);
    CHECK(tied[0].phrase == "x");
    CHECK(tied[0].cluster_id == 0);

    const auto path = std::filesystem::temp_directory_path() / "sr_cluster_table_test.tsv";
    write_cluster_table(path.string(), rows);
    const auto back = read_cluster_table(path.string());
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].phrase == rows[i].phrase);
      CHECK(back[i].cluster_id == rows[i].cluster_id);
      CHECK(back[i].freq == rows[i].freq);
    }
    std::ofstream(path) << "a\t1\n";
    CHECK_THROWS_AS(read_cluster_table(path.string()), FormatError);
    std::ofstream(path) << "a\tx\t1\n";
    CHECK_THROWS_AS(read_cluster_table(path.string()), FormatError);
    std::filesystem::remove(path);
    CHECK(describe_clusters(rows, 1, 1).find("e") != std::string::npos);
  }

  TEST_CASE("cluster over embeddings normalises rows first") {
    const std::vector<PhraseFreq> phrases = {{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}, {"e", 1}, {"f", 1}};
    Mat e(6, 2);
    // three near (1,0) and three near (0,1), at very different magnitudes
    e.data = {1, 0.01, 100, 0.5, 7, 0, 0, 3, 0.02, 50, 0.1, 9};
    ClusterConfig cfg;
    cfg.min_cluster_size = 2;
    const ClusterModel m = cluster(phrases, e, cfg);
    CHECK(m.assignment.at("a") == m.assignment.at("b"));
    CHECK(m.assignment.at("a") == m.assignment.at("c"));
    CHECK(m.assignment.at("d") == m.assignment.at("e"));
    CHECK(m.assignment.at("a") != m.assignment.at("d"));
    CHECK_THROWS(cluster(phrases, Mat(5, 2), cfg));
    cfg.min_cluster_size = 1;
    CHECK_THROWS_AS(cluster(phrases, e, cfg), ConfigError);
  }
}
