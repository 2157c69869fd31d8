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

#pragma once

#include <span>
#include <vector>

#include "sr/common/matrix.hpp"

namespace sr::clusterer {

// Distance from each point (row) to its k-th nearest other point. Requires
// at least k + 1 points.
std::vector<double> core_distances(const Mat& points, int k);

double mutual_reachability(std::span<const double> a, std::span<const double> b, double core_a, double core_b);

struct MstEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

// Prim's algorithm over the complete mutual-reachability graph.
std::vector<MstEdge> minimum_spanning_tree(const Mat& points, const std::vector<double>& core);

// Component hierarchy of a spanning tree. Edges of equal weight merge in one
// step, so a node can have more than two children and the tree does not
// depend on the order of tied edges.
struct HierarchyNode {
  double distance = 0.0;      // merge distance (0 for leaves)
  int size = 1;
  std::vector<int> children;  // node ids; empty for leaves (ids < n are points)
};

struct Hierarchy {
  int n_points = 0;
  std::vector<HierarchyNode> nodes;  // points first, root last
  int root() const { return static_cast<int>(nodes.size()) - 1; }
};

Hierarchy single_linkage(int n_points, std::vector<MstEdge> mst);

struct CondensedCluster {
  int parent = -1;
  double birth_lambda = 0.0;
  double stability = 0.0;
  int size = 0;
  std::vector<int> children;
};

struct CondensedTree {
  std::vector<CondensedCluster> clusters;  // cluster 0 is the root
  std::vector<int> point_cluster;          // cluster each point falls out of
  std::vector<double> point_lambda;        // lambda at which it falls out
};

CondensedTree condense(const Hierarchy& hierarchy, int min_cluster_size);

// Excess-of-mass selection; returns selected cluster ids.
std::vector<int> select_clusters(const CondensedTree& tree);

// Full pipeline. Labels are dense from 0 in order of first point, -1 for
// noise. The root cluster is selectable; points that separate at the root's
// own birth level are noise.
std::vector<int> hdbscan(const Mat& points, int min_cluster_size);

}  // namespace sr::clusterer
