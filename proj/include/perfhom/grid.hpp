#pragma once

#include <cstdint>
#include <vector>

#include "perfhom/shape.hpp"

namespace perfhom {

// Uniform node-centered grid over [origin, origin+extent] in n = 2 or 3.
// Nodes sit at origin + i*h along each axis, i = 0 .. nodes-1; the outermost
// node layer carries the Dirichlet data (no ghost cells). Cells are square:
// anisotropic spacings are rejected at construction.
struct GridSpec {
  int dim = 2;
  Vec3 origin{0, 0, 0};
  Vec3 extent{0, 0, 0};
  Index3 nodes{0, 0, 1};
  double h = 0;

  static GridSpec make(int dim, const Vec3& origin, const Vec3& extent, const Index3& nodes);
  // [0,1]^n with the same node count on every axis.
  static GridSpec unit_cube(int dim, int nodes_per_side);
  // Lattice window [0,t]^n with m cells per unit length; integer lattice
  // points fall exactly on nodes.
  static GridSpec window(int dim, int t, int cells_per_unit);

  std::int64_t num_nodes() const {
    return std::int64_t(nodes[0]) * nodes[1] * nodes[2];
  }
  std::int64_t index(int i, int j, int k = 0) const {
    return (std::int64_t(k) * nodes[1] + j) * nodes[0] + i;
  }
  Index3 coords(std::int64_t idx) const {
    const int i = int(idx % nodes[0]);
    const std::int64_t rest = idx / nodes[0];
    return {i, int(rest % nodes[1]), int(rest / nodes[1])};
  }
  double pos(int axis, int i) const { return origin[axis] + i * h; }
  Vec3 node_pos(std::int64_t idx) const {
    const Index3 c = coords(idx);
    return {pos(0, c[0]), pos(1, c[1]), dim == 3 ? pos(2, c[2]) : 0.0};
  }
  bool on_outer_boundary(std::int64_t idx) const {
    const Index3 c = coords(idx);
    for (int a = 0; a < dim; ++a)
      if (c[a] == 0 || c[a] == nodes[a] - 1) return true;
    return false;
  }
  double cell_volume() const {
    double v = h * h;
    if (dim == 3) v *= h;
    return v;
  }
  bool same_geometry(const GridSpec& o) const;
};

enum class NodeKind : std::uint8_t { interior = 0, dirichlet = 1 };

// Grid function with a per-node boundary mask. Dirichlet nodes hold their
// prescribed values through every solver sweep.
struct ScalarField {
  GridSpec spec;
  std::vector<double> values;
  std::vector<std::uint8_t> mask; // NodeKind

  static ScalarField zeros(const GridSpec& spec);

  bool is_dirichlet(std::int64_t idx) const { return mask[size_t(idx)] != 0; }
  void set_dirichlet(std::int64_t idx, double value) {
    mask[size_t(idx)] = std::uint8_t(NodeKind::dirichlet);
    values[size_t(idx)] = value;
  }
  std::int64_t num_interior() const;
  void check_finite(const char* where) const;
};

// Sorted set of node indices; carrier for discrete hole sets.
struct NodeSet {
  GridSpec spec;
  std::vector<std::int64_t> members; // strictly increasing

  bool empty() const { return members.empty(); }
  std::size_t size() const { return members.size(); }
  void validate() const;
};

// Discrete Laplacian (2n+1-point stencil) on interior nodes; zero on
// Dirichlet nodes. Dirichlet values are used as stencil neighbors.
ScalarField laplacian_apply(const ScalarField& u);

// 1/2 sum over nearest-neighbor faces of h^(n-2) (u_a - u_b)^2, i.e. the
// discrete (1/2) int |grad u|^2. Summation by parts against laplacian_apply
// is exact for fields vanishing on the boundary.
double dirichlet_energy(const ScalarField& u);

// (sum_nodes h^n |u|^p)^(1/p), p in [1, inf).
double lp_norm(const ScalarField& u, double p);

// Nodes whose cell center (= node position) lies inside the shape. A
// nonempty shape that captures no node collapses to the single node nearest
// to its center ("point mode" fallback).
NodeSet rasterize_shape(const ShapeSpec& shape, const Vec3& center, const GridSpec& spec);

} // namespace perfhom
