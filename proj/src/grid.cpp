#include "perfhom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace perfhom {

GridSpec GridSpec::make(int dim, const Vec3& origin, const Vec3& extent, const Index3& nodes) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("GridSpec: dim must be 2 or 3");
  GridSpec g;
  g.dim = dim;
  g.origin = origin;
  g.extent = extent;
  g.nodes = nodes;
  if (dim == 2) {
    g.nodes[2] = 1;
    g.extent[2] = 0;
    g.origin[2] = 0;
  }
  for (int a = 0; a < dim; ++a) {
    if (g.nodes[a] < 4)
      throw std::invalid_argument("GridSpec: nodes_per_side must be >= 4 on every axis");
    if (!(g.extent[a] > 0))
      throw std::invalid_argument("GridSpec: extent must be positive");
  }
  g.h = g.extent[0] / (g.nodes[0] - 1);
  for (int a = 1; a < dim; ++a) {
    const double ha = g.extent[a] / (g.nodes[a] - 1);
    if (std::abs(ha - g.h) > 1e-9 * g.h)
      throw std::invalid_argument("GridSpec: anisotropic spacing rejected (cells must be square)");
  }
  return g;
}

GridSpec GridSpec::unit_cube(int dim, int nodes_per_side) {
  return make(dim, {0, 0, 0}, {1, 1, dim == 3 ? 1.0 : 0.0},
              {nodes_per_side, nodes_per_side, dim == 3 ? nodes_per_side : 1});
}

GridSpec GridSpec::window(int dim, int t, int cells_per_unit) {
  if (t < 1) throw std::invalid_argument("GridSpec::window: t must be >= 1");
  if (cells_per_unit < 2) throw std::invalid_argument("GridSpec::window: cells_per_unit must be >= 2");
  const int n = t * cells_per_unit + 1;
  const double side = double(t);
  return make(dim, {0, 0, 0}, {side, side, dim == 3 ? side : 0.0}, {n, n, dim == 3 ? n : 1});
}

bool GridSpec::same_geometry(const GridSpec& o) const {
  if (dim != o.dim || nodes != o.nodes) return false;
  for (int a = 0; a < dim; ++a)
    if (std::abs(origin[a] - o.origin[a]) > 1e-12 || std::abs(extent[a] - o.extent[a]) > 1e-12)
      return false;
  return true;
}

ScalarField ScalarField::zeros(const GridSpec& spec) {
  ScalarField f;
  f.spec = spec;
  f.values.assign(size_t(spec.num_nodes()), 0.0);
  f.mask.assign(size_t(spec.num_nodes()), std::uint8_t(NodeKind::interior));
  // Outermost layer is the Dirichlet boundary by default.
  for (std::int64_t idx = 0; idx < spec.num_nodes(); ++idx)
    if (spec.on_outer_boundary(idx)) f.mask[size_t(idx)] = std::uint8_t(NodeKind::dirichlet);
  return f;
}

std::int64_t ScalarField::num_interior() const {
  std::int64_t n = 0;
  for (std::uint8_t m : mask)
    if (m == 0) ++n;
  return n;
}

void ScalarField::check_finite(const char* where) const {
  for (double v : values)
    if (!std::isfinite(v))
      throw std::runtime_error(std::string(where) + ": non-finite field value");
}

void NodeSet::validate() const {
  const std::int64_t n = spec.num_nodes();
  std::int64_t prev = -1;
  for (std::int64_t m : members) {
    if (m <= prev) throw std::runtime_error("NodeSet: members must be strictly increasing");
    if (m < 0 || m >= n) throw std::runtime_error("NodeSet: member outside grid bounds");
    prev = m;
  }
}

ScalarField laplacian_apply(const ScalarField& u) {
  const GridSpec& g = u.spec;
  if (u.num_interior() < 1)
    throw std::invalid_argument("laplacian_apply: grid has no interior node");
  ScalarField out = u;
  std::fill(out.values.begin(), out.values.end(), 0.0);

  const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
  const std::int64_t sx = 1, sy = nx, sz = std::int64_t(nx) * ny;
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double diag = 2.0 * g.dim;

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      std::int64_t idx = g.index(0, j, k);
      for (int i = 0; i < nx; ++i, ++idx) {
        if (u.mask[size_t(idx)] != 0) continue;
        double s = u.values[size_t(idx - sx)] + u.values[size_t(idx + sx)] +
                   u.values[size_t(idx - sy)] + u.values[size_t(idx + sy)];
        if (g.dim == 3) s += u.values[size_t(idx - sz)] + u.values[size_t(idx + sz)];
        out.values[size_t(idx)] = (s - diag * u.values[size_t(idx)]) * inv_h2;
      }
    }
  return out;
}

double dirichlet_energy(const ScalarField& u) {
  const GridSpec& g = u.spec;
  const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
  const std::int64_t strides[3] = {1, nx, std::int64_t(nx) * ny};
  double sum = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const std::int64_t s = strides[a];
    const int lim[3] = {a == 0 ? nx - 1 : nx, a == 1 ? ny - 1 : ny, a == 2 ? nz - 1 : nz};
    for (int k = 0; k < lim[2]; ++k)
      for (int j = 0; j < lim[1]; ++j) {
        std::int64_t idx = g.index(0, j, k);
        for (int i = 0; i < lim[0]; ++i, ++idx) {
          const double d = u.values[size_t(idx + s)] - u.values[size_t(idx)];
          sum += d * d;
        }
      }
  }
  const double face_weight = (g.dim == 3) ? g.h : 1.0; // h^(n-2)
  return 0.5 * face_weight * sum;
}

double lp_norm(const ScalarField& u, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("lp_norm: p must lie in [1, inf)");
  const double vol = u.spec.cell_volume();
  double sum = 0.0;
  for (double v : u.values) sum += std::pow(std::abs(v), p);
  return std::pow(vol * sum, 1.0 / p);
}

NodeSet rasterize_shape(const ShapeSpec& shape, const Vec3& center, const GridSpec& g) {
  NodeSet set;
  set.spec = g;
  if (shape.is_empty(g.dim)) return set;

  Vec3 lo, hi;
  for (int a = 0; a < g.dim; ++a) {
    const double half =
        shape.kind == ShapeSpec::Kind::ball ? shape.radius : shape.half_widths[a];
    lo[a] = center[a] - half;
    hi[a] = center[a] + half;
    if (hi[a] < g.origin[a] - 0.5 * g.h || lo[a] > g.origin[a] + g.extent[a] + 0.5 * g.h)
      throw std::invalid_argument("rasterize_shape: shape bounding box misses the grid");
  }

  Index3 ilo{0, 0, 0}, ihi{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    ilo[a] = std::max(0, int(std::ceil((lo[a] - g.origin[a]) / g.h - 1e-12)));
    ihi[a] = std::min(g.nodes[a] - 1, int(std::floor((hi[a] - g.origin[a]) / g.h + 1e-12)));
  }
  if (g.dim == 2) { ilo[2] = ihi[2] = 0; }

  const double r2 = shape.radius * shape.radius;
  for (int k = ilo[2]; k <= ihi[2]; ++k)
    for (int j = ilo[1]; j <= ihi[1]; ++j)
      for (int i = ilo[0]; i <= ihi[0]; ++i) {
        const double dx = g.pos(0, i) - center[0];
        const double dy = g.pos(1, j) - center[1];
        const double dz = g.dim == 3 ? g.pos(2, k) - center[2] : 0.0;
        bool inside;
        if (shape.kind == ShapeSpec::Kind::ball) {
          inside = dx * dx + dy * dy + dz * dz <= r2 * (1 + 1e-12);
        } else {
          inside = std::abs(dx) <= shape.half_widths[0] * (1 + 1e-12) &&
                   std::abs(dy) <= shape.half_widths[1] * (1 + 1e-12) &&
                   (g.dim == 2 || std::abs(dz) <= shape.half_widths[2] * (1 + 1e-12));
        }
        if (inside) set.members.push_back(g.index(i, j, k));
      }

  if (set.members.empty()) {
    // Sub-grid shape: fall back to the single node nearest to the center.
    Index3 nearest{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      int i = int(std::lround((center[a] - g.origin[a]) / g.h));
      nearest[a] = std::min(std::max(i, 0), g.nodes[a] - 1);
    }
    set.members.push_back(g.index(nearest[0], nearest[1], nearest[2]));
  }
  std::sort(set.members.begin(), set.members.end());
  return set;
}

} // namespace perfhom
