#include "perfhom/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace perfhom {

namespace {
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
} // namespace

void dump_field(const ScalarField& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_field: cannot open " + path);
  const GridSpec& g = u.spec;
  out << g.dim;
  for (int a = 0; a < g.dim; ++a) out << ' ' << g.nodes[a];
  out << ' ' << fmt_double(g.h);
  for (int a = 0; a < g.dim; ++a) out << ' ' << fmt_double(g.origin[a]);
  out << '\n';
  for (double v : u.values) out << fmt_double(v) << '\n';
  if (!out) throw std::runtime_error("dump_field: write failed for " + path);
}

ScalarField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_field: cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  int dim = 0;
  hs >> dim;
  if (dim != 2 && dim != 3) throw std::runtime_error("load_field: bad dim in header");
  Index3 nodes{1, 1, 1};
  for (int a = 0; a < dim; ++a) hs >> nodes[a];
  double h = 0;
  hs >> h;
  Vec3 origin{0, 0, 0};
  for (int a = 0; a < dim; ++a) hs >> origin[a];
  if (!hs) throw std::runtime_error("load_field: malformed header");
  Vec3 extent{0, 0, 0};
  for (int a = 0; a < dim; ++a) extent[a] = h * (nodes[a] - 1);
  ScalarField u = ScalarField::zeros(GridSpec::make(dim, origin, extent, nodes));
  for (auto& v : u.values)
    if (!(in >> v)) throw std::runtime_error("load_field: truncated values in " + path);
  return u;
}

void write_csv_slice(const ScalarField& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_slice: cannot open " + path);
  const GridSpec& g = u.spec;
  if (g.dim == 2) {
    out << "x,y,value\n";
    for (int j = 0; j < g.nodes[1]; ++j)
      for (int i = 0; i < g.nodes[0]; ++i)
        out << fmt_double(g.pos(0, i)) << ',' << fmt_double(g.pos(1, j)) << ','
            << fmt_double(u.values[size_t(g.index(i, j))]) << '\n';
  } else {
    const int k = g.nodes[2] / 2;
    out << "x,y,z,value\n";
    for (int j = 0; j < g.nodes[1]; ++j)
      for (int i = 0; i < g.nodes[0]; ++i)
        out << fmt_double(g.pos(0, i)) << ',' << fmt_double(g.pos(1, j)) << ','
            << fmt_double(g.pos(2, k)) << ','
            << fmt_double(u.values[size_t(g.index(i, j, k))]) << '\n';
  }
}

} // namespace perfhom
