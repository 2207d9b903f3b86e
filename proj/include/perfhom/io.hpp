#pragma once

#include <string>

#include "perfhom/grid.hpp"

namespace perfhom {

// Plain-text grid dump. One header line
//   dim nx [ny [nz]] h origin_x origin_y [origin_z]
// followed by the node values in row-major order (x fastest), one per line.
// Values round-trip exactly (printed with 17 significant digits). The
// boundary mask is not stored; loads get the default outer-layer mask.
void dump_field(const ScalarField& u, const std::string& path);
ScalarField load_field(const std::string& path);

// Tidy CSV export for plotting: n=2 writes every node as x,y,value; n=3
// writes the mid-z slice as x,y,z,value.
void write_csv_slice(const ScalarField& u, const std::string& path);

} // namespace perfhom
