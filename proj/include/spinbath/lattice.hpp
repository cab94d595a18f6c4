#pragma once

// Diamond-cubic host lattice and random occupation by spin-1/2 bath nuclei.
// Lengths in angstrom. The donor sits at the origin, which is itself a
// lattice site and is excluded from the candidate list.

#include "spinbath/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace spinbath {

struct Vec3 {
    double x = 0, y = 0, z = 0;
    double norm() const;
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

struct LatticeSpec {
    double lattice_constant = 5.431;  // angstrom
    double side = 160.0;              // cube edge, angstrom
    double occupancy = 0.0467;        // isotopic abundance of the magnetic species
    // quantization axis; [110] keeps the nearest-neighbour bonds (all along
    // <111>) away from the magic angle where their secular coupling vanishes
    std::array<double, 3> field_direction{1.0, 1.0, 0.0};

    void validate() const;  // throws std::invalid_argument with a one-line message
};

// all lattice sites of an n^3-cell block centred on the origin (origin included);
// n = floor(side / lattice_constant)
std::vector<Vec3> diamond_sites(const LatticeSpec& spec);

// site occupied by a bath nucleus, positions in angstrom
struct BathSite {
    Vec3 r;
    double a_iso = 0;   // isotropic hyperfine, rad/s
    double T_aniso = 0; // anisotropic strength, rad/s
    double theta = 0;   // angle between field direction and donor-site axis
};

struct BathConfiguration {
    std::uint64_t seed = 0;
    LatticeSpec lattice;
    std::vector<BathSite> sites;
};

// Bernoulli-occupy every candidate site (origin excluded). Couplings are
// filled in by the caller (hyperfine model); here a_iso = T = 0.
BathConfiguration sample_bath(const LatticeSpec& spec, std::uint64_t seed);

// nearest-neighbour shell distances: {1st, 2nd, 3rd} in angstrom
std::array<double, 3> neighbour_shells(double lattice_constant);

}  // namespace spinbath
