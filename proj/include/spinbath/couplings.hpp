#pragma once

// Spin-spin couplings: secular hyperfine components seen by one bath
// nucleus, and the magnetic dipole-dipole tensor between two bath nuclei.

#include "spinbath/constants.hpp"
#include "spinbath/lattice.hpp"

#include <array>

namespace spinbath {

// Secular components of the hyperfine interaction for a site with isotropic
// part a_iso, anisotropic strength T and polar angle theta between the field
// and the donor-site axis:
//   alpha = (a_iso - T) + 3 T cos^2(theta)   (along Iz)
//   beta  = 3 T sin(theta) cos(theta)        (along Ix)
// All angular frequencies.
struct EffectiveInteraction {
    double alpha = 0;
    double beta = 0;
};
EffectiveInteraction effective_interaction(double a_iso, double T_aniso, double theta);

// Dipole-dipole coupling tensor D (rad/s) between two bath nuclei separated
// by r (angstrom): D_ij = C/r^3 (delta_ij - 3 rhat_i rhat_j).
using Mat3 = std::array<std::array<double, 3>, 3>;
Mat3 dipolar_tensor(const DonorSpec& spec, const Vec3& r_angstrom);

// Secular pair couplings in the frame of the quantization (field) axis:
//   H_pair = b_zz Iz1 Iz2 + b_ff (I+ I- + I- I+),  b_ff = (D'xx + D'yy)/4 = -D'zz/4
struct PairCoupling {
    double b_zz = 0;
    double b_ff = 0;
};
PairCoupling secular_pair_coupling(const DonorSpec& spec, const Vec3& r_angstrom,
                                   const Vec3& field_direction = {0.0, 0.0, 1.0});

}  // namespace spinbath
