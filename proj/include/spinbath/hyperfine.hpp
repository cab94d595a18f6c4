#pragma once

// Fermi-contact couplings between the donor electron and lattice nuclei,
// from a six-valley effective-mass donor wavefunction
//   Psi(r) = (1/sqrt6) sum_mu F_mu(r) cos(k0 s_mu . r)
// with anisotropic hydrogenic envelopes F_mu. The absolute contact density
// is folded into one calibration constant chosen so the strongest lattice
// site matches a reference coupling (`max_coupling`).

#include "spinbath/constants.hpp"
#include "spinbath/lattice.hpp"

namespace spinbath {

struct HyperfineModel {
    // envelope radii (angstrom): effective-mass values shrunk for the deep
    // donor by sqrt(E_shallow / E_ionization)
    double radius_a = 0;
    double radius_b = 0;
    double k0 = 0;            // valley wavevector, rad/angstrom
    double calibration = 0;   // rad/s per unit |Psi|^2 (model units)

    // isotropic coupling at lattice position r (angstrom), rad/s
    double a_iso(const Vec3& r) const;
    // envelope-only bound (valley interference factors set to 1)
    double a_iso_envelope(const Vec3& r) const;

    double psi_squared(const Vec3& r) const;
    double psi_squared_envelope(const Vec3& r) const;
};

// strongest-site contact coupling used when nothing else is specified,
// calibrated against the measured sub-ms spin-diffusion baseline
inline constexpr double default_max_contact_coupling = two_pi * 0.8e6;  // rad/s

// Build the model for the given host lattice. max_coupling (rad/s) anchors
// the largest site coupling; ionization_eV sets the envelope extent.
HyperfineModel make_hyperfine_model(double lattice_constant, double max_coupling,
                                    double ionization_eV = 0.069);

// fill a_iso (and theta-dependent defaults: T = 0) for every site of a bath
void assign_contact_couplings(BathConfiguration& bath, const HyperfineModel& model);

}  // namespace spinbath
