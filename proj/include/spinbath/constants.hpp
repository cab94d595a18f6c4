#pragma once

// Physical constants and unit helpers. All internal frequencies are angular
// (rad/s); magnetic fields are tesla; lengths are angstrom unless a suffix
// says otherwise. Conversions to/from mT, MHz, GHz, ms happen only at the
// CLI / file-format boundary.

#include <cmath>

namespace spinbath {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double mu0_over_4pi = 1.0e-7;      // T^2 m^3 / J

// Parameters of the donor electron-nuclear system. Defaults via bismuth().
struct DonorSpec {
    double electron_spin = 0.5;
    double nuclear_spin = 4.5;
    double hyperfine = two_pi * 1.4754e9;  // A, rad/s
    double magnetic_moment = 1.857e-23;    // mu = g mu_B, J/T
    double delta_donor = 2.486e-4;         // donor nuclear / electron moment ratio
    double delta_bath = 3.021e-4;          // bath nuclear / electron moment ratio

    // electron Zeeman angular frequency at field B (tesla)
    double omega0(double B) const { return magnetic_moment * B / hbar; }
    double field_for_omega0(double w0) const { return w0 * hbar / magnetic_moment; }

    int electron_dim() const { return static_cast<int>(2 * electron_spin + 1.5); }
    int nuclear_dim() const { return static_cast<int>(2 * nuclear_spin + 1.5); }
    int dim() const { return electron_dim() * nuclear_dim(); }

    static DonorSpec bismuth() { return DonorSpec{}; }
};

// boundary-unit helpers
inline double mT_to_T(double mT) { return mT * 1e-3; }
inline double T_to_mT(double T) { return T * 1e3; }
inline double MHz_to_rad(double MHz) { return two_pi * MHz * 1e6; }
inline double rad_to_MHz(double w) { return w / two_pi * 1e-6; }
inline double GHz_to_Hz(double GHz) { return GHz * 1e9; }
inline double Hz_to_GHz(double Hz) { return Hz * 1e-9; }
inline double ms_to_s(double ms) { return ms * 1e-3; }
inline double s_to_ms(double s) { return s * 1e3; }

}  // namespace spinbath
