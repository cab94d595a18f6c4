#pragma once

// Donor electron-nuclear spin system: Hamiltonian, eigensystem with doublet
// bookkeeping, mixing parameter gamma_m, transition frequencies and their
// field derivatives.
//
// Eigenstates of H = A I.S + omega0 (Sz - delta Iz) group into doublets of
// conserved m = mS + mI:
//   |+,m> = a |1/2, m-1/2> + b |-1/2, m+1/2>   (upper in energy)
//   |-,m> = a'|-1/2, m+1/2> + b'|1/2, m-1/2>   (lower)
// with gamma_m = |a|^2 - |b|^2 = Omega_m / sqrt(Omega_m^2 + (I+1/2)^2 - m^2),
// Omega_m = m + (omega0/A)(1 + delta). The |m| = I+1/2 extremes are unmixed
// product states; they carry gamma = 1 and branch sign = sign(m) so that
// <Sz> = sigma*gamma/2 holds for every level.

#include "spinbath/constants.hpp"
#include "spinbath/linalg.hpp"
#include "spinbath/spin_ops.hpp"

#include <vector>

namespace spinbath {

struct DonorLevel {
    int label = 0;       // 1-based, ascending energy
    double energy = 0;   // rad/s
    int m_twice = 0;     // 2*m, integer exact
    int sign = 0;        // +1 upper branch, -1 lower branch
    double Omega = 0;    // Omega_m at this field
    double gamma = 0;    // from eigenvector amplitudes
    double gamma_closed_form = 0;
    double a = 0, b = 0; // doublet amplitudes, phase-fixed real
    VecC state;          // in the product basis
    double m() const { return 0.5 * m_twice; }
    double s_z() const { return 0.5 * sign * gamma; }
};

struct DonorEigensystem {
    double B = 0;
    std::vector<DonorLevel> levels;  // ascending energy, levels[k].label == k+1
    MatC sx;                         // electron Sx in the eigenbasis
    MatC sz;                         // electron Sz in the eigenbasis
    const DonorLevel& level(int label) const { return levels.at(label - 1); }
};

struct TransitionSpec {
    int upper = 0;        // level label, energy-ordered
    int lower = 0;
    double frequency = 0; // Hz, at the field it was evaluated
    double dfdB = 0;      // Hz/T
};

// H = A I.S + omega0 (Sz - delta_donor Iz) on the product space, rad/s
MatC donor_hamiltonian(const DonorSpec& spec, double B);

// full diagonalization + doublet classification at field B (tesla)
DonorEigensystem donor_eigensystem(const DonorSpec& spec, double B);

// Closed form for the mixing parameter of doublet m at Zeeman omega0.
// Valid for any |m| <= I + 1/2; the unmixed extremes return exactly 1.
double gamma_closed_form(const DonorSpec& spec, double m, double omega0);
double Omega_of(const DonorSpec& spec, double m, double omega0);

// analytic doublet energies (rad/s): sign = +1/-1 branch
double doublet_energy(const DonorSpec& spec, double m, int sign, double omega0);

// dE/domega0 for branch (m, sign); equals -m*delta + sign*gamma_m*(1+delta)/2
// and covers the unmixed extremes with gamma = 1
double doublet_energy_slope(const DonorSpec& spec, double m, int sign, double omega0);

// f_ij(B) = (E_upper - E_lower)/2pi in Hz for energy-ordered labels
double transition_frequency(const DonorSpec& spec, int upper, int lower, double B);

// df/dB in Hz/T via 10 uT central difference; falls back to Richardson
// extrapolation with a halved step when the two estimates disagree.
double transition_df_dB(const DonorSpec& spec, int upper, int lower, double B);

}  // namespace spinbath
