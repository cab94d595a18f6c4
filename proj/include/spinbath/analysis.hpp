#pragma once

// Field-domain analysis: optimal-working-point location, the census of
// df/dB extrema over the dipole-allowed transitions, and orchestration of
// coherence-time sweeps over magnetic field.

#include <cstdint>
#include <string>
#include <vector>

#include "spinbath/cce.hpp"
#include "spinbath/donor.hpp"
#include "spinbath/fit.hpp"
#include "spinbath/hyperfine.hpp"
#include "spinbath/lattice.hpp"

namespace spinbath {

struct OWPReport {
    TransitionSpec transition;  // evaluated at B_owp when found
    bool found = false;
    double B_owp = 0;        // tesla: branch-signed mixing parameters cancel
    double B_dfdb_zero = 0;  // tesla: transition frequency stationary in B
    double gamma_upper = 0;  // mixing parameters at B_owp
    double gamma_lower = 0;
};

// B_owp is the root of the branch-signed cancellation s_upper = -s_lower
// (equivalently sigma_u gamma_u - sigma_l gamma_l = 0) and B_dfdb_zero the
// root of the stationary-frequency condition
// sigma_u gamma_u - sigma_l gamma_l = 2 (m_u - m_l) delta/(1+delta),
// both located by bisection over B in [1 mT, 1 T], iterated to ~1e-12 T so
// the gamma cancellation holds to well under 1e-8. Transitions involving an
// unmixed |m| = I+1/2 level have constant gamma and return found = false.
OWPReport find_owp(const DonorSpec& spec, int upper, int lower);

struct TransitionExtremum {
    TransitionSpec transition;  // frequency and dfdB at the extremum field
    double B = 0;               // tesla
    bool is_minimum = false;
    double sx_element = 0;      // |<upper|Sx|lower>| there
};

// Scan every dipole-allowed level pair (|<Sx>| > 1e-3) for sign changes of
// df/dB over B in [1 mT, 1 T]; keep extrema whose frequency lies in
// [f_min, f_max] (Hz). Sorted by field.
std::vector<TransitionExtremum> find_df_db_extrema(const DonorSpec& spec, double f_min,
                                                   double f_max);

// fit_decay on an echo curve (log-residual stretched-exponential fit)
DecayFit fit_decay(const EchoCurve& curve);

struct SweepOptions {
    EnsembleOptions ensemble;
    double t_max_initial = 4e-3;  // seconds
    double t_max_cap = 10.0;      // adaptive grid extension stops here
    double extension_factor = 10.0;
    int n_time = 60;
    double t_min = 2e-6;
};

struct SweepResult {
    std::vector<double> B_values;       // tesla
    std::vector<DecayFit> fits;
    std::vector<double> t_max_used;     // final grid extent per entry
    std::vector<std::string> errors;    // empty string when the entry is fine
    double B_owp = 0;                   // annotation from find_owp (0 if none)
    bool monotone_toward_owp = false;   // T_SD (or bound) grows as |B - B_owp| shrinks
    int upper = 0;
    int lower = 0;
    LatticeSpec lattice;
    int n_configs = 0;
    std::uint64_t seed = 0;
    int k_max = 0;
};

// For each field: ensemble echo, decay fit; when the curve has not decayed
// the time grid is extended by extension_factor up to t_max_cap and the
// entry reports the lower bound. Per-entry seeds derive from (seed, index);
// individual failures are recorded and the sweep continues.
SweepResult tsd_sweep(const DonorSpec& spec, const LatticeSpec& lattice,
                      const HyperfineModel& hyperfine, int upper, int lower,
                      const std::vector<double>& B_list, const SweepOptions& opt);

// effective coherence time of a fit: T_SD, or the lower bound when diverged
double effective_tsd(const DecayFit& fit);

}  // namespace spinbath
