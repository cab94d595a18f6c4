#pragma once

// Cluster-correlation expansion of the donor Hahn echo in the nuclear bath.
//
// Fast path: the donor only dephases, so each cluster evolves under bath
// Hamiltonians conditioned on the two donor levels of the transition,
//   H_c = sum_n s_c (alpha_n Iz_n + beta_n Ix_n) - delta_bath omega0 sum Iz
//         + sum_{n<m} [b_zz Iz Iz + b_ff (I+ I- + I- I+)],  s_c = <c|Sz|c>,
// and the echo after the tau - flip - tau sequence is
//   L(2 tau) = Tr[U_i^dag U_j^dag U_i U_j] / 2^K.
// Exact path: unitary evolution on the full donor (x) cluster space with a
// level-selective flip gate, averaged over all bath product states; this is
// the oracle the fast path is validated against.
//
// Cluster contributions Ltilde divide out all proper-subset factors and
// multiply into the total coherence; pairs beyond the dipolar cutoff carry
// Ltilde = 1 identically under the same truncation and are never enumerated.

#include <cstdint>
#include <vector>

#include "spinbath/couplings.hpp"
#include "spinbath/donor.hpp"
#include "spinbath/hyperfine.hpp"
#include "spinbath/lattice.hpp"
#include "spinbath/linalg.hpp"

namespace spinbath {

struct Cluster {
    std::vector<int> members;  // bath site indices, sorted ascending
};

// couplings restricted to one cluster: per-member secular hyperfine
// components and secular dipolar pair terms (rad/s); pairs separated by more
// than r_cutoff (angstrom) are truncated to zero
struct ClusterProblem {
    std::vector<double> alpha;
    std::vector<double> beta;
    MatR b_zz;
    MatR b_ff;
};
ClusterProblem make_cluster_problem(const DonorSpec& spec, const BathConfiguration& bath,
                                    const Cluster& cluster, double r_cutoff);

// 3rd-neighbour-shell dipolar cutoff (with a small margin), angstrom
double third_shell_cutoff(double lattice_constant);

// all singletons, all pairs within r_cutoff, and (k_max = 3) all connected
// triples, in deterministic index order
std::vector<Cluster> enumerate_clusters(const BathConfiguration& bath, int k_max,
                                        double r_cutoff);

// conditional-evolution echo of one cluster; s_upper/s_lower are the <Sz> of
// the two donor levels, omega0 the electron Zeeman frequency (rad/s)
std::vector<cplx> conditional_echo(const DonorSpec& spec, double omega0, double s_upper,
                                   double s_lower, const ClusterProblem& prob,
                                   const std::vector<double>& tau_grid);

// wrapper resolving (upper, lower, B) through the donor eigensystem
std::vector<cplx> cluster_echo_fast(const DonorSpec& spec, const BathConfiguration& bath,
                                    const Cluster& cluster, int upper, int lower, double B,
                                    const std::vector<double>& tau_grid, double r_cutoff = 0);

// exact donor (x) cluster evolution (cluster size <= 3)
std::vector<cplx> hahn_echo_exact(const DonorSpec& spec, const BathConfiguration& bath,
                                  const Cluster& cluster, int upper, int lower, double B,
                                  const std::vector<double>& tau_grid, double r_cutoff = 0);

struct ClusterContribution {
    Cluster cluster;
    std::vector<cplx> L;       // raw cluster coherence
    std::vector<cplx> Ltilde;  // proper subsets divided out
};

// product of Ltilde over clusters of size <= k_max, in enumeration order
std::vector<cplx> cce_combine(const std::vector<ClusterContribution>& contributions, int k_max);

struct CCEOptions {
    int k_max = 2;
    double r_cutoff = 0;          // angstrom; 0 picks third_shell_cutoff
    bool exact_clusters = false;  // route clusters through the exact path
    bool keep_contributions = false;
    int threads = 1;
};

struct SingleConfigEcho {
    std::vector<double> times;  // t = 2 tau, seconds
    std::vector<cplx> L;
    std::int64_t invalid_divisions = 0;
    std::vector<ClusterContribution> contributions;  // only when requested
};

SingleConfigEcho cce_single_config(const DonorSpec& spec, const BathConfiguration& bath,
                                   int upper, int lower, double B,
                                   const std::vector<double>& t_grid,
                                   const CCEOptions& opt = {});

struct EchoMeta {
    int upper = 0;
    int lower = 0;
    double B = 0;  // tesla
    int k_max = 0;
    int n_configs = 0;
    std::uint64_t seed = 0;
    double lattice_side = 0;
    double occupancy = 0;
    std::int64_t invalid_divisions = 0;
};

struct EchoCurve {
    std::vector<double> times;  // t = 2 tau, seconds
    std::vector<double> L;      // normalized echo intensity
    EchoMeta meta;
};

// t = 0 followed by n_log log-spaced points in [t_min, t_max]
std::vector<double> default_time_grid(double t_max = 4e-3, int n_log = 60, double t_min = 2e-6);

struct EnsembleOptions {
    CCEOptions cce;
    int n_configs = 100;
    std::uint64_t seed = 1;
    int threads = 1;                 // pool over configurations
    bool average_amplitude = false;  // default averages per-config |L|
};

// mean over seeded bath configurations; per-config seeds derive from
// (seed, config index), so the result is independent of the pool size
EchoCurve ensemble_average(const DonorSpec& spec, const LatticeSpec& lattice,
                           const HyperfineModel& hyperfine, int upper, int lower, double B,
                           const std::vector<double>& t_grid, const EnsembleOptions& opt);

}  // namespace spinbath
