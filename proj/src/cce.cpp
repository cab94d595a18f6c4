#include "spinbath/cce.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "spinbath/threading.hpp"

namespace spinbath {

namespace {

void check_tau_grid(const std::vector<double>& tau) {
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] < 0 || (i > 0 && tau[i] <= tau[i - 1]))
            throw std::invalid_argument("tau grid must be nonnegative and ascending");
    }
}

// 2x2 spin-1/2 blocks
MatC pauli_z_half() {
    MatC m = MatC::Zero(2, 2);
    m(0, 0) = 0.5;
    m(1, 1) = -0.5;
    return m;
}
MatC pauli_x_half() {
    MatC m = MatC::Zero(2, 2);
    m(0, 1) = 0.5;
    m(1, 0) = 0.5;
    return m;
}
MatC raising() {
    MatC m = MatC::Zero(2, 2);
    m(0, 1) = 1;
    return m;
}

// op acting on spin n of K bath spins
MatC bath_op(int K, int n, const MatC& op) {
    MatC out = MatC::Identity(1, 1);
    for (int k = 0; k < K; ++k) out = kron(out, k == n ? op : MatC::Identity(2, 2));
    return out;
}

struct BathOperators {
    std::vector<MatC> iz, ix, iplus;
    int dim = 1;
};

BathOperators make_bath_operators(int K) {
    BathOperators ops;
    ops.dim = 1 << K;
    for (int n = 0; n < K; ++n) {
        ops.iz.push_back(bath_op(K, n, pauli_z_half()));
        ops.ix.push_back(bath_op(K, n, pauli_x_half()));
        ops.iplus.push_back(bath_op(K, n, raising()));
    }
    return ops;
}

// bath terms common to both donor levels: nuclear Zeeman + dipolar pairs
MatC bath_common_hamiltonian(const DonorSpec& spec, double omega0, const ClusterProblem& prob,
                             const BathOperators& ops) {
    const int K = static_cast<int>(prob.alpha.size());
    MatC H = MatC::Zero(ops.dim, ops.dim);
    for (int n = 0; n < K; ++n) H -= spec.delta_bath * omega0 * ops.iz[n];
    for (int n = 0; n < K; ++n) {
        for (int m = n + 1; m < K; ++m) {
            if (prob.b_zz(n, m) == 0 && prob.b_ff(n, m) == 0) continue;
            H += prob.b_zz(n, m) * ops.iz[n] * ops.iz[m];
            const MatC ff = ops.iplus[n] * ops.iplus[m].adjoint() +
                            ops.iplus[n].adjoint() * ops.iplus[m];
            H += prob.b_ff(n, m) * ff;
        }
    }
    return H;
}

MatC conditioned_field(const ClusterProblem& prob, const BathOperators& ops, double s) {
    const int K = static_cast<int>(prob.alpha.size());
    MatC H = MatC::Zero(ops.dim, ops.dim);
    for (int n = 0; n < K; ++n) H += s * (prob.alpha[n] * ops.iz[n] + prob.beta[n] * ops.ix[n]);
    return H;
}

MatC propagator(const Eigensystem& es, double tau) {
    const int dim = static_cast<int>(es.values.size());
    VecC phases(dim);
    for (int k = 0; k < dim; ++k) phases(k) = std::exp(cplx(0, -es.values(k) * tau));
    return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

}  // namespace

double third_shell_cutoff(double lattice_constant) {
    return 1.02 * std::sqrt(11.0) / 4.0 * lattice_constant;
}

ClusterProblem make_cluster_problem(const DonorSpec& spec, const BathConfiguration& bath,
                                    const Cluster& cluster, double r_cutoff) {
    const int K = static_cast<int>(cluster.members.size());
    if (K < 1) throw std::invalid_argument("cluster must be nonempty");
    ClusterProblem prob;
    prob.b_zz = MatR::Zero(K, K);
    prob.b_ff = MatR::Zero(K, K);
    for (const int idx : cluster.members) {
        const BathSite& site = bath.sites.at(static_cast<std::size_t>(idx));
        const EffectiveInteraction eff =
            effective_interaction(site.a_iso, site.T_aniso, site.theta);
        prob.alpha.push_back(eff.alpha);
        prob.beta.push_back(eff.beta);
    }
    for (int n = 0; n < K; ++n) {
        for (int m = n + 1; m < K; ++m) {
            const Vec3& rn = bath.sites[static_cast<std::size_t>(cluster.members[n])].r;
            const Vec3& rm = bath.sites[static_cast<std::size_t>(cluster.members[m])].r;
            const Vec3 d{rn.x - rm.x, rn.y - rm.y, rn.z - rm.z};
            if (d.norm() > r_cutoff) continue;
            const Vec3 fd{bath.lattice.field_direction[0], bath.lattice.field_direction[1],
                          bath.lattice.field_direction[2]};
            const PairCoupling pc = secular_pair_coupling(spec, d, fd);
            prob.b_zz(n, m) = prob.b_zz(m, n) = pc.b_zz;
            prob.b_ff(n, m) = prob.b_ff(m, n) = pc.b_ff;
        }
    }
    return prob;
}

std::vector<Cluster> enumerate_clusters(const BathConfiguration& bath, int k_max,
                                        double r_cutoff) {
    if (k_max < 1 || k_max > 3)
        throw std::invalid_argument("enumerate_clusters: k_max must be 1, 2 or 3");
    if (!(r_cutoff > 0)) throw std::invalid_argument("enumerate_clusters: cutoff must be positive");

    const int n = static_cast<int>(bath.sites.size());
    std::vector<Cluster> out;
    for (int i = 0; i < n; ++i) out.push_back({{i}});
    if (k_max == 1) return out;

    // spatial hash with cell size = cutoff: neighbours live in adjacent cells
    const auto key = [&](const Vec3& r) {
        const auto cell = [&](double x) {
            return static_cast<std::int64_t>(std::floor(x / r_cutoff));
        };
        return std::array<std::int64_t, 3>{cell(r.x), cell(r.y), cell(r.z)};
    };
    std::map<std::array<std::int64_t, 3>, std::vector<int>> grid;
    for (int i = 0; i < n; ++i) grid[key(bath.sites[static_cast<std::size_t>(i)].r)].push_back(i);

    std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec3& ri = bath.sites[static_cast<std::size_t>(i)].r;
        const auto ki = key(ri);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    const auto it = grid.find({ki[0] + dx, ki[1] + dy, ki[2] + dz});
                    if (it == grid.end()) continue;
                    for (const int j : it->second) {
                        if (j == i) continue;
                        const Vec3& rj = bath.sites[static_cast<std::size_t>(j)].r;
                        const Vec3 d{ri.x - rj.x, ri.y - rj.y, ri.z - rj.z};
                        if (d.norm() <= r_cutoff)
                            neighbours[static_cast<std::size_t>(i)].push_back(j);
                    }
                }
        std::sort(neighbours[static_cast<std::size_t>(i)].begin(),
                  neighbours[static_cast<std::size_t>(i)].end());
    }

    for (int i = 0; i < n; ++i)
        for (const int j : neighbours[static_cast<std::size_t>(i)])
            if (j > i) out.push_back({{i, j}});

    if (k_max == 3) {
        // connected triples: two neighbours of a common centre (paths appear
        // once, triangles three times -- the set dedupes)
        std::set<std::array<int, 3>> triples;
        for (int c = 0; c < n; ++c) {
            const auto& nb = neighbours[static_cast<std::size_t>(c)];
            for (std::size_t a = 0; a < nb.size(); ++a)
                for (std::size_t b = a + 1; b < nb.size(); ++b) {
                    std::array<int, 3> t{c, nb[a], nb[b]};
                    std::sort(t.begin(), t.end());
                    triples.insert(t);
                }
        }
        for (const auto& t : triples) out.push_back({{t[0], t[1], t[2]}});
    }
    return out;
}

std::vector<cplx> conditional_echo(const DonorSpec& spec, double omega0, double s_upper,
                                   double s_lower, const ClusterProblem& prob,
                                   const std::vector<double>& tau_grid) {
    check_tau_grid(tau_grid);
    const int K = static_cast<int>(prob.alpha.size());
    if (K < 1 || K > 3) throw std::invalid_argument("conditional_echo: cluster size must be 1..3");

    // everything diagonal in the Iz product basis -> the two conditional
    // evolutions commute and the echo refocuses exactly
    double max_offdiag = 0;
    for (const double b : prob.beta) max_offdiag = std::max(max_offdiag, std::abs(b));
    for (int n = 0; n < K; ++n)
        for (int m = n + 1; m < K; ++m)
            max_offdiag = std::max(max_offdiag, std::abs(prob.b_ff(n, m)));
    if (max_offdiag == 0) return std::vector<cplx>(tau_grid.size(), cplx(1, 0));

    const BathOperators ops = make_bath_operators(K);
    const MatC H0 = bath_common_hamiltonian(spec, omega0, prob, ops);
    Eigensystem es_i = eigh(H0 + conditioned_field(prob, ops, s_upper));
    Eigensystem es_j = eigh(H0 + conditioned_field(prob, ops, s_lower));
    // global phases cancel in the echo product; centring keeps trig args small
    es_i.values.array() -= es_i.values.mean();
    es_j.values.array() -= es_j.values.mean();

    std::vector<cplx> L;
    L.reserve(tau_grid.size());
    for (const double tau : tau_grid) {
        const MatC Ui = propagator(es_i, tau);
        const MatC Uj = propagator(es_j, tau);
        const MatC M = Ui.adjoint() * Uj.adjoint() * Ui * Uj;
        L.push_back(M.trace() / static_cast<double>(ops.dim));
    }
    return L;
}

std::vector<cplx> cluster_echo_fast(const DonorSpec& spec, const BathConfiguration& bath,
                                    const Cluster& cluster, int upper, int lower, double B,
                                    const std::vector<double>& tau_grid, double r_cutoff) {
    if (r_cutoff <= 0) r_cutoff = third_shell_cutoff(bath.lattice.lattice_constant);
    const DonorEigensystem sys = donor_eigensystem(spec, B);
    const ClusterProblem prob = make_cluster_problem(spec, bath, cluster, r_cutoff);
    return conditional_echo(spec, spec.omega0(B), sys.level(upper).s_z(), sys.level(lower).s_z(),
                            prob, tau_grid);
}

std::vector<cplx> hahn_echo_exact(const DonorSpec& spec, const BathConfiguration& bath,
                                  const Cluster& cluster, int upper, int lower, double B,
                                  const std::vector<double>& tau_grid, double r_cutoff) {
    check_tau_grid(tau_grid);
    if (cluster.members.size() > 3)
        throw std::invalid_argument("hahn_echo_exact: cluster size must be 1..3");
    if (r_cutoff <= 0) r_cutoff = third_shell_cutoff(bath.lattice.lattice_constant);

    const DonorEigensystem sys = donor_eigensystem(spec, B);
    const int nd = spec.dim();
    if (upper < 1 || upper > nd || lower < 1 || lower > nd || upper == lower)
        throw std::invalid_argument("hahn_echo_exact: bad level labels");
    const int i = upper - 1, j = lower - 1;

    const ClusterProblem prob = make_cluster_problem(spec, bath, cluster, r_cutoff);
    const int K = static_cast<int>(cluster.members.size());
    const BathOperators ops = make_bath_operators(K);
    const int nb = ops.dim;

    MatC donor_diag = MatC::Zero(nd, nd);
    for (int k = 0; k < nd; ++k) donor_diag(k, k) = sys.levels[static_cast<std::size_t>(k)].energy;

    MatC field = MatC::Zero(nb, nb);
    for (int n = 0; n < K; ++n)
        field += prob.alpha[n] * ops.iz[n] + prob.beta[n] * ops.ix[n];

    const MatC H = kron(donor_diag, MatC::Identity(nb, nb)) + kron(sys.sz, field) +
                   kron(MatC::Identity(nd, nd), bath_common_hamiltonian(spec, spec.omega0(B),
                                                                        prob, ops));

    // level-selective flip: Pauli X on span{|upper>, |lower>}
    MatC gate = MatC::Identity(nd, nd);
    gate(i, i) = gate(j, j) = 0;
    gate(i, j) = gate(j, i) = 1;
    const MatC G = kron(gate, MatC::Identity(nb, nb));

    Eigensystem es = eigh(H);
    es.values.array() -= es.values.mean();  // global phase, drops out of rho_ij rho_ij*
    std::vector<cplx> L;
    L.reserve(tau_grid.size());
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (const double tau : tau_grid) {
        const MatC U = propagator(es, tau);
        const MatC M = U * G * U;
        cplx acc = 0;
        for (int p = 0; p < nb; ++p) {
            const VecC psi =
                inv_sqrt2 * (M.col(i * nb + p) + M.col(j * nb + p));
            cplx lp = 0;
            for (int b = 0; b < nb; ++b) lp += psi(i * nb + b) * std::conj(psi(j * nb + b));
            acc += 2.0 * lp;
        }
        L.push_back(acc / static_cast<double>(nb));
    }
    return L;
}

std::vector<cplx> cce_combine(const std::vector<ClusterContribution>& contributions, int k_max) {
    std::vector<cplx> total;
    for (const auto& c : contributions) {
        if (static_cast<int>(c.cluster.members.size()) > k_max) continue;
        if (total.empty()) total.assign(c.Ltilde.size(), cplx(1, 0));
        for (std::size_t t = 0; t < total.size(); ++t) total[t] *= c.Ltilde[t];
    }
    return total;
}

SingleConfigEcho cce_single_config(const DonorSpec& spec, const BathConfiguration& bath,
                                   int upper, int lower, double B,
                                   const std::vector<double>& t_grid, const CCEOptions& opt) {
    std::vector<double> tau(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) tau[k] = 0.5 * t_grid[k];
    check_tau_grid(tau);
    const double cutoff =
        opt.r_cutoff > 0 ? opt.r_cutoff : third_shell_cutoff(bath.lattice.lattice_constant);

    SingleConfigEcho out;
    out.times = t_grid;
    out.L.assign(t_grid.size(), cplx(1, 0));
    if (bath.sites.empty()) return out;

    const DonorEigensystem sys = donor_eigensystem(spec, B);
    const double s_u = sys.level(upper).s_z();
    const double s_l = sys.level(lower).s_z();
    const double omega0 = spec.omega0(B);

    const std::vector<Cluster> clusters = enumerate_clusters(bath, opt.k_max, cutoff);
    std::vector<std::vector<cplx>> raw(clusters.size());
    parallel_for(clusters.size(), opt.threads, [&](std::size_t c) {
        if (opt.exact_clusters) {
            raw[c] = hahn_echo_exact(spec, bath, clusters[c], upper, lower, B, tau, cutoff);
        } else {
            const ClusterProblem prob = make_cluster_problem(spec, bath, clusters[c], cutoff);
            raw[c] = conditional_echo(spec, omega0, s_u, s_l, prob, tau);
        }
    });

    // divide out proper subsets, smallest clusters first (enumeration order
    // already sorts by size)
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t c = 0; c < clusters.size(); ++c) index[clusters[c].members] = c;
    std::vector<std::vector<cplx>> tilde(clusters.size());
    std::int64_t invalid = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto& members = clusters[c].members;
        tilde[c] = raw[c];
        if (members.size() == 1) continue;

        std::vector<std::vector<int>> subsets;
        if (members.size() == 2) {
            subsets = {{members[0]}, {members[1]}};
        } else {
            subsets = {{members[0]},             {members[1]},
                       {members[2]},             {members[0], members[1]},
                       {members[0], members[2]}, {members[1], members[2]}};
        }
        for (std::size_t t = 0; t < tilde[c].size(); ++t) {
            cplx denom(1, 0);
            bool ok = true;
            for (const auto& s : subsets) {
                const auto it = index.find(s);
                if (it == index.end()) continue;  // beyond-cutoff pair: factor is 1
                const cplx f = tilde[it->second][t];
                if (std::abs(f) < 1e-12) {
                    ok = false;
                    break;
                }
                denom *= f;
            }
            if (ok) {
                tilde[c][t] = raw[c][t] / denom;
            } else {
                tilde[c][t] = cplx(1, 0);
                ++invalid;
            }
        }
    }

    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (std::size_t t = 0; t < out.L.size(); ++t) out.L[t] *= tilde[c][t];
    out.invalid_divisions = invalid;

    if (opt.keep_contributions) {
        out.contributions.resize(clusters.size());
        for (std::size_t c = 0; c < clusters.size(); ++c)
            out.contributions[c] = {clusters[c], std::move(raw[c]), std::move(tilde[c])};
    }
    return out;
}

std::vector<double> default_time_grid(double t_max, int n_log, double t_min) {
    if (!(t_max > t_min) || !(t_min > 0) || n_log < 2)
        throw std::invalid_argument("default_time_grid: need t_max > t_min > 0 and n_log >= 2");
    std::vector<double> t{0.0};
    const double ratio = t_max / t_min;
    for (int k = 0; k < n_log; ++k)
        t.push_back(t_min * std::pow(ratio, static_cast<double>(k) / (n_log - 1)));
    return t;
}

EchoCurve ensemble_average(const DonorSpec& spec, const LatticeSpec& lattice,
                           const HyperfineModel& hyperfine, int upper, int lower, double B,
                           const std::vector<double>& t_grid, const EnsembleOptions& opt) {
    if (opt.n_configs < 1) throw std::invalid_argument("ensemble_average: n_configs must be >= 1");
    const std::size_t nc = static_cast<std::size_t>(opt.n_configs);

    std::vector<std::vector<cplx>> per_config(nc);
    std::vector<std::int64_t> invalid(nc, 0);
    parallel_for(nc, opt.threads, [&](std::size_t i) {
        BathConfiguration bath = sample_bath(lattice, derive_seed(opt.seed, i));
        assign_contact_couplings(bath, hyperfine);
        SingleConfigEcho one = cce_single_config(spec, bath, upper, lower, B, t_grid, opt.cce);
        per_config[i] = std::move(one.L);
        invalid[i] = one.invalid_divisions;
    });

    EchoCurve curve;
    curve.times = t_grid;
    curve.L.assign(t_grid.size(), 0.0);
    if (opt.average_amplitude) {
        std::vector<cplx> acc(t_grid.size(), cplx(0, 0));
        for (std::size_t i = 0; i < nc; ++i)
            for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += per_config[i][t];
        for (std::size_t t = 0; t < acc.size(); ++t)
            curve.L[t] = std::abs(acc[t]) / static_cast<double>(nc);
    } else {
        for (std::size_t i = 0; i < nc; ++i)
            for (std::size_t t = 0; t < curve.L.size(); ++t)
                curve.L[t] += std::abs(per_config[i][t]);
        for (double& v : curve.L) v /= static_cast<double>(nc);
    }

    curve.meta.upper = upper;
    curve.meta.lower = lower;
    curve.meta.B = B;
    curve.meta.k_max = opt.cce.k_max;
    curve.meta.n_configs = opt.n_configs;
    curve.meta.seed = opt.seed;
    curve.meta.lattice_side = lattice.side;
    curve.meta.occupancy = lattice.occupancy;
    for (const auto v : invalid) curve.meta.invalid_divisions += v;
    return curve;
}

}  // namespace spinbath
