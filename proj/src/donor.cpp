#include "spinbath/donor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinbath {

MatC donor_hamiltonian(const DonorSpec& spec, double B) {
    const SpinOperators S = spin_operators(spec.electron_spin);
    const SpinOperators I = spin_operators(spec.nuclear_spin);
    const double w0 = spec.omega0(B);

    MatC H = spec.hyperfine *
             (kron(S.jz, I.jz) + 0.5 * (kron(S.jplus, I.jminus) + kron(S.jminus, I.jplus)));
    H += w0 * kron(S.jz, I.identity);
    H -= w0 * spec.delta_donor * kron(S.identity, I.jz);
    return H;
}

double Omega_of(const DonorSpec& spec, double m, double omega0) {
    return m + (omega0 / spec.hyperfine) * (1.0 + spec.delta_donor);
}

double gamma_closed_form(const DonorSpec& spec, double m, double omega0) {
    const double mmax = spec.nuclear_spin + spec.electron_spin;
    const double rem = mmax * mmax - m * m;
    if (rem <= 0.0) return 1.0;  // unmixed extreme
    const double Om = Omega_of(spec, m, omega0);
    return Om / std::sqrt(Om * Om + rem);
}

double doublet_energy(const DonorSpec& spec, double m, int sign, double omega0) {
    const double A = spec.hyperfine;
    const double mmax = spec.nuclear_spin + spec.electron_spin;
    if (std::abs(std::abs(m) - mmax) < 1e-12) {
        // stretched product state |mS = sgn/2, mI = m - sgn/2>
        const double ms = 0.5 * (m > 0 ? 1.0 : -1.0);
        const double mi = m - ms;
        return A * ms * mi + omega0 * (ms - spec.delta_donor * mi);
    }
    const double Om = Omega_of(spec, m, omega0);
    const double R = std::sqrt(Om * Om + mmax * mmax - m * m);
    return -0.25 * A - m * spec.delta_donor * omega0 + 0.5 * sign * A * R;
}

double doublet_energy_slope(const DonorSpec& spec, double m, int sign, double omega0) {
    return -m * spec.delta_donor +
           0.5 * sign * gamma_closed_form(spec, m, omega0) * (1.0 + spec.delta_donor);
}

DonorEigensystem donor_eigensystem(const DonorSpec& spec, double B) {
    const int dI = spec.nuclear_dim();
    const int dim = spec.dim();
    const MatC H = donor_hamiltonian(spec, B);
    Eigensystem es = eigh(H);

    // basis index k = e*dI + n: mS = 1/2 - e, mI = I - n (electron slot first)
    auto basis_m_twice = [&](int k) {
        const int e = k / dI, n = k % dI;
        const int ms2 = static_cast<int>(std::lround(2 * spec.electron_spin)) - 2 * e;
        const int mi2 = static_cast<int>(std::lround(2 * spec.nuclear_spin)) - 2 * n;
        return ms2 + mi2;
    };

    DonorEigensystem sys;
    sys.B = B;
    sys.levels.resize(dim);
    const double w0 = spec.omega0(B);
    const int mmax2 = static_cast<int>(std::lround(2 * (spec.nuclear_spin + spec.electron_spin)));

    for (int k = 0; k < dim; ++k) {
        DonorLevel& lv = sys.levels[k];
        lv.energy = es.values[k];
        lv.state = es.vectors.col(k);

        // m from the weighted projection; states are exact m eigenstates
        double msum = 0.0;
        for (int r = 0; r < dim; ++r) msum += std::norm(lv.state[r]) * 0.5 * basis_m_twice(r);
        lv.m_twice = static_cast<int>(std::lround(2.0 * msum));
        const double purity_err = std::abs(2.0 * msum - lv.m_twice);
        if (purity_err > 1e-6)
            throw std::runtime_error("donor_eigensystem: eigenstate is not an m eigenstate");

        lv.Omega = Omega_of(spec, lv.m(), w0);
        if (std::abs(lv.m_twice) == mmax2) {
            lv.sign = lv.m_twice > 0 ? 1 : -1;
            lv.gamma = 1.0;
            lv.gamma_closed_form = 1.0;
            lv.a = 1.0;
            lv.b = 0.0;
        }
    }

    // resolve branch signs within each doublet: higher energy is '+'
    for (int k = 0; k < dim; ++k) {
        DonorLevel& lv = sys.levels[k];
        if (lv.sign != 0) continue;
        for (int k2 = 0; k2 < dim; ++k2) {
            if (k2 == k || sys.levels[k2].m_twice != lv.m_twice) continue;
            lv.sign = lv.energy > sys.levels[k2].energy ? 1 : -1;
        }
        // amplitudes per the doublet convention: a multiplies |sign/2, m - sign/2>
        const int mi_a2 = lv.m_twice - lv.sign;          // 2*mI of the a component
        const int mi_b2 = lv.m_twice + lv.sign;
        const int e_a = lv.sign > 0 ? 0 : 1;             // electron slot of a component
        const int e_b = 1 - e_a;
        const int na = (static_cast<int>(std::lround(2 * spec.nuclear_spin)) - mi_a2) / 2;
        const int nb = (static_cast<int>(std::lround(2 * spec.nuclear_spin)) - mi_b2) / 2;
        const cplx ca = lv.state[e_a * dI + na];
        const cplx cb = lv.state[e_b * dI + nb];
        // phases are fixed real by eigh, but normalize the convention: a >= 0
        const double sa = std::real(ca) < 0 ? -1.0 : 1.0;
        lv.a = sa * std::real(ca);
        lv.b = sa * std::real(cb);
        lv.gamma = lv.a * lv.a - lv.b * lv.b;
        lv.gamma_closed_form = gamma_closed_form(spec, lv.m(), w0);
    }

    // ascending energy with the documented tie-break (energy, then m, then -/+)
    std::stable_sort(sys.levels.begin(), sys.levels.end(), [](const DonorLevel& x, const DonorLevel& y) {
        if (x.energy != y.energy) return x.energy < y.energy;
        if (x.m_twice != y.m_twice) return x.m_twice < y.m_twice;
        return x.sign < y.sign;
    });
    for (int k = 0; k < dim; ++k) sys.levels[k].label = k + 1;

    // electron operators in the eigenbasis
    const SpinOperators S = spin_operators(spec.electron_spin);
    const SpinOperators I = spin_operators(spec.nuclear_spin);
    MatC V(dim, dim);
    for (int k = 0; k < dim; ++k) V.col(k) = sys.levels[k].state;
    sys.sx = V.adjoint() * kron(S.jx, I.identity) * V;
    sys.sz = V.adjoint() * kron(S.jz, I.identity) * V;
    return sys;
}

double transition_frequency(const DonorSpec& spec, int upper, int lower, double B) {
    if (upper == lower) throw std::invalid_argument("transition_frequency: upper == lower");
    const DonorEigensystem sys = donor_eigensystem(spec, B);
    const double f = (sys.level(upper).energy - sys.level(lower).energy) / two_pi;
    if (f < 0.0) throw std::invalid_argument("transition_frequency: labels not energy-ordered");
    return f;
}

double transition_df_dB(const DonorSpec& spec, int upper, int lower, double B) {
    const double h = 10e-6;  // tesla
    auto central = [&](double step) {
        return (transition_frequency(spec, upper, lower, B + step) -
                transition_frequency(spec, upper, lower, B - step)) / (2.0 * step);
    };
    const double d1 = central(h);
    const double d2 = central(0.5 * h);
    // Richardson fallback when the two stencils disagree beyond rounding
    const double scale = std::max({std::abs(d1), std::abs(d2), 1.0});
    if (std::abs(d1 - d2) > 1e-6 * scale) return (4.0 * d2 - d1) / 3.0;
    return d2;
}

}  // namespace spinbath
