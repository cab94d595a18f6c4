#include "doctest.h"

#include "spinbath/couplings.hpp"
#include "spinbath/donor.hpp"
#include "spinbath/endor.hpp"
#include "spinbath/fit.hpp"
#include "spinbath/linalg.hpp"
#include "spinbath/rng.hpp"
#include "spinbath/spin_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace spinbath;

namespace {

const DonorSpec spec = DonorSpec::bismuth();

double bath_zeeman_hz(double B) { return spec.delta_bath * spec.omega0(B) / two_pi; }

// resonance of one bath spin next to the full donor, no approximations:
// diagonalize H on the donor (x) bath product space and read off the
// splitting of the two bath sublevels attached to one donor eigenstate
double brute_force_frequency(const DonorEigensystem& es, int label, double omega0, double alpha,
                             double beta) {
    const SpinOperators half = spin_operators(0.5);
    const int d = spec.dim();
    const MatC donor_H = donor_hamiltonian(spec, es.B);
    const MatC id_d = MatC::Identity(d, d);
    const MatC sz_prod =
        kron(spin_operators(spec.electron_spin).jz,
             MatC::Identity(spec.nuclear_dim(), spec.nuclear_dim()));
    const MatC H = kron(donor_H, half.identity) + kron(sz_prod, alpha * half.jz + beta * half.jx) +
                   kron(id_d, -spec.delta_bath * omega0 * half.jz);
    const Eigensystem full = eigh(H);

    MatC u0(d, 1);
    u0.col(0) = es.level(label).state;
    const MatC e0 = (MatC(2, 1) << 1, 0).finished();
    const MatC e1 = (MatC(2, 1) << 0, 1).finished();
    const VecC c0 = kron(u0, e0).col(0), c1 = kron(u0, e1).col(0);

    int best = -1, second = -1;
    double wbest = -1, wsecond = -1;
    for (int k = 0; k < 2 * d; ++k) {
        const VecC w = full.vectors.col(k);
        const double weight = std::norm(c0.dot(w)) + std::norm(c1.dot(w));
        if (weight > wbest) {
            second = best;
            wsecond = wbest;
            best = k;
            wbest = weight;
        } else if (weight > wsecond) {
            second = k;
            wsecond = weight;
        }
    }
    return std::abs(full.values(best) - full.values(second)) / two_pi;
}

CouplingTable iso_table(const std::vector<double>& a_MHz) {
    CouplingTable t;
    for (const double a : a_MHz) t.entries.push_back({a * 1e6, 0.0, false, false, ""});
    return t;
}

}  // namespace

TEST_CASE("zero electron projection pins every line to the bare bath Zeeman") {
    for (const double B : {0.05, 0.188, 0.32, 0.57}) {
        const double w0 = spec.omega0(B);
        for (const double a_MHz : {0.1, 0.9, 4.2}) {
            const double f = endor_frequency_iso(spec, 0.0, w0, two_pi * a_MHz * 1e6);
            CHECK(f == doctest::Approx(bath_zeeman_hz(B)).epsilon(1e-12));
        }
    }
    // frozen value at 188 mT, recomputed from the constants
    CHECK(bath_zeeman_hz(0.188) == doctest::Approx(1591711.848).epsilon(1e-6));
}

TEST_CASE("zero coupling pins every level's line to the bare bath Zeeman") {
    const CouplingTable t = iso_table({0.0});
    for (const double B : {0.1, 0.3}) {
        for (int u = 2; u <= 20; ++u) {
            TransitionSpec tr;
            tr.upper = u;
            tr.lower = u - 1;
            const auto lines = endor_lines(spec, t, tr, B);
            REQUIRE(lines.size() == 2);
            for (const auto& ln : lines)
                CHECK(ln.frequency == doctest::Approx(bath_zeeman_hz(B)).epsilon(1e-12));
        }
    }
}

TEST_CASE("anisotropic line with beta = 0 reduces to the isotropic one") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const double B = rng.uniform(0.03, 0.6);
        const double w0 = spec.omega0(B);
        const double s = rng.uniform(-0.5, 0.5);
        const double a = two_pi * rng.uniform(0.05e6, 5e6);
        CHECK(endor_frequency_aniso(spec, s, w0, a, 0.0) ==
              doctest::Approx(endor_frequency_iso(spec, s, w0, a)).epsilon(1e-14));
        // and the aniso frequency is even in beta
        const double beta = two_pi * rng.uniform(0.0, 3e6);
        CHECK(endor_frequency_aniso(spec, s, w0, a, beta) ==
              doctest::Approx(endor_frequency_aniso(spec, s, w0, a, -beta)).epsilon(1e-14));
    }
}

TEST_CASE("line formula agrees with full donor+nucleus diagonalization") {
    Rng rng(20260813);
    double worst = 0;
    for (int i = 0; i < 150; ++i) {
        const double B = rng.uniform(0.05, 0.6);
        const double a = two_pi * rng.uniform(0.1e6, 5e6);
        const double T = (i % 2 == 0) ? two_pi * rng.uniform(0.0, 3e6) : 0.0;
        const double theta = rng.uniform(0.0, pi);
        const int label = static_cast<int>(rng.below(20)) + 1;

        const DonorEigensystem es = donor_eigensystem(spec, B);
        const double w0 = spec.omega0(B);
        const auto [alpha, beta] = effective_interaction(a, T, theta);
        const double f_model = endor_frequency_aniso(spec, es.level(label).s_z(), w0, alpha, beta);
        const double f_exact = brute_force_frequency(es, label, w0, alpha, beta);
        worst = std::max(worst, std::abs(f_model - f_exact));
    }
    CHECK(worst < 10.0);  // Hz; second-order shifts cancel in the sublevel difference
}

TEST_CASE("synthesized spectrum: grid, positivity, peak positions") {
    TransitionSpec tr;
    tr.upper = 12;
    tr.lower = 9;
    const CouplingTable t = iso_table({1.2});
    const Spectrum s = synthesize_spectrum(spec, t, tr, 0.25, 40e3);
    REQUIRE(s.freq.size() == 4000);
    REQUIRE(s.amplitude.size() == s.freq.size());
    for (std::size_t i = 1; i < s.freq.size(); ++i) CHECK(s.freq[i] > s.freq[i - 1]);
    for (const double a : s.amplitude) CHECK(a >= 0.0);

    const double amax = *std::max_element(s.amplitude.begin(), s.amplitude.end());
    const auto peaks = detect_peaks(s.freq, s.amplitude, 0.05 * amax);
    const auto lines = endor_lines(spec, t, tr, 0.25);
    REQUIRE(lines.size() == 2);
    REQUIRE(peaks.size() == 2);
    std::vector<double> expect = {lines[0].frequency, lines[1].frequency};
    std::sort(expect.begin(), expect.end());
    CHECK(peaks[0] == doctest::Approx(expect[0]).epsilon(2e-4));
    CHECK(peaks[1] == doctest::Approx(expect[1]).epsilon(2e-4));
}

TEST_CASE("empty coupling table gives a flat window around the bath Zeeman") {
    TransitionSpec tr;
    tr.upper = 12;
    tr.lower = 9;
    const Spectrum s = synthesize_spectrum(spec, CouplingTable{}, tr, 0.188, 40e3);
    REQUIRE(!s.freq.empty());
    const double z = bath_zeeman_hz(0.188);
    CHECK(s.freq.front() < z);
    CHECK(s.freq.back() > z);
    for (const double a : s.amplitude) CHECK(a == 0.0);
    for (std::size_t i = 1; i < s.freq.size(); ++i) CHECK(s.freq[i] > s.freq[i - 1]);
}

TEST_CASE("frequency comb collapses near the cancellation point") {
    // at the working point the two donor levels share one <Sz>, so each
    // coupling's pair of lines merges and the comb width shrinks to the
    // spread left by the couplings themselves
    const CouplingTable t = iso_table(
        {0.22, 0.35, 0.52, 0.70, 0.95, 1.30, 1.75, 2.10, 2.80, 3.50, 4.40, 5.60});
    TransitionSpec tr;
    tr.upper = 12;
    tr.lower = 9;

    const auto lines_owp = endor_lines(spec, t, tr, 0.188);
    const auto lines_far = endor_lines(spec, t, tr, 0.570);
    REQUIRE(lines_owp.size() == 24);
    REQUIRE(lines_far.size() == 24);

    const double w_owp = comb_width(lines_owp);
    const double w_far = comb_width(lines_far);
    CHECK(w_owp == doctest::Approx(380834.0).epsilon(1e-4));
    CHECK(w_far == doctest::Approx(5.05708e6).epsilon(1e-4));
    CHECK(w_owp / w_far < 0.1);

    // the collapsed comb sits on the bath Zeeman frequency at the resolution
    // of the far-field comb width
    CHECK(std::abs(comb_center(lines_owp) - bath_zeeman_hz(0.188)) < w_far / 10.0);
}

TEST_CASE("couplings extracted from multi-field spectra match the input") {
    const std::vector<double> truth_MHz = {0.32, 0.78, 1.45, 2.30};
    const CouplingTable truth = iso_table(truth_MHz);
    TransitionSpec tr;
    tr.upper = 12;
    tr.lower = 9;

    Rng noise(99);
    std::vector<MeasuredSpectrum> data;
    for (const double B : {0.11, 0.18, 0.26, 0.35, 0.45, 0.56}) {
        MeasuredSpectrum m;
        m.B = B;
        m.theta = 0.0;
        m.spectrum = synthesize_spectrum(spec, truth, tr, B, 40e3);
        for (double& a : m.spectrum.amplitude) a *= 1.0 + 0.01 * (2 * noise.uniform() - 1);
        data.push_back(std::move(m));
    }

    const CouplingTable out = extract_couplings(spec, data, tr);
    REQUIRE(out.entries.size() == truth_MHz.size());
    std::vector<double> got;
    for (const auto& e : out.entries) {
        CHECK(!e.low_confidence);
        CHECK(!e.is_anisotropic);
        got.push_back(e.a_iso);
    }
    std::sort(got.begin(), got.end());
    for (std::size_t i = 0; i < truth_MHz.size(); ++i)
        CHECK(std::abs(got[i] - truth_MHz[i] * 1e6) / (truth_MHz[i] * 1e6) < 0.01);

    // the recovered table reproduces the lines at a field it has never seen
    CouplingTable sorted_out = out;
    std::sort(sorted_out.entries.begin(), sorted_out.entries.end(),
              [](const CouplingEntry& x, const CouplingEntry& y) { return x.a_iso < y.a_iso; });
    const auto lines_true = endor_lines(spec, truth, tr, 0.30);
    const auto lines_got = endor_lines(spec, sorted_out, tr, 0.30);
    REQUIRE(lines_true.size() == lines_got.size());
    std::vector<double> ft, fg;
    for (const auto& l : lines_true) ft.push_back(l.frequency);
    for (const auto& l : lines_got) fg.push_back(l.frequency);
    std::sort(ft.begin(), ft.end());
    std::sort(fg.begin(), fg.end());
    for (std::size_t i = 0; i < ft.size(); ++i) CHECK(std::abs(ft[i] - fg[i]) < 1e3);
}

TEST_CASE("a single spectrum cannot fix the branch: everything is low confidence") {
    const CouplingTable truth = iso_table({0.9, 2.1});
    TransitionSpec tr;
    tr.upper = 12;
    tr.lower = 9;
    MeasuredSpectrum m;
    m.B = 0.3;
    m.spectrum = synthesize_spectrum(spec, truth, tr, 0.3, 40e3);
    const CouplingTable out = extract_couplings(spec, {m}, tr);
    REQUIRE(!out.entries.empty());
    for (const auto& e : out.entries) CHECK(e.low_confidence);
}

TEST_CASE("anisotropic couplings are recovered from orientation series") {
    CouplingTable truth;
    truth.entries.push_back({2.8e6, 2.4e6, true, false, "axial"});
    truth.entries.push_back({0.9e6, 0.0, false, false, "iso"});
    TransitionSpec tr;
    tr.upper = 12;
    tr.lower = 9;

    std::vector<MeasuredSpectrum> data;
    for (const double B : {0.15, 0.30, 0.45})
        for (const double theta : {0.3, 0.9, 1.4}) {
            MeasuredSpectrum m;
            m.B = B;
            m.theta = theta;
            m.spectrum = synthesize_spectrum(spec, truth, tr, B, 40e3, theta);
            data.push_back(std::move(m));
        }

    const CouplingTable out = extract_couplings(spec, data, tr);
    const CouplingEntry* aniso = nullptr;
    const CouplingEntry* iso = nullptr;
    for (const auto& e : out.entries) {
        if (e.is_anisotropic && (!aniso || e.T > aniso->T)) aniso = &e;
        if (!e.is_anisotropic && (!iso || std::abs(e.a_iso - 0.9e6) <
                                              std::abs(iso->a_iso - 0.9e6)))
            iso = &e;
    }
    REQUIRE(aniso != nullptr);
    REQUIRE(iso != nullptr);
    CHECK(std::abs(aniso->a_iso - 2.8e6) / 2.8e6 < 0.05);
    CHECK(std::abs(aniso->T - 2.4e6) / 2.4e6 < 0.05);
    CHECK(std::abs(iso->a_iso - 0.9e6) / 0.9e6 < 0.05);
}
