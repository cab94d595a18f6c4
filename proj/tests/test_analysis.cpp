#include "doctest.h"

#include "spinbath/analysis.hpp"
#include "spinbath/donor.hpp"
#include "spinbath/io.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace spinbath;

namespace {

const DonorSpec spec = DonorSpec::bismuth();

// cancellation field for the 12-9 doublet pair in closed form: the signed
// mixing parameters of (m=-3,+) and (m=-4,-) cancel where Omega_-3 = -Omega_-4,
// i.e. omega0 (1+delta)/A = 7/2, and gamma there is 1/(5 sqrt 2)
double owp_field_closed_form() {
    return spec.field_for_omega0(3.5 * spec.hyperfine / (1 + spec.delta_donor));
}

struct Extremum {
    int upper, lower;
    double B_mT, f_GHz;
};

}  // namespace

TEST_CASE("cancellation point of the 12-9 transition") {
    const OWPReport rep = find_owp(spec, 12, 9);
    REQUIRE(rep.found);

    CHECK(std::abs(rep.B_owp - owp_field_closed_form()) < 1e-9);
    CHECK(rep.B_owp == doctest::Approx(0.187969731478277).epsilon(1e-10));
    CHECK(T_to_mT(rep.B_owp) > 187.9);
    CHECK(T_to_mT(rep.B_owp) < 188.1);

    // mixing parameters at the cancellation: +-1/(5 sqrt 2) exactly
    CHECK(rep.gamma_upper == doctest::Approx(1.0 / (5.0 * std::sqrt(2.0))).epsilon(1e-9));
    CHECK(rep.gamma_lower == doctest::Approx(-1.0 / (5.0 * std::sqrt(2.0))).epsilon(1e-9));
    CHECK(std::abs(rep.gamma_upper + rep.gamma_lower) < 1e-8);

    // the eigensystem agrees: equal <Sz> on both levels
    const DonorEigensystem es = donor_eigensystem(spec, rep.B_owp);
    CHECK(std::abs(es.level(12).s_z() - es.level(9).s_z()) < 1e-8);

    // the frequency minimum sits a fraction of a millitesla above
    CHECK(rep.B_dfdb_zero == doctest::Approx(0.188015959632163).epsilon(1e-9));
    CHECK(rep.B_dfdb_zero > rep.B_owp);
    CHECK(std::abs(rep.B_dfdb_zero - rep.B_owp) < 1e-3);
    CHECK(std::abs(transition_df_dB(spec, 12, 9, rep.B_dfdb_zero)) < 1e3);  // Hz/T

    // transition frequency evaluated at B_owp
    CHECK(rep.transition.frequency == doctest::Approx(5.215017106e9).epsilon(1e-6));
    CHECK(rep.transition.upper == 12);
    CHECK(rep.transition.lower == 9);

    // field derivative collapses by ~4 orders of magnitude against a generic field
    CHECK(std::abs(transition_df_dB(spec, 12, 9, 0.188)) < 1e7);
    CHECK(std::abs(transition_df_dB(spec, 12, 9, 0.320)) > 1e9);
}

TEST_CASE("transitions through an unmixed level have no cancellation point") {
    for (const int other : {1, 11, 19}) {
        const OWPReport rep = find_owp(spec, 20, other);
        CHECK(!rep.found);
    }
    CHECK_THROWS_AS(find_owp(spec, 9, 9), std::invalid_argument);
}

TEST_CASE("census of frequency minima in the 5-7.5 GHz window") {
    const auto extrema = find_df_db_extrema(spec, 5e9, 7.5e9);

    std::vector<Extremum> minima;
    for (const auto& e : extrema)
        if (e.is_minimum)
            minima.push_back({e.transition.upper, e.transition.lower, T_to_mT(e.B),
                              Hz_to_GHz(e.transition.frequency)});
    REQUIRE(minima.size() == 8);

    const std::vector<Extremum> expected = {
        {14, 5, 26.5185877, 7.33982899}, {15, 6, 26.6500493, 7.33945855},
        {13, 6, 79.7624747, 7.03389346}, {14, 7, 79.8884372, 7.03278114},
        {12, 7, 133.308079, 6.3751268},  {13, 8, 133.422114, 6.37326844},
        {11, 8, 187.923502, 5.21763618}, {12, 9, 188.01596, 5.21501694}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(minima[i].upper == expected[i].upper);
        CHECK(minima[i].lower == expected[i].lower);
        CHECK(std::abs(minima[i].B_mT - expected[i].B_mT) < 0.5);
        CHECK(std::abs(minima[i].f_GHz - expected[i].f_GHz) < 0.005);
    }

    // each doublet-partner family (upper + lower = 21) contributes exactly one
    std::set<std::pair<int, int>> canonical;
    for (const auto& m : minima)
        if (m.upper + m.lower == 21) canonical.insert({m.upper, m.lower});
    const std::set<std::pair<int, int>> canonical_expect = {{15, 6}, {14, 7}, {13, 8}, {12, 9}};
    CHECK(canonical == canonical_expect);

    // results arrive sorted by field
    for (std::size_t i = 1; i < extrema.size(); ++i) CHECK(extrema[i].B >= extrema[i - 1].B);
}

TEST_CASE("census of frequency maxima around 1 GHz") {
    const auto extrema = find_df_db_extrema(spec, 0.8e9, 1.2e9);
    std::vector<Extremum> maxima;
    for (const auto& e : extrema)
        if (!e.is_minimum)
            maxima.push_back({e.transition.upper, e.transition.lower, T_to_mT(e.B),
                              Hz_to_GHz(e.transition.frequency)});
    REQUIRE(maxima.size() == 4);

    const std::vector<Extremum> expected = {{12, 11, 367.539192, 1.04070157},
                                            {9, 8, 369.315265, 1.04583531},
                                            {13, 12, 513.042216, 0.850160635},
                                            {8, 7, 525.974369, 0.857397396}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(maxima[i].upper == expected[i].upper);
        CHECK(maxima[i].lower == expected[i].lower);
        CHECK(std::abs(maxima[i].B_mT - expected[i].B_mT) < 0.5);
        CHECK(std::abs(maxima[i].f_GHz - expected[i].f_GHz) < 0.005);
    }

    // restricted band keeps exactly the adjacent-level pair near 1.04 GHz
    const auto band = find_df_db_extrema(spec, 0.95e9, 1.15e9);
    std::set<std::pair<int, int>> got;
    for (const auto& e : band)
        if (!e.is_minimum) got.insert({e.transition.upper, e.transition.lower});
    const std::set<std::pair<int, int>> want = {{12, 11}, {9, 8}};
    CHECK(got == want);
}

TEST_CASE("extrema scan argument validation and empty windows") {
    CHECK_THROWS_AS(find_df_db_extrema(spec, 2e9, 2e9), std::invalid_argument);
    CHECK(find_df_db_extrema(spec, 5.5e9, 5.5e9 + 1.0).empty());
}

TEST_CASE("decay-fit wrapper reads the curve straight") {
    EchoCurve curve;
    curve.times = {0.0};
    curve.L = {1.0};
    const double T_SD = 0.6e-3, n = 2.2;
    for (int i = 1; i <= 50; ++i) {
        const double t = 3e-3 * i / 50.0;
        curve.times.push_back(t);
        curve.L.push_back(std::exp(-std::pow(t / T_SD, n)));
    }
    const DecayFit via_curve = fit_decay(curve);
    const DecayFit direct = fit_decay(curve.times, curve.L);
    CHECK(via_curve.T_SD == direct.T_SD);
    CHECK(via_curve.n == direct.n);
    CHECK(via_curve.T_SD == doctest::Approx(T_SD).epsilon(1e-6));

    DecayFit plain;
    plain.T_SD = 1.5e-3;
    CHECK(effective_tsd(plain) == 1.5e-3);
    DecayFit bounded;
    bounded.diverged = true;
    bounded.T_SD_lower_bound = 0.5;
    bounded.T_SD = 0.0;
    CHECK(effective_tsd(bounded) == 0.5);
}

TEST_CASE("single-field sweep equals the hand-run pipeline") {
    LatticeSpec lat;
    lat.side = 40.0;
    const HyperfineModel model = make_hyperfine_model(lat.lattice_constant,
                                                      default_max_contact_coupling);
    SweepOptions opt;
    opt.ensemble.n_configs = 3;
    opt.ensemble.seed = 5;
    opt.ensemble.cce.k_max = 2;
    opt.t_max_initial = 4e-3;
    opt.n_time = 20;

    const SweepResult sweep = tsd_sweep(spec, lat, model, 12, 9, {0.32}, opt);
    REQUIRE(sweep.B_values.size() == 1);
    REQUIRE(sweep.errors[0].empty());

    EnsembleOptions eopt = opt.ensemble;
    eopt.seed = derive_seed(opt.ensemble.seed, 0);
    const auto grid = default_time_grid(opt.t_max_initial, opt.n_time, opt.t_min);
    const EchoCurve curve = ensemble_average(spec, lat, model, 12, 9, 0.32, grid, eopt);
    const DecayFit direct = fit_decay(curve);

    CHECK(sweep.fits[0].T_SD == direct.T_SD);
    CHECK(sweep.fits[0].n == direct.n);
    CHECK(sweep.t_max_used[0] == opt.t_max_initial);
    CHECK(sweep.B_owp == doctest::Approx(0.187969731478277).epsilon(1e-9));
    CHECK(sweep.upper == 12);
    CHECK(sweep.n_configs == 3);

    CHECK_THROWS_AS(tsd_sweep(spec, lat, model, 12, 9, {}, opt), std::invalid_argument);
}
