#include "doctest.h"

#include "spinbath/io.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

using namespace spinbath;

namespace {

// every value the formats carry without unit conversion must survive exactly;
// converted columns (mT, MHz, GHz) are allowed the couple of ulp the scaling
// costs
bool near_ulp(double a, double b, double n_ulp = 4) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= n_ulp * std::numeric_limits<double>::epsilon() * scale;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_CASE("echo curve round-trips exactly, sidecar mirrors the header") {
    EchoCurve curve;
    curve.times = {0.0, 1.0 / 3.0, 2e-6, 0.004713282194859};
    curve.L = {1.0, 0.987654321098765, std::exp(-1.0), 1e-17};
    curve.meta.upper = 12;
    curve.meta.lower = 9;
    curve.meta.B = 0.32;
    curve.meta.k_max = 2;
    curve.meta.n_configs = 7;
    curve.meta.seed = 123456789012345ULL;
    curve.meta.lattice_side = 160.0;
    curve.meta.occupancy = 0.0467;
    curve.meta.invalid_divisions = 3;

    const std::string path = "io_echo.csv";
    write_echo_curve(path, curve);
    const EchoCurve back = read_echo_curve(path);

    REQUIRE(back.times.size() == curve.times.size());
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        CHECK(back.times[i] == curve.times[i]);
        CHECK(back.L[i] == curve.L[i]);
    }
    CHECK(back.meta.upper == 12);
    CHECK(back.meta.lower == 9);
    CHECK(near_ulp(back.meta.B, 0.32));
    CHECK(back.meta.k_max == 2);
    CHECK(back.meta.n_configs == 7);
    CHECK(back.meta.seed == 123456789012345ULL);
    CHECK(back.meta.lattice_side == 160.0);
    CHECK(back.meta.occupancy == 0.0467);
    CHECK(back.meta.invalid_divisions == 3);

    std::ifstream side(sidecar_path(path));
    REQUIRE(side.good());
    nlohmann::json j;
    side >> j;
    CHECK(j.at("seed").get<std::uint64_t>() == 123456789012345ULL);
    CHECK(j.at("transition").at("upper").get<int>() == 12);
    CHECK(j.at("n_configs").get<int>() == 7);
}

TEST_CASE("spectrum round-trip preserves grid and conditions") {
    Spectrum s;
    s.linewidth_sigma = 40e3;
    for (int i = 0; i < 50; ++i) {
        s.freq.push_back(1.2e6 + 931.7 * i);
        s.amplitude.push_back(std::abs(std::sin(0.3 * i)) * 1e-4);
    }
    const std::string path = "io_spectrum.csv";
    write_spectrum(path, s, 0.188443, 0.7853981633974483);
    const MeasuredSpectrum back = read_spectrum(path);

    CHECK(near_ulp(back.B, 0.188443));
    CHECK(back.theta == 0.7853981633974483);
    CHECK(back.spectrum.linewidth_sigma == 40e3);
    REQUIRE(back.spectrum.freq.size() == s.freq.size());
    for (std::size_t i = 0; i < s.freq.size(); ++i) {
        CHECK(near_ulp(back.spectrum.freq[i], s.freq[i]));
        CHECK(back.spectrum.amplitude[i] == s.amplitude[i]);
    }

    Spectrum bad = s;
    bad.amplitude.pop_back();
    CHECK_THROWS_AS(write_spectrum("io_bad.csv", bad, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("coupling table round-trip, flags and sanitized labels") {
    CouplingTable t;
    t.entries.push_back({0.8e6, 0.0, false, false, "shell_1"});
    t.entries.push_back({1.45e6, 0.3e6, true, false, "axial, strong"});
    t.entries.push_back({0.0512e6, 0.0, false, true, "weak\nline"});
    const std::string path = "io_table.csv";
    write_coupling_table(path, t);
    const CouplingTable back = read_coupling_table(path);

    REQUIRE(back.entries.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(near_ulp(back.entries[i].a_iso, t.entries[i].a_iso));
        CHECK(near_ulp(back.entries[i].T, t.entries[i].T, 4));
        CHECK(back.entries[i].is_anisotropic == t.entries[i].is_anisotropic);
        CHECK(back.entries[i].low_confidence == t.entries[i].low_confidence);
    }
    CHECK(back.entries[0].label == "shell_1");
    CHECK(back.entries[1].label == "axial; strong");  // comma cannot survive in csv
    CHECK(back.entries[2].label == "weak;line");
}

TEST_CASE("bath round-trip: exact positions, couplings to a few ulp") {
    LatticeSpec lat;
    lat.side = 30.0;
    BathConfiguration bath = sample_bath(lat, 77);
    REQUIRE(!bath.sites.empty());
    for (std::size_t i = 0; i < bath.sites.size(); ++i) {
        bath.sites[i].a_iso = two_pi * (0.1e6 + 17.3 * static_cast<double>(i));
        bath.sites[i].T_aniso = two_pi * 11.1 * static_cast<double>(i);
    }
    const std::string path = "io_bath.csv";
    write_bath(path, bath);
    const BathConfiguration back = read_bath(path);

    CHECK(back.seed == 77);
    CHECK(back.lattice.lattice_constant == lat.lattice_constant);
    CHECK(back.lattice.side == 30.0);
    CHECK(back.lattice.occupancy == lat.occupancy);
    CHECK(back.lattice.field_direction == lat.field_direction);
    REQUIRE(back.sites.size() == bath.sites.size());
    for (std::size_t i = 0; i < bath.sites.size(); ++i) {
        CHECK(back.sites[i].r.x == bath.sites[i].r.x);
        CHECK(back.sites[i].r.y == bath.sites[i].r.y);
        CHECK(back.sites[i].r.z == bath.sites[i].r.z);
        CHECK(back.sites[i].theta == bath.sites[i].theta);
        CHECK(near_ulp(back.sites[i].a_iso, bath.sites[i].a_iso));
        CHECK(near_ulp(back.sites[i].T_aniso, bath.sites[i].T_aniso));
    }
}

TEST_CASE("sweep round-trip keeps bounds, flags and error strings") {
    SweepResult sw;
    sw.upper = 12;
    sw.lower = 9;
    sw.seed = 42;
    sw.n_configs = 10;
    sw.k_max = 2;
    sw.B_owp = 0.187969731478277;
    sw.monotone_toward_owp = true;
    sw.lattice = LatticeSpec{};

    DecayFit ok;
    ok.T_SD = 4.81345e-4;
    ok.n = 2.11796;
    ok.T2 = 1e6;
    ok.residual_rms = 0.0123;
    DecayFit div;
    div.diverged = true;
    div.T_SD_lower_bound = 30.8078;
    sw.B_values = {0.17, 0.188};
    sw.fits = {ok, div};
    sw.t_max_used = {0.004, 10.0};
    sw.errors = {"", "grid capped, still flat"};

    const std::string path = "io_sweep.csv";
    write_sweep(path, sw);
    const SweepResult back = read_sweep(path);

    CHECK(back.upper == 12);
    CHECK(back.lower == 9);
    CHECK(back.seed == 42);
    CHECK(back.n_configs == 10);
    CHECK(back.k_max == 2);
    CHECK(near_ulp(back.B_owp, sw.B_owp));
    CHECK(back.monotone_toward_owp);
    REQUIRE(back.B_values.size() == 2);
    CHECK(near_ulp(back.B_values[0], 0.17));
    CHECK(near_ulp(back.B_values[1], 0.188));
    CHECK(back.fits[0].T_SD == ok.T_SD);
    CHECK(back.fits[0].n == ok.n);
    CHECK(back.fits[0].T2 == ok.T2);
    CHECK(!back.fits[0].diverged);
    CHECK(back.fits[1].diverged);
    CHECK(back.fits[1].T_SD_lower_bound == 30.8078);
    CHECK(back.t_max_used[1] == 10.0);
    CHECK(back.errors[0].empty());
    CHECK(back.errors[1] == "grid capped; still flat");  // comma sanitized
}

TEST_CASE("owp report json round-trip") {
    OWPReport rep;
    rep.transition.upper = 12;
    rep.transition.lower = 9;
    rep.transition.frequency = 5.215017106e9;
    rep.transition.dfdB = -6.97e6;
    rep.found = true;
    rep.B_owp = 0.187969731478277;
    rep.B_dfdb_zero = 0.188015959632163;
    rep.gamma_upper = 0.14142135623909816;
    rep.gamma_lower = -0.14142135623909816;

    const std::string path = "io_owp.json";
    write_owp_report(path, rep);
    const OWPReport back = read_owp_report(path);

    CHECK(back.transition.upper == 12);
    CHECK(back.transition.lower == 9);
    CHECK(near_ulp(back.transition.frequency, rep.transition.frequency));
    CHECK(near_ulp(back.transition.dfdB, rep.transition.dfdB));
    CHECK(back.found);
    CHECK(near_ulp(back.B_owp, rep.B_owp));
    CHECK(near_ulp(back.B_dfdb_zero, rep.B_dfdb_zero));
    CHECK(back.gamma_upper == rep.gamma_upper);
    CHECK(back.gamma_lower == rep.gamma_lower);

    write_text("io_owp_broken.json", "{ not json");
    CHECK_THROWS_AS(read_owp_report("io_owp_broken.json"), std::runtime_error);
}

TEST_CASE("malformed input reports the offending line") {
    write_text("io_bad_cell.csv",
               "# version=1\n# seed=0\n# upper=1\n# lower=2\n# B_mT=100\n# k_max=2\n"
               "# n_configs=1\n# lattice_side=10\n# occupancy=0.05\n# invalid_divisions=0\n"
               "t_seconds,L\n0,1\nnot_a_number,0.5\n");
    try {
        read_echo_curve("io_bad_cell.csv");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":13:") != std::string::npos);
        CHECK(std::string(e.what()).find("not a number") != std::string::npos);
    }

    write_text("io_bad_header.csv", "# version=1\n# B_mT=100\nwrong,header\n1,2\n");
    CHECK_THROWS_WITH_AS(read_spectrum("io_bad_header.csv"),
                         doctest::Contains("unexpected header"), std::runtime_error);

    write_text("io_missing_meta.csv", "# version=1\nfrequency_MHz,amplitude\n1,2\n");
    CHECK_THROWS_WITH_AS(read_spectrum("io_missing_meta.csv"),
                         doctest::Contains("missing metadata key 'B_mT'"), std::runtime_error);

    write_text("io_empty_spec.csv", "# version=1\n# B_mT=100\nfrequency_MHz,amplitude\n");
    CHECK_THROWS_WITH_AS(read_spectrum("io_empty_spec.csv"),
                         doctest::Contains("no samples"), std::runtime_error);

    write_text("io_short_row.csv",
               "# version=1\na_iso_MHz,T_MHz,is_anisotropic,low_confidence,label\n1,2,0\n");
    CHECK_THROWS_WITH_AS(read_coupling_table("io_short_row.csv"),
                         doctest::Contains("expected 5 columns"), std::runtime_error);

    CHECK_THROWS_WITH_AS(read_echo_curve("io_does_not_exist.csv"),
                         doctest::Contains("cannot open"), std::runtime_error);
}
