// command-line front end: spectrum synthesis and fitting, working-point
// reports, echo decay curves, field sweeps, bath realizations

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "spinbath/analysis.hpp"
#include "spinbath/cce.hpp"
#include "spinbath/endor.hpp"
#include "spinbath/hyperfine.hpp"
#include "spinbath/io.hpp"

namespace {

using namespace spinbath;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::pair<int, int> parse_transition(const std::string& s) {
    const auto parts = split_csv(s);
    int u = 0, l = 0;
    try {
        if (parts.size() != 2) throw std::invalid_argument("");
        u = std::stoi(parts[0]);
        l = std::stoi(parts[1]);
    } catch (const std::exception&) {
        throw CLI::ValidationError("--transition", "expected 'upper,lower' level labels");
    }
    if (u < 1 || u > 20 || l < 1 || l > 20 || u == l)
        throw CLI::ValidationError("--transition", "labels must be distinct and within 1..20");
    if (u < l) std::swap(u, l);
    return {u, l};
}

std::vector<double> parse_mT_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split_csv(s)) {
        const double v = std::stod(part);
        if (v < 0 || v > 2000) throw CLI::ValidationError("field", "B must lie in [0, 2000] mT");
        out.push_back(mT_to_T(v));
    }
    return out;
}

struct CommonArgs {
    std::string outdir = ".";
    std::uint64_t seed = 1;
    int threads = 0;
    std::string transition = "12,9";
    double side = 160.0;
    double occupancy = 0.0467;
    double lattice_constant = 5.431;
    double max_coupling_MHz = default_max_contact_coupling / two_pi / 1e6;
    int n_configs = 100;
    int k_max = 2;
    double r_cutoff = 0.0;
    bool average_amplitude = false;

    LatticeSpec lattice() const {
        LatticeSpec sp;
        sp.lattice_constant = lattice_constant;
        sp.side = side;
        sp.occupancy = occupancy;
        sp.validate();
        return sp;
    }
    HyperfineModel hyperfine() const {
        return make_hyperfine_model(lattice_constant, two_pi * 1e6 * max_coupling_MHz);
    }
    int pool() const {
        if (threads > 0) return threads;
        const unsigned hc = std::thread::hardware_concurrency();
        return hc ? static_cast<int>(hc) : 1;
    }
    std::string path(const std::string& name) const {
        std::filesystem::create_directories(outdir);
        return (std::filesystem::path(outdir) / name).string();
    }
};

void add_bath_options(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--side", a.side, "lattice cube edge, angstrom")->check(CLI::Range(10.0, 1e4));
    cmd->add_option("--occupancy", a.occupancy, "site occupation probability")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--lattice-constant", a.lattice_constant, "angstrom");
    cmd->add_option("--max-coupling", a.max_coupling_MHz,
                    "strongest contact coupling, MHz");
    cmd->add_option("--configs", a.n_configs, "bath realizations to average")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--k-max", a.k_max, "largest cluster size")->check(CLI::Range(1, 3));
    cmd->add_option("--r-cutoff", a.r_cutoff,
                    "pair separation cutoff, angstrom (0 = 3rd-neighbour shell)");
    cmd->add_flag("--average-amplitude", a.average_amplitude,
                  "average the complex echo over realizations instead of its modulus");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"donor-in-a-nuclear-spin-bath decoherence toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name
    app.set_config("--config", "", "flat key=value configuration file; flags win");

    CommonArgs a;
    if (const char* env = std::getenv("SPINBATH_OUTDIR")) a.outdir = env;
    app.add_option("--outdir", a.outdir, "output directory");
    app.add_option("--seed", a.seed, "master seed");
    app.add_option("--threads", a.threads, "worker pool size (0 = machine parallelism)");
    app.add_option("--transition", a.transition, "EPR transition as 'upper,lower'");

    const DonorSpec donor = DonorSpec::bismuth();

    // endor: synthesize spectra / line trajectories from a coupling table
    auto* endor = app.add_subcommand("endor", "spectra and line positions from a coupling table");
    std::string table_path;
    std::string field_list;
    double sweep_start = 100, sweep_stop = 600;
    int sweep_steps = 0;
    double sigma_kHz = 40;
    double theta = 0;
    endor->add_option("--table", table_path, "coupling table CSV")->required();
    endor->add_option("--B", field_list, "comma-separated fields (mT) to synthesize at");
    endor->add_option("--B-start", sweep_start, "trajectory sweep start, mT");
    endor->add_option("--B-stop", sweep_stop, "trajectory sweep stop, mT");
    endor->add_option("--B-steps", sweep_steps, "trajectory sweep length (0 = off)");
    endor->add_option("--sigma", sigma_kHz, "Gaussian linewidth, kHz")->check(CLI::PositiveNumber);
    endor->add_option("--theta", theta, "anisotropy-axis angle to the field, rad");

    // owp: working-point report for one transition
    auto* owp = app.add_subcommand("owp", "optimal working point of a transition");

    // decay: one ensemble echo curve plus its fit
    auto* decay = app.add_subcommand("decay", "ensemble Hahn-echo decay at one field");
    double decay_B_mT = 320;
    double t_max_ms = 4.0;
    int n_time = 60;
    decay->add_option("--B", decay_B_mT, "field, mT")->check(CLI::Range(0.0, 2000.0));
    decay->add_option("--t-max", t_max_ms, "time grid extent, ms")->check(CLI::PositiveNumber);
    decay->add_option("--n-time", n_time, "log-spaced time points")->check(CLI::Range(8, 2000));
    add_bath_options(decay, a);

    // sweep: T_SD across fields
    auto* sweep = app.add_subcommand("sweep", "coherence-time sweep over field");
    std::string sweep_fields = "170,180,185,187,188";
    double t_cap_ms = 10000.0;
    sweep->add_option("--B-list", sweep_fields, "comma-separated fields, mT");
    sweep->add_option("--t-max", t_max_ms, "initial time grid extent, ms");
    sweep->add_option("--t-cap", t_cap_ms, "largest grid extent when extending, ms");
    sweep->add_option("--n-time", n_time, "log-spaced time points")->check(CLI::Range(8, 2000));
    add_bath_options(sweep, a);

    // lattice: emit one bath realization
    auto* lattice = app.add_subcommand("lattice", "sample one bath configuration");
    add_bath_options(lattice, a);

    // fit-spectrum: extract couplings from measured spectra
    auto* fitsp = app.add_subcommand("fit-spectrum", "extract couplings from spectrum files");
    std::vector<std::string> spectrum_paths;
    double min_fraction = 0.6;
    fitsp->add_option("spectra", spectrum_paths, "spectrum CSV files (with sidecars)")
        ->required()
        ->check(CLI::ExistingFile);
    fitsp->add_option("--min-field-fraction", min_fraction,
                      "support needed to accept a coupling")
        ->check(CLI::Range(0.0, 1.0));

    CLI11_PARSE(app, argc, argv);

    try {
        const auto [upper, lower] = parse_transition(a.transition);

        if (*endor) {
            const CouplingTable table = read_coupling_table(table_path);
            TransitionSpec tr;
            tr.upper = upper;
            tr.lower = lower;
            if (!field_list.empty()) {
                const auto fields = parse_mT_list(field_list);
                for (std::size_t i = 0; i < fields.size(); ++i) {
                    const Spectrum sp = synthesize_spectrum(donor, table, tr, fields[i],
                                                            1e3 * sigma_kHz, theta);
                    const std::string name =
                        "endor_spectrum_" + std::to_string(i + 1) + ".csv";
                    write_spectrum(a.path(name), sp, fields[i], theta);
                    std::cout << name << " B_mT=" << T_to_mT(fields[i]) << "\n";
                }
            }
            if (sweep_steps > 0) {
                std::ofstream out(a.path("endor_lines.csv"));
                out << "# version=" << format_version << "\n";
                out << "B_mT,label,level,frequency_MHz\n";
                for (int k = 0; k < sweep_steps; ++k) {
                    const double frac = sweep_steps == 1 ? 0.0
                                                         : static_cast<double>(k) /
                                                               (sweep_steps - 1);
                    const double B = mT_to_T(sweep_start + (sweep_stop - sweep_start) * frac);
                    for (const auto& line : endor_lines(donor, table, tr, B, theta))
                        out << T_to_mT(B) << "," << line.coupling_label << "," << line.level
                            << "," << line.frequency / 1e6 << "\n";
                }
                std::cout << "endor_lines.csv steps=" << sweep_steps << "\n";
            }
            return 0;
        }

        if (*owp) {
            const OWPReport rep = find_owp(donor, upper, lower);
            write_owp_report(a.path("owp.json"), rep);
            if (rep.found)
                std::cout << "B_owp_mT=" << T_to_mT(rep.B_owp)
                          << " B_dfdb_zero_mT=" << T_to_mT(rep.B_dfdb_zero) << "\n";
            else
                std::cout << "no working point for this transition\n";
            return 0;
        }

        if (*decay) {
            EnsembleOptions eo;
            eo.cce.k_max = a.k_max;
            eo.cce.r_cutoff = a.r_cutoff;
            eo.n_configs = a.n_configs;
            eo.seed = a.seed;
            eo.threads = a.pool();
            eo.average_amplitude = a.average_amplitude;
            const auto grid = default_time_grid(ms_to_s(t_max_ms), n_time);
            const EchoCurve curve = ensemble_average(donor, a.lattice(), a.hyperfine(), upper,
                                                     lower, mT_to_T(decay_B_mT), grid, eo);
            write_echo_curve(a.path("echo.csv"), curve);
            const DecayFit fit = fit_decay(curve);
            if (fit.diverged)
                std::cout << "diverged=1 T_SD_lower_bound_s=" << fit.T_SD_lower_bound << "\n";
            else
                std::cout << "T_SD_s=" << fit.T_SD << " n=" << fit.n << " T2_s=" << fit.T2
                          << "\n";
            return 0;
        }

        if (*sweep) {
            SweepOptions so;
            so.ensemble.cce.k_max = a.k_max;
            so.ensemble.cce.r_cutoff = a.r_cutoff;
            so.ensemble.n_configs = a.n_configs;
            so.ensemble.seed = a.seed;
            so.ensemble.threads = a.pool();
            so.ensemble.average_amplitude = a.average_amplitude;
            so.t_max_initial = ms_to_s(t_max_ms);
            so.t_max_cap = ms_to_s(t_cap_ms);
            so.n_time = n_time;
            const SweepResult res = tsd_sweep(donor, a.lattice(), a.hyperfine(), upper, lower,
                                              parse_mT_list(sweep_fields), so);
            write_sweep(a.path("sweep.csv"), res);
            for (std::size_t i = 0; i < res.B_values.size(); ++i) {
                std::cout << "B_mT=" << T_to_mT(res.B_values[i]);
                if (!res.errors[i].empty())
                    std::cout << " error=" << res.errors[i];
                else if (res.fits[i].diverged)
                    std::cout << " diverged=1 T_SD_lower_bound_s="
                              << res.fits[i].T_SD_lower_bound;
                else
                    std::cout << " T_SD_s=" << res.fits[i].T_SD << " n=" << res.fits[i].n;
                std::cout << "\n";
            }
            return 0;
        }

        if (*lattice) {
            BathConfiguration bath = sample_bath(a.lattice(), a.seed);
            assign_contact_couplings(bath, a.hyperfine());
            write_bath(a.path("bath.csv"), bath);
            std::cout << "sites=" << bath.sites.size() << "\n";
            return 0;
        }

        if (*fitsp) {
            std::vector<MeasuredSpectrum> data;
            for (const auto& p : spectrum_paths) data.push_back(read_spectrum(p));
            TransitionSpec tr;
            tr.upper = upper;
            tr.lower = lower;
            ExtractionOptions opt;
            opt.min_field_fraction = min_fraction;
            const CouplingTable table = extract_couplings(donor, data, tr, opt);
            write_coupling_table(a.path("couplings.csv"), table);
            for (const auto& e : table.entries)
                std::cout << e.label << " a_iso_MHz=" << e.a_iso / 1e6
                          << (e.is_anisotropic ? " T_MHz=" + std::to_string(e.T / 1e6) : "")
                          << (e.low_confidence ? " low_confidence=1" : "") << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
