#include "spinbath/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace spinbath {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return in;
}

[[noreturn]] void bad_line(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& path, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) bad_line(path, line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        bad_line(path, line, "not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
        bad_line(path, line, "number out of range: '" + s + "'");
    }
}

// '# key=value' block; leaves the stream at the first non-metadata line
std::map<std::string, std::string> read_meta(std::ifstream& in, int& line_no) {
    std::map<std::string, std::string> meta;
    while (in.peek() == '#') {
        std::string line;
        std::getline(in, line);
        ++line_no;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        while (!key.empty() && key.back() == ' ') key.pop_back();
        meta[key] = line.substr(eq + 1);
    }
    return meta;
}

double meta_num(const std::map<std::string, std::string>& meta, const std::string& key,
                const std::string& path) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error(path + ": missing metadata key '" + key + "'");
    return std::stod(it->second);
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void expect_header(std::ifstream& in, const std::string& expected, const std::string& path,
                   int& line_no) {
    std::string line;
    if (!std::getline(in, line)) bad_line(path, line_no + 1, "missing header row");
    ++line_no;
    if (line != expected)
        bad_line(path, line_no, "unexpected header '" + line + "' (want '" + expected + "')");
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void write_echo_curve(const std::string& csv_path, const EchoCurve& curve) {
    auto out = open_out(csv_path);
    const EchoMeta& m = curve.meta;
    out << "# version=" << format_version << "\n";
    out << "# seed=" << m.seed << "\n";
    out << "# upper=" << m.upper << "\n";
    out << "# lower=" << m.lower << "\n";
    out << "# B_mT=" << fmt(T_to_mT(m.B)) << "\n";
    out << "# k_max=" << m.k_max << "\n";
    out << "# n_configs=" << m.n_configs << "\n";
    out << "# lattice_side=" << fmt(m.lattice_side) << "\n";
    out << "# occupancy=" << fmt(m.occupancy) << "\n";
    out << "# invalid_divisions=" << m.invalid_divisions << "\n";
    out << "t_seconds,L\n";
    for (std::size_t i = 0; i < curve.times.size(); ++i)
        out << fmt(curve.times[i]) << "," << fmt(curve.L[i]) << "\n";

    json j;
    j["version"] = format_version;
    j["seed"] = m.seed;
    j["transition"] = {{"upper", m.upper}, {"lower", m.lower}};
    j["B_mT"] = T_to_mT(m.B);
    j["k_max"] = m.k_max;
    j["n_configs"] = m.n_configs;
    j["lattice_side"] = m.lattice_side;
    j["occupancy"] = m.occupancy;
    j["invalid_divisions"] = m.invalid_divisions;
    open_out(sidecar_path(csv_path)) << j.dump(2) << "\n";
}

EchoCurve read_echo_curve(const std::string& csv_path) {
    auto in = open_in(csv_path);
    int line_no = 0;
    const auto meta = read_meta(in, line_no);
    EchoCurve curve;
    curve.meta.seed = meta.count("seed") ? std::stoull(meta.at("seed")) : 0;
    curve.meta.upper = static_cast<int>(meta_num(meta, "upper", csv_path));
    curve.meta.lower = static_cast<int>(meta_num(meta, "lower", csv_path));
    curve.meta.B = mT_to_T(meta_num(meta, "B_mT", csv_path));
    curve.meta.k_max = static_cast<int>(meta_num(meta, "k_max", csv_path));
    curve.meta.n_configs = static_cast<int>(meta_num(meta, "n_configs", csv_path));
    curve.meta.lattice_side = meta_num(meta, "lattice_side", csv_path);
    curve.meta.occupancy = meta_num(meta, "occupancy", csv_path);
    curve.meta.invalid_divisions =
        static_cast<std::int64_t>(meta_num(meta, "invalid_divisions", csv_path));

    expect_header(in, "t_seconds,L", csv_path, line_no);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) bad_line(csv_path, line_no, "expected 2 columns");
        curve.times.push_back(to_double(cells[0], csv_path, line_no));
        curve.L.push_back(to_double(cells[1], csv_path, line_no));
    }
    return curve;
}

void write_spectrum(const std::string& csv_path, const Spectrum& spectrum, double B,
                    double theta) {
    if (spectrum.freq.size() != spectrum.amplitude.size())
        throw std::invalid_argument("write_spectrum: grid/amplitude size mismatch");
    auto out = open_out(csv_path);
    out << "# version=" << format_version << "\n";
    out << "# B_mT=" << fmt(T_to_mT(B)) << "\n";
    out << "# theta_rad=" << fmt(theta) << "\n";
    out << "# linewidth_sigma_Hz=" << fmt(spectrum.linewidth_sigma) << "\n";
    out << "frequency_MHz,amplitude\n";
    for (std::size_t i = 0; i < spectrum.freq.size(); ++i)
        out << fmt(spectrum.freq[i] / 1e6) << "," << fmt(spectrum.amplitude[i]) << "\n";

    json j;
    j["version"] = format_version;
    j["B_mT"] = T_to_mT(B);
    j["theta_rad"] = theta;
    j["linewidth_sigma_Hz"] = spectrum.linewidth_sigma;
    open_out(sidecar_path(csv_path)) << j.dump(2) << "\n";
}

MeasuredSpectrum read_spectrum(const std::string& csv_path) {
    auto in = open_in(csv_path);
    int line_no = 0;
    const auto meta = read_meta(in, line_no);
    MeasuredSpectrum out;
    out.B = mT_to_T(meta_num(meta, "B_mT", csv_path));
    out.theta = meta.count("theta_rad") ? std::stod(meta.at("theta_rad")) : 0.0;
    out.spectrum.linewidth_sigma =
        meta.count("linewidth_sigma_Hz") ? std::stod(meta.at("linewidth_sigma_Hz")) : 0.0;

    expect_header(in, "frequency_MHz,amplitude", csv_path, line_no);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) bad_line(csv_path, line_no, "expected 2 columns");
        out.spectrum.freq.push_back(to_double(cells[0], csv_path, line_no) * 1e6);
        out.spectrum.amplitude.push_back(to_double(cells[1], csv_path, line_no));
    }
    if (out.spectrum.freq.empty()) bad_line(csv_path, line_no, "spectrum has no samples");
    return out;
}

void write_coupling_table(const std::string& csv_path, const CouplingTable& table) {
    auto out = open_out(csv_path);
    out << "# version=" << format_version << "\n";
    out << "a_iso_MHz,T_MHz,is_anisotropic,low_confidence,label\n";
    for (const auto& e : table.entries)
        out << fmt(e.a_iso / 1e6) << "," << fmt(e.T / 1e6) << "," << (e.is_anisotropic ? 1 : 0)
            << "," << (e.low_confidence ? 1 : 0) << "," << sanitize(e.label) << "\n";
}

CouplingTable read_coupling_table(const std::string& csv_path) {
    auto in = open_in(csv_path);
    int line_no = 0;
    read_meta(in, line_no);
    expect_header(in, "a_iso_MHz,T_MHz,is_anisotropic,low_confidence,label", csv_path, line_no);
    CouplingTable table;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 5) bad_line(csv_path, line_no, "expected 5 columns");
        CouplingEntry e;
        e.a_iso = to_double(cells[0], csv_path, line_no) * 1e6;
        e.T = to_double(cells[1], csv_path, line_no) * 1e6;
        e.is_anisotropic = cells[2] == "1";
        e.low_confidence = cells[3] == "1";
        e.label = cells[4];
        table.entries.push_back(std::move(e));
    }
    return table;
}

void write_bath(const std::string& csv_path, const BathConfiguration& bath) {
    auto out = open_out(csv_path);
    out << "# version=" << format_version << "\n";
    out << "# seed=" << bath.seed << "\n";
    out << "# lattice_constant=" << fmt(bath.lattice.lattice_constant) << "\n";
    out << "# side=" << fmt(bath.lattice.side) << "\n";
    out << "# occupancy=" << fmt(bath.lattice.occupancy) << "\n";
    out << "# field_direction=" << fmt(bath.lattice.field_direction[0]) << ";"
        << fmt(bath.lattice.field_direction[1]) << ";" << fmt(bath.lattice.field_direction[2])
        << "\n";
    out << "x_angstrom,y_angstrom,z_angstrom,a_iso_MHz,T_MHz,theta_rad\n";
    for (const auto& s : bath.sites)
        out << fmt(s.r.x) << "," << fmt(s.r.y) << "," << fmt(s.r.z) << ","
            << fmt(s.a_iso / two_pi / 1e6) << "," << fmt(s.T_aniso / two_pi / 1e6) << ","
            << fmt(s.theta) << "\n";
}

BathConfiguration read_bath(const std::string& csv_path) {
    auto in = open_in(csv_path);
    int line_no = 0;
    const auto meta = read_meta(in, line_no);
    BathConfiguration bath;
    bath.seed = meta.count("seed") ? std::stoull(meta.at("seed")) : 0;
    bath.lattice.lattice_constant = meta_num(meta, "lattice_constant", csv_path);
    bath.lattice.side = meta_num(meta, "side", csv_path);
    bath.lattice.occupancy = meta_num(meta, "occupancy", csv_path);
    if (meta.count("field_direction")) {
        const auto parts = split(meta.at("field_direction"), ';');
        if (parts.size() == 3)
            for (int k = 0; k < 3; ++k)
                bath.lattice.field_direction[static_cast<std::size_t>(k)] =
                    std::stod(parts[static_cast<std::size_t>(k)]);
    }

    expect_header(in, "x_angstrom,y_angstrom,z_angstrom,a_iso_MHz,T_MHz,theta_rad", csv_path,
                  line_no);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 6) bad_line(csv_path, line_no, "expected 6 columns");
        BathSite s;
        s.r.x = to_double(cells[0], csv_path, line_no);
        s.r.y = to_double(cells[1], csv_path, line_no);
        s.r.z = to_double(cells[2], csv_path, line_no);
        s.a_iso = to_double(cells[3], csv_path, line_no) * 1e6 * two_pi;
        s.T_aniso = to_double(cells[4], csv_path, line_no) * 1e6 * two_pi;
        s.theta = to_double(cells[5], csv_path, line_no);
        bath.sites.push_back(s);
    }
    return bath;
}

void write_sweep(const std::string& csv_path, const SweepResult& sweep) {
    auto out = open_out(csv_path);
    out << "# version=" << format_version << "\n";
    out << "# seed=" << sweep.seed << "\n";
    out << "# upper=" << sweep.upper << "\n";
    out << "# lower=" << sweep.lower << "\n";
    out << "# lattice_constant=" << fmt(sweep.lattice.lattice_constant) << "\n";
    out << "# side=" << fmt(sweep.lattice.side) << "\n";
    out << "# occupancy=" << fmt(sweep.lattice.occupancy) << "\n";
    out << "# n_configs=" << sweep.n_configs << "\n";
    out << "# k_max=" << sweep.k_max << "\n";
    out << "# B_owp_mT=" << fmt(T_to_mT(sweep.B_owp)) << "\n";
    out << "# monotone_toward_owp=" << (sweep.monotone_toward_owp ? 1 : 0) << "\n";
    out << "B_mT,T_SD_s,n,T2_s,diverged,T_SD_lower_bound_s,residual_rms,t_max_s,error\n";
    for (std::size_t i = 0; i < sweep.B_values.size(); ++i) {
        const DecayFit& f = sweep.fits[i];
        out << fmt(T_to_mT(sweep.B_values[i])) << "," << fmt(f.T_SD) << "," << fmt(f.n) << ","
            << fmt(f.T2) << "," << (f.diverged ? 1 : 0) << "," << fmt(f.T_SD_lower_bound) << ","
            << fmt(f.residual_rms) << "," << fmt(sweep.t_max_used[i]) << ","
            << sanitize(sweep.errors[i]) << "\n";
    }
}

SweepResult read_sweep(const std::string& csv_path) {
    auto in = open_in(csv_path);
    int line_no = 0;
    const auto meta = read_meta(in, line_no);
    SweepResult sweep;
    sweep.seed = meta.count("seed") ? std::stoull(meta.at("seed")) : 0;
    sweep.upper = static_cast<int>(meta_num(meta, "upper", csv_path));
    sweep.lower = static_cast<int>(meta_num(meta, "lower", csv_path));
    sweep.lattice.lattice_constant = meta_num(meta, "lattice_constant", csv_path);
    sweep.lattice.side = meta_num(meta, "side", csv_path);
    sweep.lattice.occupancy = meta_num(meta, "occupancy", csv_path);
    sweep.n_configs = static_cast<int>(meta_num(meta, "n_configs", csv_path));
    sweep.k_max = static_cast<int>(meta_num(meta, "k_max", csv_path));
    sweep.B_owp = mT_to_T(meta_num(meta, "B_owp_mT", csv_path));
    sweep.monotone_toward_owp = meta.count("monotone_toward_owp") &&
                                meta.at("monotone_toward_owp") == "1";

    expect_header(in, "B_mT,T_SD_s,n,T2_s,diverged,T_SD_lower_bound_s,residual_rms,t_max_s,error",
                  csv_path, line_no);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 9) bad_line(csv_path, line_no, "expected 9 columns");
        sweep.B_values.push_back(mT_to_T(to_double(cells[0], csv_path, line_no)));
        DecayFit f;
        f.T_SD = to_double(cells[1], csv_path, line_no);
        f.n = to_double(cells[2], csv_path, line_no);
        f.T2 = to_double(cells[3], csv_path, line_no);
        f.diverged = cells[4] == "1";
        f.T_SD_lower_bound = to_double(cells[5], csv_path, line_no);
        f.residual_rms = to_double(cells[6], csv_path, line_no);
        sweep.fits.push_back(f);
        sweep.t_max_used.push_back(to_double(cells[7], csv_path, line_no));
        sweep.errors.push_back(cells[8]);
    }
    return sweep;
}

void write_owp_report(const std::string& json_path, const OWPReport& report) {
    json j;
    j["version"] = format_version;
    j["transition"] = {{"upper", report.transition.upper},
                       {"lower", report.transition.lower},
                       {"frequency_GHz", Hz_to_GHz(report.transition.frequency)},
                       {"dfdB_GHz_per_T", Hz_to_GHz(report.transition.dfdB)}};
    j["found"] = report.found;
    j["B_owp_mT"] = T_to_mT(report.B_owp);
    j["B_dfdb_zero_mT"] = T_to_mT(report.B_dfdb_zero);
    j["gamma_upper"] = report.gamma_upper;
    j["gamma_lower"] = report.gamma_lower;
    open_out(json_path) << j.dump(2) << "\n";
}

OWPReport read_owp_report(const std::string& json_path) {
    auto in = open_in(json_path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(json_path + ": " + e.what());
    }
    OWPReport rep;
    rep.transition.upper = j.at("transition").at("upper").get<int>();
    rep.transition.lower = j.at("transition").at("lower").get<int>();
    rep.transition.frequency = GHz_to_Hz(j.at("transition").at("frequency_GHz").get<double>());
    rep.transition.dfdB = GHz_to_Hz(j.at("transition").at("dfdB_GHz_per_T").get<double>());
    rep.found = j.at("found").get<bool>();
    rep.B_owp = mT_to_T(j.at("B_owp_mT").get<double>());
    rep.B_dfdb_zero = mT_to_T(j.at("B_dfdb_zero_mT").get<double>());
    rep.gamma_upper = j.at("gamma_upper").get<double>();
    rep.gamma_lower = j.at("gamma_lower").get<double>();
    return rep;
}

}  // namespace spinbath
