#include "spinbath/hyperfine.hpp"

#include <cmath>
#include <stdexcept>

namespace spinbath {

namespace {

// envelope for a valley pair along axis `axis`: the longitudinal direction
// (heavier mass) decays with the short radius b, the transverse plane with a
double envelope(const Vec3& r, int axis, double a, double b) {
    const double c[3] = {r.x, r.y, r.z};
    const double par2 = c[axis] * c[axis];
    const double perp2 = c[(axis + 1) % 3] * c[(axis + 1) % 3] + c[(axis + 2) % 3] * c[(axis + 2) % 3];
    return std::exp(-std::sqrt(par2 / (b * b) + perp2 / (a * a)));
}

}  // namespace

double HyperfineModel::psi_squared(const Vec3& r) const {
    const double c[3] = {r.x, r.y, r.z};
    double sum = 0.0;
    for (int axis = 0; axis < 3; ++axis)
        sum += envelope(r, axis, radius_a, radius_b) * std::cos(k0 * c[axis]);
    // (2/ sqrt 6)^2 /.. : opposite valleys pair up; normalize so the bound is 1 at r=0
    const double amp = sum / 3.0;
    return amp * amp;
}

double HyperfineModel::psi_squared_envelope(const Vec3& r) const {
    double sum = 0.0;
    for (int axis = 0; axis < 3; ++axis) sum += envelope(r, axis, radius_a, radius_b);
    const double amp = sum / 3.0;
    return amp * amp;
}

double HyperfineModel::a_iso(const Vec3& r) const {
    if (r.norm() < 1e-9) throw std::invalid_argument("hyperfine: coupling requested at the donor site");
    return calibration * psi_squared(r);
}

double HyperfineModel::a_iso_envelope(const Vec3& r) const {
    if (r.norm() < 1e-9) throw std::invalid_argument("hyperfine: coupling requested at the donor site");
    return calibration * psi_squared_envelope(r);
}

HyperfineModel make_hyperfine_model(double lattice_constant, double max_coupling,
                                    double ionization_eV) {
    if (max_coupling <= 0) throw std::invalid_argument("hyperfine: max_coupling must be positive");
    HyperfineModel m;
    const double shallow_eV = 0.03127;  // effective-mass donor binding energy in this host
    const double scale = std::sqrt(shallow_eV / ionization_eV);
    m.radius_a = 25.09 * scale;
    m.radius_b = 14.43 * scale;
    m.k0 = 0.85 * two_pi / lattice_constant;
    m.calibration = 1.0;

    // calibrate against the strongest site within a fixed scan radius, so the
    // model does not depend on any particular simulation box
    LatticeSpec probe;
    probe.lattice_constant = lattice_constant;
    probe.side = 50.0;
    double peak = 0.0;
    for (const Vec3& s : diamond_sites(probe)) {
        if (s.norm() < 1e-9 || s.norm() > 25.0) continue;
        peak = std::max(peak, m.psi_squared(s));
    }
    if (peak <= 0) throw std::runtime_error("hyperfine: calibration scan found no sites");
    m.calibration = max_coupling / peak;
    return m;
}

void assign_contact_couplings(BathConfiguration& bath, const HyperfineModel& model) {
    for (BathSite& s : bath.sites) {
        s.a_iso = model.a_iso(s.r);
        s.T_aniso = 0.0;
    }
}

}  // namespace spinbath
