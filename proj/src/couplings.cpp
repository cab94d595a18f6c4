#include "spinbath/couplings.hpp"

#include <cmath>
#include <stdexcept>

namespace spinbath {

EffectiveInteraction effective_interaction(double a_iso, double T_aniso, double theta) {
    const double ct = std::cos(theta), st = std::sin(theta);
    return {(a_iso - T_aniso) + 3.0 * T_aniso * ct * ct, 3.0 * T_aniso * st * ct};
}

Mat3 dipolar_tensor(const DonorSpec& spec, const Vec3& r_angstrom) {
    const double r_m = r_angstrom.norm() * 1e-10;
    if (r_m < 1e-12) throw std::invalid_argument("dipolar_tensor: zero separation");
    const double gn = spec.delta_bath * spec.magnetic_moment;  // bath nuclear moment, J/T
    const double C = mu0_over_4pi * gn * gn / (hbar * r_m * r_m * r_m);

    const double rn = r_angstrom.norm();
    const double u[3] = {r_angstrom.x / rn, r_angstrom.y / rn, r_angstrom.z / rn};
    // fill the upper triangle and mirror: (3*u[i])*u[j] and (3*u[j])*u[i]
    // round differently, and the tensor should be exactly symmetric
    Mat3 D{};
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double v = C * ((i == j ? 1.0 : 0.0) - 3.0 * u[i] * u[j]);
            D[i][j] = v;
            D[j][i] = v;
        }
    return D;
}

PairCoupling secular_pair_coupling(const DonorSpec& spec, const Vec3& r_angstrom,
                                   const Vec3& field_direction) {
    const Mat3 D = dipolar_tensor(spec, r_angstrom);
    const double fn = field_direction.norm();
    if (fn < 1e-12) throw std::invalid_argument("secular_pair_coupling: zero field direction");
    const double n[3] = {field_direction.x / fn, field_direction.y / fn, field_direction.z / fn};
    double dzz = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) dzz += n[i] * D[i][j] * n[j];
    // traceless tensor: transverse-frame (xx+yy) = -zz
    return {dzz, -0.25 * dzz};
}

}  // namespace spinbath
