#include "spinbath/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace spinbath {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

void LatticeSpec::validate() const {
    if (lattice_constant <= 0) throw std::invalid_argument("lattice: lattice_constant must be positive");
    if (side < 2 * lattice_constant) throw std::invalid_argument("lattice: side must cover at least 2 cells");
    if (occupancy < 0 || occupancy > 1) throw std::invalid_argument("lattice: occupancy must be in [0,1]");
    const double n = std::sqrt(field_direction[0] * field_direction[0] +
                               field_direction[1] * field_direction[1] +
                               field_direction[2] * field_direction[2]);
    if (n < 1e-12) throw std::invalid_argument("lattice: field_direction must be nonzero");
}

std::vector<Vec3> diamond_sites(const LatticeSpec& spec) {
    spec.validate();
    const double a = spec.lattice_constant;
    const int n = static_cast<int>(std::floor(spec.side / a));
    const int lo = -n / 2, hi = lo + n - 1;  // n cells, origin site central (exact for even n)

    // fcc + (1/4,1/4,1/4) basis, 8 atoms per conventional cell
    static const double basis[8][3] = {
        {0.00, 0.00, 0.00}, {0.00, 0.50, 0.50}, {0.50, 0.00, 0.50}, {0.50, 0.50, 0.00},
        {0.25, 0.25, 0.25}, {0.25, 0.75, 0.75}, {0.75, 0.25, 0.75}, {0.75, 0.75, 0.25}};

    std::vector<Vec3> sites;
    sites.reserve(static_cast<std::size_t>(n) * n * n * 8);
    for (int i = lo; i <= hi; ++i)
        for (int j = lo; j <= hi; ++j)
            for (int k = lo; k <= hi; ++k)
                for (const auto& b : basis)
                    sites.push_back({(i + b[0]) * a, (j + b[1]) * a, (k + b[2]) * a});
    return sites;
}

BathConfiguration sample_bath(const LatticeSpec& spec, std::uint64_t seed) {
    BathConfiguration cfg;
    cfg.seed = seed;
    cfg.lattice = spec;

    const double fn = std::sqrt(spec.field_direction[0] * spec.field_direction[0] +
                                spec.field_direction[1] * spec.field_direction[1] +
                                spec.field_direction[2] * spec.field_direction[2]);
    const Vec3 bdir{spec.field_direction[0] / fn, spec.field_direction[1] / fn,
                    spec.field_direction[2] / fn};

    Rng rng(seed);
    for (const Vec3& r : diamond_sites(spec)) {
        const double d = r.norm();
        if (d < 1e-9) continue;  // donor site
        if (!rng.bernoulli(spec.occupancy)) continue;
        BathSite s;
        s.r = r;
        s.theta = std::acos(std::clamp(r.dot(bdir) / d, -1.0, 1.0));
        cfg.sites.push_back(s);
    }
    return cfg;
}

std::array<double, 3> neighbour_shells(double a) {
    return {std::sqrt(3.0) / 4.0 * a, a / std::sqrt(2.0), std::sqrt(11.0) / 4.0 * a};
}

}  // namespace spinbath
