#include "spinbath/spin_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace spinbath {

SpinOperators spin_operators(double j) {
    const double twoj = 2.0 * j;
    if (j < 0.0 || std::abs(twoj - std::round(twoj)) > 1e-9)
        throw std::invalid_argument("spin_operators: J must be a multiple of 1/2");

    const int d = static_cast<int>(std::round(twoj)) + 1;
    SpinOperators op;
    op.j = j;
    op.jz = MatC::Zero(d, d);
    op.jplus = MatC::Zero(d, d);
    op.jminus = MatC::Zero(d, d);
    op.identity = MatC::Identity(d, d);

    for (int k = 0; k < d; ++k) op.jz(k, k) = j - k;
    // <m+1| J+ |m> = sqrt(J(J+1) - m(m+1)); row k-1 is m+1 when row k is m
    for (int k = 1; k < d; ++k) {
        const double m = j - k;
        op.jplus(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    op.jminus = op.jplus.adjoint();
    op.jx = 0.5 * (op.jplus + op.jminus);
    op.jy = cplx(0.0, -0.5) * (op.jplus - op.jminus);
    return op;
}

}  // namespace spinbath
