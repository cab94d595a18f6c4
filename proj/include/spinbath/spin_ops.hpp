#pragma once

// Angular-momentum operator matrices for arbitrary spin J, in the
// |J,J>, |J,J-1>, ..., |J,-J> basis (Jz descending along the diagonal).

#include "spinbath/linalg.hpp"

namespace spinbath {

struct SpinOperators {
    double j = 0;
    MatC jx, jy, jz, jplus, jminus;
    MatC identity;
};

// J must be a non-negative multiple of 1/2
SpinOperators spin_operators(double j);

}  // namespace spinbath
