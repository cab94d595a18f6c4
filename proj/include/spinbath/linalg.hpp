#pragma once

// Dense complex Hermitian eigensolver (cyclic Jacobi). Matrices here are
// small (<= ~160), so O(n^3) sweeps are fine and Jacobi's high relative
// accuracy is worth having for the 1e-12-level identities downstream.

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace spinbath {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

struct Eigensystem {
    VecR values;   // ascending
    MatC vectors;  // column k pairs with values[k]
};

// Diagonalize a Hermitian matrix. Throws std::invalid_argument if the input
// is not square or departs from Hermiticity by more than a crude tolerance.
Eigensystem eigh(const MatC& H);

// || V^dagger V - 1 ||_max, for diagnostics/tests
double unitarity_defect(const MatC& V);

// Kronecker product, used for composite spin spaces
MatC kron(const MatC& A, const MatC& B);

}  // namespace spinbath
