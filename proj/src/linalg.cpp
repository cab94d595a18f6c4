#include "spinbath/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spinbath {

namespace {

// One Jacobi rotation annihilating H(p,q). Updates H (Hermitian, both
// triangles) and accumulates the rotation into V.
void rotate(MatC& H, MatC& V, int p, int q) {
    const cplx hpq = H(p, q);
    const double apq = std::abs(hpq);
    if (apq == 0.0) return;

    const double tau = std::real(H(q, q) - H(p, p)) / (2.0 * apq);
    // tangent of the rotation angle, smaller root for stability
    double t;
    if (tau >= 0.0)
        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
    else
        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const cplx phase = hpq / apq;
    const cplx s = t * c * phase;  // complex sine carries the phase of H(p,q)

    const int n = static_cast<int>(H.rows());
    for (int k = 0; k < n; ++k) {
        const cplx hkp = H(k, p);
        const cplx hkq = H(k, q);
        H(k, p) = c * hkp - std::conj(s) * hkq;
        H(k, q) = s * hkp + c * hkq;
    }
    for (int k = 0; k < n; ++k) {
        const cplx hpk = H(p, k);
        const cplx hqk = H(q, k);
        H(p, k) = c * hpk - s * hqk;
        H(q, k) = std::conj(s) * hpk + c * hqk;
    }
    // clean the annihilated pair exactly
    H(p, q) = 0.0;
    H(q, p) = 0.0;

    for (int k = 0; k < n; ++k) {
        const cplx vkp = V(k, p);
        const cplx vkq = V(k, q);
        V(k, p) = c * vkp - std::conj(s) * vkq;
        V(k, q) = s * vkp + c * vkq;
    }
}

double offdiag_norm2(const MatC& H) {
    double sum = 0.0;
    const int n = static_cast<int>(H.rows());
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) sum += std::norm(H(p, q));
    return sum;
}

}  // namespace

Eigensystem eigh(const MatC& Hin) {
    if (Hin.rows() != Hin.cols()) throw std::invalid_argument("eigh: matrix not square");
    const int n = static_cast<int>(Hin.rows());
    const double scale = Hin.cwiseAbs().maxCoeff();
    if ((Hin - Hin.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0))
        throw std::invalid_argument("eigh: matrix not Hermitian");

    // symmetrize exactly so rotations see a clean Hermitian matrix
    MatC H = 0.5 * (Hin + Hin.adjoint());
    MatC V = MatC::Identity(n, n);

    const double fro2 = H.squaredNorm();
    const double stop = std::max(fro2, 1e-300) * 1e-30;
    for (int sweep = 0; sweep < 60; ++sweep) {
        if (offdiag_norm2(H) <= stop) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) rotate(H, V, p, q);
    }

    Eigensystem es;
    es.values.resize(n);
    for (int k = 0; k < n; ++k) es.values[k] = std::real(H(k, k));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return es.values[a] < es.values[b]; });

    VecR vals(n);
    MatC vecs(n, n);
    for (int k = 0; k < n; ++k) {
        vals[k] = es.values[order[k]];
        vecs.col(k) = V.col(order[k]);
        // deterministic phase: largest-magnitude component real positive
        int imax = 0;
        double amax = 0.0;
        for (int r = 0; r < n; ++r) {
            const double a = std::abs(vecs(r, k));
            if (a > amax + 1e-14) { amax = a; imax = r; }
        }
        if (amax > 0.0) vecs.col(k) *= std::conj(vecs(imax, k)) / amax;
    }
    es.values = vals;
    es.vectors = vecs;
    return es;
}

double unitarity_defect(const MatC& V) {
    const MatC G = V.adjoint() * V - MatC::Identity(V.cols(), V.cols());
    return G.cwiseAbs().maxCoeff();
}

MatC kron(const MatC& A, const MatC& B) {
    MatC K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

}  // namespace spinbath
