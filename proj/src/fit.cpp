#include "spinbath/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinbath/constants.hpp"

namespace spinbath {

namespace {

// Gaussian elimination with partial pivoting; A is overwritten. Small
// symmetric positive(ish) systems only -- the LM normal equations.
VecR solve_dense(MatR A, VecR b) {
    const int n = static_cast<int>(A.rows());
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
        if (std::abs(A(piv, k)) < 1e-300) throw std::runtime_error("singular normal equations");
        if (piv != k) {
            A.row(piv).swap(A.row(k));
            std::swap(b(piv), b(k));
        }
        for (int i = k + 1; i < n; ++i) {
            const double f = A(i, k) / A(k, k);
            A.row(i).tail(n - k) -= f * A.row(k).tail(n - k);
            b(i) -= f * b(k);
        }
    }
    VecR x = VecR::Zero(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b(i);
        for (int j = i + 1; j < n; ++j) s -= A(i, j) * x(j);
        x(i) = s / A(i, i);
    }
    return x;
}

MatR numeric_jacobian(const std::function<VecR(const VecR&)>& residual, const VecR& p,
                      double step_rel) {
    const int n = static_cast<int>(p.size());
    MatR J;
    for (int j = 0; j < n; ++j) {
        const double h = step_rel * std::max(std::abs(p(j)), 1.0);
        VecR pp = p, pm = p;
        pp(j) += h;
        pm(j) -= h;
        const VecR col = (residual(pp) - residual(pm)) / (2 * h);
        if (j == 0) J.resize(col.size(), n);
        J.col(j) = col;
    }
    return J;
}

}  // namespace

LMResult levenberg_marquardt(const std::function<VecR(const VecR&)>& residual,
                             const VecR& initial, const LMOptions& opt) {
    return levenberg_marquardt(
        residual, [&](const VecR& p) { return numeric_jacobian(residual, p, opt.step_rel); },
        initial, opt);
}

LMResult levenberg_marquardt(const std::function<VecR(const VecR&)>& residual,
                             const std::function<MatR(const VecR&)>& jacobian,
                             const VecR& initial, const LMOptions& opt) {
    LMResult out;
    VecR p = initial;
    VecR r = residual(p);
    double cost = 0.5 * r.squaredNorm();
    double lambda = 1e-3;

    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        const MatR J = jacobian(p);
        const MatR JtJ = J.transpose() * J;
        const VecR g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-300) {
            converged = true;
            break;
        }

        bool accepted = false;
        while (lambda < 1e14) {
            MatR A = JtJ;
            for (int k = 0; k < A.rows(); ++k)
                A(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
            VecR delta;
            try {
                delta = solve_dense(A, VecR(-g));
            } catch (const std::runtime_error&) {
                lambda *= 10;
                continue;
            }
            const VecR p_try = p + delta;
            const VecR r_try = residual(p_try);
            const double cost_try = 0.5 * r_try.squaredNorm();
            if (std::isfinite(cost_try) && cost_try < cost) {
                const double drop = cost - cost_try;
                p = p_try;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (drop <= opt.ftol * std::max(cost, 1e-300) || delta.norm() < 1e-14)
                    converged = true;
                break;
            }
            lambda *= 10;
        }
        if (!accepted || converged) {
            converged = converged || !accepted;  // stuck on a flat: call it done
            break;
        }
    }

    out.params = p;
    out.iterations = it;
    out.converged = converged;
    out.rms = r.size() ? std::sqrt(2 * cost / static_cast<double>(r.size())) : 0;
    return out;
}

namespace {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double clamp_exp(double x) { return std::exp(std::clamp(x, -700.0, 700.0)); }

// p = (q, v, u): 1/T2 = exp(q), T_SD = exp(v), n = 1 + 3 sigmoid(u)
double log_decay_model(double t, const VecR& p) {
    const double rate = clamp_exp(p(0));
    const double tsd = clamp_exp(p(1));
    const double n = 1.0 + 3.0 * sigmoid(p(2));
    return -t * rate - std::pow(t / tsd, n);
}

}  // namespace

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& L, double floor) {
    if (t.size() != L.size()) throw std::invalid_argument("fit_decay: t/L size mismatch");
    DecayFit out;

    std::vector<double> ts, logs;
    double t_max = 0, L_min = 2;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0) || !std::isfinite(L[i])) continue;
        t_max = std::max(t_max, t[i]);
        L_min = std::min(L_min, L[i]);
        if (L[i] >= floor && L[i] <= 1.5) {
            ts.push_back(t[i]);
            logs.push_back(std::log(L[i]));
        }
    }
    if (ts.size() < 4) throw std::invalid_argument("fit_decay: too few usable points");

    if (L_min > 0.9) {
        // echo never decayed inside the window: quote a bound assuming the
        // generic quadratic onset exp(-(t/T)^2)
        out.diverged = true;
        out.T_SD_lower_bound = t_max / std::sqrt(-std::log(0.9));
        out.points_used = static_cast<int>(ts.size());
        return out;
    }

    // crude initial scale: time of the 1/e crossing, else extrapolate from L_min
    double t_e = t_max;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (logs[i] <= -1.0) {
            t_e = ts[i];
            break;
        }
    }
    if (L_min >= std::exp(-1.0)) t_e = t_max * std::pow(-std::log(L_min), -0.5);

    VecR p0(3);
    p0(0) = std::log(0.01 / t_max);  // nearly no exponential component
    p0(1) = std::log(t_e);
    p0(2) = 0.0;  // n = 2.5 midpoint; basin is broad

    const auto residual = [&](const VecR& p) {
        VecR r(static_cast<int>(ts.size()));
        for (std::size_t i = 0; i < ts.size(); ++i)
            r(static_cast<int>(i)) = log_decay_model(ts[i], p) - logs[i];
        return r;
    };

    // multi-start over the stretch exponent and over the exponential weight:
    // when T2 is comparable to T_SD the no-exponential start falls into a
    // shallow valley (pure stretch with a biased n), so offer starts that
    // carry a real T2 component as well
    LMResult best;
    best.rms = 1e300;
    for (const double rate0 : {0.01 / t_max, 1.0 / t_max, 1.0 / t_e}) {
        for (const double u0 : {-1.5, 0.0, 1.5}) {
            VecR p = p0;
            p(0) = std::log(rate0);
            p(2) = u0;
            const LMResult res = levenberg_marquardt(residual, p);
            if (res.rms < best.rms) best = res;
        }
    }

    out.T2 = std::min(1e9, 1.0 / clamp_exp(best.params(0)));
    out.T_SD = clamp_exp(best.params(1));
    out.n = 1.0 + 3.0 * sigmoid(best.params(2));
    out.residual_rms = best.rms;
    out.points_used = static_cast<int>(ts.size());
    return out;
}

GaussianComb fit_gaussian_comb(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& centers0, double sigma0) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_gaussian_comb: x/y size mismatch");
    if (centers0.empty()) throw std::invalid_argument("fit_gaussian_comb: no initial centers");
    if (!(sigma0 > 0)) throw std::invalid_argument("fit_gaussian_comb: sigma0 must be positive");
    const int K = static_cast<int>(centers0.size());
    const int N = static_cast<int>(x.size());

    // p = (c_1..c_K, ln A_1..ln A_K, ln sigma)
    VecR p0(2 * K + 1);
    const double norm0 = 1.0 / (sigma0 * std::sqrt(2 * pi));
    for (int k = 0; k < K; ++k) {
        p0(k) = centers0[static_cast<std::size_t>(k)];
        // nearest sample sets the starting height
        double yk = 0;
        double dbest = 1e300;
        for (int i = 0; i < N; ++i) {
            const double d = std::abs(x[static_cast<std::size_t>(i)] - p0(k));
            if (d < dbest) {
                dbest = d;
                yk = y[static_cast<std::size_t>(i)];
            }
        }
        p0(K + k) = std::log(std::max(yk / norm0, 1e-12));
    }
    p0(2 * K) = std::log(sigma0);

    const auto model = [&](const VecR& p) {
        VecR r(N);
        const double sigma = clamp_exp(p(2 * K));
        const double norm = 1.0 / (sigma * std::sqrt(2 * pi));
        std::vector<double> amp(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) amp[static_cast<std::size_t>(k)] = clamp_exp(p(K + k)) * norm;
        for (int i = 0; i < N; ++i) {
            double v = 0;
            for (int k = 0; k < K; ++k) {
                const double z = (x[static_cast<std::size_t>(i)] - p(k)) / sigma;
                v += amp[static_cast<std::size_t>(k)] * std::exp(-0.5 * z * z);
            }
            r(i) = v - y[static_cast<std::size_t>(i)];
        }
        return r;
    };

    // closed-form partials: with g_ik the k-th Gaussian at x_i,
    //   d/dc_k = g z / sigma,  d/d(lnA_k) = g,  d/d(ln sigma) = sum_k g (z^2 - 1)
    const auto jacobian = [&](const VecR& p) {
        MatR J(N, 2 * K + 1);
        const double sigma = clamp_exp(p(2 * K));
        const double norm = 1.0 / (sigma * std::sqrt(2 * pi));
        std::vector<double> amp(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) amp[static_cast<std::size_t>(k)] = clamp_exp(p(K + k)) * norm;
        for (int i = 0; i < N; ++i) {
            double dsig = 0;
            for (int k = 0; k < K; ++k) {
                const double z = (x[static_cast<std::size_t>(i)] - p(k)) / sigma;
                const double g = amp[static_cast<std::size_t>(k)] * std::exp(-0.5 * z * z);
                J(i, k) = g * z / sigma;
                J(i, K + k) = g;
                dsig += g * (z * z - 1.0);
            }
            J(i, 2 * K) = dsig;
        }
        return J;
    };

    const LMResult res = levenberg_marquardt(model, jacobian, p0);
    GaussianComb out;
    out.sigma = clamp_exp(res.params(2 * K));
    out.rms = res.rms;
    out.centers.resize(static_cast<std::size_t>(K));
    out.amplitudes.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        out.centers[static_cast<std::size_t>(k)] = res.params(k);
        out.amplitudes[static_cast<std::size_t>(k)] = clamp_exp(res.params(K + k));
    }
    return out;
}

std::vector<double> detect_peaks(const std::vector<double>& x, const std::vector<double>& y,
                                 double threshold) {
    if (x.size() != y.size()) throw std::invalid_argument("detect_peaks: x/y size mismatch");
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] <= threshold) continue;
        if (!(y[i] >= y[i - 1] && y[i] > y[i + 1])) continue;
        const double denom = y[i - 1] - 2 * y[i] + y[i + 1];
        double shift = 0;
        if (denom < 0) shift = 0.5 * (y[i - 1] - y[i + 1]) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        const double h = 0.5 * (x[i + 1] - x[i - 1]);
        peaks.push_back(x[i] + shift * h);
    }
    return peaks;
}

}  // namespace spinbath
