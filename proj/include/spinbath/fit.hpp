#pragma once

// Small nonlinear least-squares kit: Levenberg-Marquardt (numeric or
// caller-supplied Jacobian), the stretched-exponential decay fit, and
// equal-width Gaussian comb fits used for spectrum peak extraction.

#include <functional>
#include <vector>

#include "spinbath/linalg.hpp"

namespace spinbath {

struct LMOptions {
    int max_iterations = 200;
    double ftol = 1e-14;   // relative decrease of the cost
    double step_rel = 1e-6;  // numeric Jacobian step (relative, floored)
};

struct LMResult {
    VecR params;
    double rms = 0;  // sqrt(2 * cost / n_points)
    int iterations = 0;
    bool converged = false;
};

// residual(p) returns the residual vector; LM minimizes 1/2 |r|^2
LMResult levenberg_marquardt(const std::function<VecR(const VecR&)>& residual,
                             const VecR& initial, const LMOptions& opt = {});

// same, with a caller-supplied Jacobian (n_residuals x n_params); worth it
// when the parameter count is large enough that central differences dominate
LMResult levenberg_marquardt(const std::function<VecR(const VecR&)>& residual,
                             const std::function<MatR(const VecR&)>& jacobian,
                             const VecR& initial, const LMOptions& opt = {});

// Fit L(t) = exp(-t/T2 - (t/T_SD)^n) on log residuals, uniform weights,
// discarding points with L below `floor` (default 0.02). If L never drops
// below 0.9 the curve is flagged diverged and only a lower bound
// t_max / (-ln 0.9)^(1/2) is reported.
struct DecayFit {
    double T2 = 0;        // seconds
    double T_SD = 0;      // seconds
    double n = 0;         // stretch exponent, constrained to [1, 4]
    bool diverged = false;
    double T_SD_lower_bound = 0;  // seconds, only when diverged
    double residual_rms = 0;
    int points_used = 0;
};
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& L,
                   double floor = 0.02);

// sum of unit-area Gaussians A_k N(c_k, sigma) with one shared width
struct GaussianComb {
    std::vector<double> centers;
    std::vector<double> amplitudes;
    double sigma = 0;
    double rms = 0;
};
GaussianComb fit_gaussian_comb(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& centers0, double sigma0);

// local maxima above `threshold`, refined by 3-point parabolic interpolation
std::vector<double> detect_peaks(const std::vector<double>& x, const std::vector<double>& y,
                                 double threshold);

}  // namespace spinbath
