#include "spinbath/endor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "spinbath/fit.hpp"

namespace spinbath {

double endor_frequency_iso(const DonorSpec& spec, double s_z, double omega0, double a_iso) {
    return std::abs(-omega0 * spec.delta_bath + s_z * a_iso) / two_pi;
}

double endor_frequency_aniso(const DonorSpec& spec, double s_z, double omega0, double alpha,
                             double beta) {
    return std::hypot(-omega0 * spec.delta_bath + s_z * alpha, s_z * beta) / two_pi;
}

std::vector<ENDORLine> endor_lines(const DonorSpec& spec, const CouplingTable& table,
                                   const TransitionSpec& transition, double B, double theta) {
    const DonorEigensystem sys = donor_eigensystem(spec, B);
    const double omega0 = spec.omega0(B);
    std::vector<ENDORLine> lines;
    lines.reserve(2 * table.entries.size());
    for (const auto& entry : table.entries) {
        const EffectiveInteraction eff =
            effective_interaction(two_pi * entry.a_iso, two_pi * entry.T, theta);
        for (const int label : {transition.upper, transition.lower}) {
            ENDORLine line;
            line.level = label;
            line.coupling_label = entry.label;
            const double s = sys.level(label).s_z();
            line.frequency = entry.is_anisotropic
                                 ? endor_frequency_aniso(spec, s, omega0, eff.alpha, eff.beta)
                                 : endor_frequency_iso(spec, s, omega0, two_pi * entry.a_iso);
            lines.push_back(line);
        }
    }
    return lines;
}

double comb_width(const std::vector<ENDORLine>& lines) {
    if (lines.empty()) return 0;
    auto [lo, hi] = std::minmax_element(lines.begin(), lines.end(),
                                        [](const ENDORLine& a, const ENDORLine& b) {
                                            return a.frequency < b.frequency;
                                        });
    return hi->frequency - lo->frequency;
}

double comb_center(const std::vector<ENDORLine>& lines) {
    if (lines.empty()) return 0;
    auto [lo, hi] = std::minmax_element(lines.begin(), lines.end(),
                                        [](const ENDORLine& a, const ENDORLine& b) {
                                            return a.frequency < b.frequency;
                                        });
    return 0.5 * (lo->frequency + hi->frequency);
}

Spectrum synthesize_spectrum(const DonorSpec& spec, const CouplingTable& table,
                             const TransitionSpec& transition, double B, double sigma,
                             double theta, int n_points) {
    if (!(sigma > 0)) throw std::invalid_argument("synthesize_spectrum: sigma must be positive");
    if (n_points < 2) throw std::invalid_argument("synthesize_spectrum: need at least 2 points");

    const std::vector<ENDORLine> lines = endor_lines(spec, table, transition, B, theta);
    double lo, hi;
    if (lines.empty()) {
        const double f0 = spec.omega0(B) * spec.delta_bath / two_pi;
        lo = std::max(0.0, f0 - 1e6);
        hi = f0 + 1e6;
    } else {
        lo = hi = lines.front().frequency;
        for (const auto& line : lines) {
            lo = std::min(lo, line.frequency);
            hi = std::max(hi, line.frequency);
        }
        lo = std::max(0.0, lo - 6 * sigma);
        hi += 6 * sigma;
    }

    Spectrum out;
    out.linewidth_sigma = sigma;
    out.freq.resize(static_cast<std::size_t>(n_points));
    out.amplitude.assign(static_cast<std::size_t>(n_points), 0.0);
    const double norm = 1.0 / (sigma * std::sqrt(2 * pi));
    for (int i = 0; i < n_points; ++i) {
        const double f = lo + (hi - lo) * i / (n_points - 1);
        out.freq[static_cast<std::size_t>(i)] = f;
        double v = 0;
        for (const auto& line : lines) {
            const double z = (f - line.frequency) / sigma;
            if (std::abs(z) < 12) v += line.intensity * norm * std::exp(-0.5 * z * z);
        }
        out.amplitude[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

namespace {

struct SpectrumContext {
    double B = 0;
    double theta = 0;
    double omega0 = 0;
    double s_upper = 0;
    double s_lower = 0;
    std::vector<double> peak_freq;  // fitted centers, Hz
    double sigma_fit = 0;           // fitted linewidth, Hz
};

struct Candidate {
    double a = 0;  // Hz
    int spectrum = 0;
};

struct ClusterOut {
    double a = 0;
    std::set<int> spectra;
};

std::vector<ClusterOut> cluster_candidates(std::vector<Candidate> cands,
                                           const ExtractionOptions& opt) {
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& x, const Candidate& y) { return x.a < y.a; });
    std::vector<ClusterOut> clusters;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= cands.size(); ++i) {
        const bool split =
            i == cands.size() ||
            cands[i].a - cands[i - 1].a >
                std::max(opt.match_abs_tol, opt.match_rel_tol * std::abs(cands[i].a));
        if (!split) continue;
        ClusterOut c;
        c.a = cands[start + (i - start) / 2].a;  // median of the sorted run
        for (std::size_t k = start; k < i; ++k) c.spectra.insert(cands[k].spectrum);
        clusters.push_back(std::move(c));
        start = i;
    }
    return clusters;
}

double iso_line(const DonorSpec& spec, const SpectrumContext& ctx, double s, double a_Hz) {
    return endor_frequency_iso(spec, s, ctx.omega0, two_pi * a_Hz);
}

double aniso_line(const DonorSpec& spec, const SpectrumContext& ctx, double s, double a_Hz,
                  double T_Hz) {
    const EffectiveInteraction eff =
        effective_interaction(two_pi * a_Hz, two_pi * T_Hz, ctx.theta);
    return endor_frequency_aniso(spec, s, ctx.omega0, eff.alpha, eff.beta);
}

// nearest unexplained peak; returns index or -1
int nearest_peak(const SpectrumContext& ctx, const std::vector<bool>& explained, int offset,
                 double f, double window) {
    int best = -1;
    double dbest = window;
    for (std::size_t p = 0; p < ctx.peak_freq.size(); ++p) {
        if (explained[static_cast<std::size_t>(offset) + p]) continue;
        const double d = std::abs(ctx.peak_freq[p] - f);
        if (d < dbest) {
            dbest = d;
            best = static_cast<int>(p);
        }
    }
    return best;
}

}  // namespace

CouplingTable extract_couplings(const DonorSpec& spec, const std::vector<MeasuredSpectrum>& data,
                                const TransitionSpec& transition, const ExtractionOptions& opt) {
    if (data.empty()) throw std::invalid_argument("extract_couplings: no spectra");

    // peak-fit every spectrum: detect, then refine as an equal-width comb
    std::vector<SpectrumContext> ctxs;
    std::vector<int> peak_offset;  // into the flat explained[] array
    int n_peaks_total = 0;
    for (const auto& meas : data) {
        const Spectrum& sp = meas.spectrum;
        if (sp.freq.size() != sp.amplitude.size() || sp.freq.size() < 8)
            throw std::invalid_argument("extract_couplings: malformed spectrum");
        SpectrumContext ctx;
        ctx.B = meas.B;
        ctx.theta = meas.theta;
        ctx.omega0 = spec.omega0(meas.B);
        const DonorEigensystem sys = donor_eigensystem(spec, meas.B);
        ctx.s_upper = sys.level(transition.upper).s_z();
        ctx.s_lower = sys.level(transition.lower).s_z();

        const double amax = *std::max_element(sp.amplitude.begin(), sp.amplitude.end());
        const double threshold = opt.peak_threshold_rel * amax;
        std::vector<double> centers = detect_peaks(sp.freq, sp.amplitude, threshold);
        double sigma0 = sp.linewidth_sigma;
        if (!(sigma0 > 0)) sigma0 = 4 * (sp.freq.back() - sp.freq.front()) / sp.freq.size();

        const auto idx_near = [&](double c) {
            const auto it = std::lower_bound(sp.freq.begin(), sp.freq.end(), c);
            std::size_t i = static_cast<std::size_t>(it - sp.freq.begin());
            if (i == sp.freq.size()) --i;
            if (i > 0 && c - sp.freq[i - 1] < sp.freq[i] - c) --i;
            return i;
        };

        // prominence filter: amplitude noise sprinkles local maxima over the
        // blended shoulders between lines. A real line rises above its
        // saddles by a finite fraction of the spectrum, a noise bump only by
        // the noise, so gate on height above the higher saddle.
        {
            std::vector<double> strong;
            for (const double c : centers) {
                const std::size_t i0 = idx_near(c);
                const double h = sp.amplitude[i0];
                double lo_l = h, lo_r = h;
                for (std::size_t i = i0; i-- > 0;) {
                    lo_l = std::min(lo_l, sp.amplitude[i]);
                    if (sp.amplitude[i] > h) break;
                }
                for (std::size_t i = i0 + 1; i < sp.amplitude.size(); ++i) {
                    lo_r = std::min(lo_r, sp.amplitude[i]);
                    if (sp.amplitude[i] > h) break;
                }
                if (h - std::max(lo_l, lo_r) >= threshold) strong.push_back(c);
            }
            centers = std::move(strong);
        }

        if (centers.size() > 1) {
            // plateau maxima on one peak's flat top survive the prominence
            // gate only when they tie the apex; nothing closer than a
            // linewidth is resolvable, so keep the tallest detection within
            // sigma (else the comb fit drowns in duplicate Gaussians)
            std::sort(centers.begin(), centers.end(), [&](double u, double v) {
                return sp.amplitude[idx_near(u)] > sp.amplitude[idx_near(v)];
            });
            std::vector<double> kept;
            for (const double c : centers) {
                bool clash = false;
                for (const double k2 : kept) clash = clash || std::abs(c - k2) < sigma0;
                if (!clash) kept.push_back(c);
            }
            centers = std::move(kept);
        }
        if (!centers.empty()) {
            const GaussianComb comb = fit_gaussian_comb(sp.freq, sp.amplitude, centers, sigma0);
            ctx.peak_freq = comb.centers;
            ctx.sigma_fit = comb.sigma;
            std::sort(ctx.peak_freq.begin(), ctx.peak_freq.end());
        }
        peak_offset.push_back(n_peaks_total);
        n_peaks_total += static_cast<int>(ctx.peak_freq.size());
        ctxs.push_back(std::move(ctx));
    }
    if (n_peaks_total == 0) throw std::invalid_argument("extract_couplings: no resolvable peaks");

    // invert the line equation per (peak, donor level, branch sign)
    std::vector<Candidate> candidates;
    for (std::size_t k = 0; k < ctxs.size(); ++k) {
        const SpectrumContext& ctx = ctxs[k];
        const double zeeman = ctx.omega0 * spec.delta_bath;
        for (const double f : ctx.peak_freq) {
            for (const double s : {ctx.s_upper, ctx.s_lower}) {
                if (std::abs(s) < 1e-6) continue;
                for (const int sgn : {+1, -1}) {
                    const double a = (zeeman + sgn * two_pi * f) / s / two_pi;
                    if (a > -opt.match_abs_tol)
                        candidates.push_back({std::max(a, 0.0), static_cast<int>(k)});
                }
            }
        }
    }

    const auto clusters = cluster_candidates(candidates, opt);
    std::vector<bool> explained(static_cast<std::size_t>(n_peaks_total), false);
    CouplingTable table;

    if (data.size() == 1) {
        // one spectrum cannot disambiguate branch choices; report everything
        for (const auto& c : clusters) {
            CouplingEntry e;
            e.a_iso = c.a;
            e.low_confidence = true;
            table.entries.push_back(e);
        }
    } else {
        const int needed = std::max(
            2, static_cast<int>(std::ceil(opt.min_field_fraction * static_cast<double>(ctxs.size()))));

        // resolution scale of the peak centers: a real coupling reproduces
        // its peaks to a small fraction of the linewidth, a ghost chain of
        // wrong-branch inversions lands between lines and misses by O(sigma)
        double sigma_ref = 0;
        int n_sigma = 0;
        for (const auto& ctx : ctxs)
            if (ctx.sigma_fit > 0) {
                sigma_ref += ctx.sigma_fit;
                ++n_sigma;
            }
        sigma_ref /= std::max(n_sigma, 1);

        // well-supported clusters claim their peaks first: sorted candidate
        // runs also produce accidental chains of wrong-branch inversions,
        // and those must not steal peaks from real couplings
        std::vector<ClusterOut> ordered;
        for (const auto& c : clusters)
            if (static_cast<int>(c.spectra.size()) >= needed) ordered.push_back(c);
        std::sort(ordered.begin(), ordered.end(), [](const ClusterOut& x, const ClusterOut& y) {
            if (x.spectra.size() != y.spectra.size()) return x.spectra.size() > y.spectra.size();
            return x.a < y.a;
        });

        for (const auto& c : ordered) {
            // joint refine over the peaks this cluster explains (assignment
            // frozen at the cluster value)
            std::vector<std::pair<int, int>> matched;  // (spectrum, peak)
            std::vector<double> levels;                // s per matched peak
            for (std::size_t k = 0; k < ctxs.size(); ++k) {
                for (const double s : {ctxs[k].s_upper, ctxs[k].s_lower}) {
                    const double f = iso_line(spec, ctxs[k], s, c.a);
                    const int p = nearest_peak(ctxs[k], explained, peak_offset[k], f,
                                               std::max(opt.match_abs_tol, opt.match_rel_tol * f));
                    if (p >= 0) {
                        matched.push_back({static_cast<int>(k), p});
                        levels.push_back(s);
                    }
                }
            }
            if (matched.size() < 2) continue;
            std::set<int> support;
            for (const auto& [k, pk] : matched) support.insert(k);
            if (static_cast<int>(support.size()) < needed) continue;

            const auto residual = [&](const VecR& p) {
                VecR r(static_cast<int>(matched.size()));
                for (std::size_t i = 0; i < matched.size(); ++i) {
                    const auto& [k, pk] = matched[i];
                    r(static_cast<int>(i)) =
                        iso_line(spec, ctxs[static_cast<std::size_t>(k)], levels[i], p(0)) -
                        ctxs[static_cast<std::size_t>(k)].peak_freq[static_cast<std::size_t>(pk)];
                }
                return r;
            };
            const auto abs_residuals = [&](const VecR& p) {
                const VecR r = residual(p);
                std::vector<double> absr(static_cast<std::size_t>(r.size()));
                for (int i = 0; i < r.size(); ++i)
                    absr[static_cast<std::size_t>(i)] = std::abs(r(i));
                return absr;
            };
            const auto median_of = [](std::vector<double> v) {
                std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
                return v[v.size() / 2];
            };

            VecR p0(1);
            p0(0) = c.a;
            LMResult res = levenberg_marquardt(residual, p0);
            const std::vector<std::pair<int, int>> matched_all = matched;

            // an under-resolved field biases its fitted centers by a sizable
            // fraction of sigma; trim against the median residual and refit
            // on the clean peaks (support was judged on the full match)
            {
                const std::vector<double> absr = abs_residuals(res.params);
                const double cut = std::max(4 * median_of(absr), 0.02 * sigma_ref);
                std::vector<std::pair<int, int>> m2;
                std::vector<double> l2;
                for (std::size_t i = 0; i < matched.size(); ++i)
                    if (absr[i] <= cut) {
                        m2.push_back(matched[i]);
                        l2.push_back(levels[i]);
                    }
                if (m2.size() >= 2 && m2.size() < matched.size()) {
                    matched = std::move(m2);
                    levels = std::move(l2);
                    res = levenberg_marquardt(residual, res.params);
                }
            }

            // ghost chains of wrong-branch inversions miss by O(sigma) even
            // after trimming; dropped clusters leave their peaks unclaimed
            if (median_of(abs_residuals(res.params)) > 0.25 * sigma_ref) continue;

            CouplingEntry e;
            e.a_iso = std::max(res.params(0), 0.0);
            table.entries.push_back(e);
            for (const auto& [k, pk] : matched_all)
                explained[static_cast<std::size_t>(peak_offset[static_cast<std::size_t>(k)]) +
                          static_cast<std::size_t>(pk)] = true;

            // also claim any peak consistent with this coupling's lines:
            // blended peaks the nearest-match pass skipped would otherwise
            // feed wrong-level shadow clusters downstream
            for (std::size_t k = 0; k < ctxs.size(); ++k) {
                for (const double s : {ctxs[k].s_upper, ctxs[k].s_lower}) {
                    const double f = iso_line(spec, ctxs[k], s, e.a_iso);
                    for (std::size_t p = 0; p < ctxs[k].peak_freq.size(); ++p)
                        if (std::abs(ctxs[k].peak_freq[p] - f) < 0.5 * sigma_ref)
                            explained[static_cast<std::size_t>(peak_offset[k]) + p] = true;
                }
            }
        }
    }

    // anisotropic stage: orientation-dependent couplings leave unexplained
    // peaks that cluster per orientation but not globally
    std::set<double> thetas;
    for (const auto& ctx : ctxs) thetas.insert(ctx.theta);
    if (opt.allow_anisotropic && thetas.size() >= 2 && data.size() > 1) {
        // per-orientation iso clustering over the unexplained peaks
        std::map<double, std::vector<Candidate>> by_theta;
        for (std::size_t k = 0; k < ctxs.size(); ++k) {
            const SpectrumContext& ctx = ctxs[k];
            const double zeeman = ctx.omega0 * spec.delta_bath;
            for (std::size_t p = 0; p < ctx.peak_freq.size(); ++p) {
                if (explained[static_cast<std::size_t>(peak_offset[k]) + p]) continue;
                for (const double s : {ctx.s_upper, ctx.s_lower}) {
                    if (std::abs(s) < 1e-6) continue;
                    for (const int sgn : {+1, -1}) {
                        const double a = (zeeman + sgn * two_pi * ctx.peak_freq[p]) / s / two_pi;
                        if (a > -opt.match_abs_tol)
                            by_theta[ctx.theta].push_back(
                                {std::max(a, 0.0), static_cast<int>(k)});
                    }
                }
            }
        }

        // effective alpha at the orientation extremes pins down (a, T):
        // alpha = (a - T) + 3 T cos^2(theta)
        const double th_lo = *thetas.begin();   // smallest angle: cos^2 largest
        const double th_hi = *thetas.rbegin();
        const double c2_lo = std::pow(std::cos(th_lo), 2);
        const double c2_hi = std::pow(std::cos(th_hi), 2);
        if (std::abs(c2_lo - c2_hi) > 0.2) {
            auto conf = [&](double th) {
                std::vector<ClusterOut> out;
                if (!by_theta.count(th)) return out;
                int n_spec = 0;
                for (const auto& ctx : ctxs)
                    if (ctx.theta == th) ++n_spec;
                const int needed =
                    std::max(2, static_cast<int>(std::ceil(opt.min_field_fraction * n_spec)));
                for (const auto& c : cluster_candidates(by_theta[th], opt))
                    if (static_cast<int>(c.spectra.size()) >= needed) out.push_back(c);
                return out;
            };
            const auto lo_clusters = conf(th_lo);
            const auto hi_clusters = conf(th_hi);

            for (const auto& cl : lo_clusters) {
                for (const auto& ch : hi_clusters) {
                    // alpha_lo = a + T(3 c2_lo - 1), alpha_hi likewise
                    const double det = (3 * c2_lo - 1) - (3 * c2_hi - 1);
                    const double T0 = (cl.a - ch.a) / det;
                    const double a0 = cl.a - T0 * (3 * c2_lo - 1);
                    if (!(a0 > 0) || std::abs(T0) < opt.match_abs_tol) continue;

                    // refine over all unexplained peaks with re-assignment rounds
                    VecR p(2);
                    p(0) = a0;
                    p(1) = T0;
                    std::vector<std::pair<int, int>> matched;
                    std::vector<double> levels;
                    for (int round = 0; round < 3; ++round) {
                        matched.clear();
                        levels.clear();
                        for (std::size_t k = 0; k < ctxs.size(); ++k) {
                            for (const double s : {ctxs[k].s_upper, ctxs[k].s_lower}) {
                                const double f = aniso_line(spec, ctxs[k], s, p(0), p(1));
                                const int pk = nearest_peak(
                                    ctxs[k], explained, peak_offset[k], f,
                                    std::max(opt.match_abs_tol, opt.match_rel_tol * f));
                                if (pk >= 0) {
                                    matched.push_back({static_cast<int>(k), pk});
                                    levels.push_back(s);
                                }
                            }
                        }
                        if (matched.size() < 4) break;
                        const auto residual = [&](const VecR& q) {
                            VecR r(static_cast<int>(matched.size()));
                            for (std::size_t i = 0; i < matched.size(); ++i) {
                                const auto& [k, pk] = matched[i];
                                r(static_cast<int>(i)) =
                                    aniso_line(spec, ctxs[static_cast<std::size_t>(k)], levels[i],
                                               q(0), q(1)) -
                                    ctxs[static_cast<std::size_t>(k)]
                                        .peak_freq[static_cast<std::size_t>(pk)];
                            }
                            return r;
                        };
                        p = levenberg_marquardt(residual, p).params;
                    }
                    if (matched.size() < 4) continue;
                    const double coverage =
                        static_cast<double>(matched.size()) / (2.0 * ctxs.size());
                    if (coverage < 0.6) continue;

                    CouplingEntry e;
                    e.a_iso = std::abs(p(0));
                    e.T = std::abs(p(1));
                    e.is_anisotropic = true;
                    e.low_confidence = coverage < opt.min_field_fraction;
                    table.entries.push_back(e);
                    for (const auto& [k, pk] : matched)
                        explained[static_cast<std::size_t>(
                                      peak_offset[static_cast<std::size_t>(k)]) +
                                  static_cast<std::size_t>(pk)] = true;
                }
            }
        }
    }

    std::sort(table.entries.begin(), table.entries.end(),
              [](const CouplingEntry& x, const CouplingEntry& y) { return x.a_iso < y.a_iso; });
    for (std::size_t i = 0; i < table.entries.size(); ++i)
        table.entries[i].label = "x" + std::to_string(i + 1);
    return table;
}

}  // namespace spinbath
