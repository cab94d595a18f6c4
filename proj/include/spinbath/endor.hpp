#pragma once

// Nuclear resonance frequencies of bath spins conditioned on the donor level,
// spectrum synthesis from coupling tables, and coupling extraction from
// measured spectra by equal-width Gaussian peak fits.
//
// A bath nucleus with contact coupling a and dipolar part T seen from a donor
// level with electron projection s = <Sz> resonates at
//   f = (1/2pi) sqrt((-omega0*delta_bath + s*alpha)^2 + (s*beta)^2)
// with (alpha, beta) from effective_interaction; the isotropic case beta = 0
// reduces to f = (1/2pi)|-omega0*delta_bath + s*a|. At s = 0 every line sits
// at the bare bath Zeeman frequency regardless of coupling.
//
// Angular frequencies (omega0, a_iso, alpha, beta) are rad/s internally;
// coupling tables and spectra carry Hz at the file boundary.

#include <string>
#include <utility>
#include <vector>

#include "spinbath/constants.hpp"
#include "spinbath/couplings.hpp"
#include "spinbath/donor.hpp"

namespace spinbath {

struct ENDORLine {
    double frequency = 0;  // Hz
    int level = 0;         // donor level label the nucleus is conditioned on
    std::string coupling_label;
    double intensity = 1;  // arbitrary units; uniform by default
};

struct Spectrum {
    std::vector<double> freq;       // Hz, strictly increasing
    std::vector<double> amplitude;  // >= 0
    double linewidth_sigma = 0;     // Hz
};

struct CouplingEntry {
    double a_iso = 0;  // Hz
    double T = 0;      // Hz
    bool is_anisotropic = false;
    bool low_confidence = false;  // extraction could not pin this entry down
    std::string label;
};

struct CouplingTable {
    std::vector<CouplingEntry> entries;
};

// one spectrum plus the conditions it was taken under
struct MeasuredSpectrum {
    Spectrum spectrum;
    double B = 0;      // tesla
    double theta = 0;  // angle between the anisotropy axis and the field
};

double endor_frequency_iso(const DonorSpec& spec, double s_z, double omega0, double a_iso);
double endor_frequency_aniso(const DonorSpec& spec, double s_z, double omega0, double alpha,
                             double beta);

// the lines a coupling table produces for one EPR transition at field B:
// one line per (entry, donor level) pair
std::vector<ENDORLine> endor_lines(const DonorSpec& spec, const CouplingTable& table,
                                   const TransitionSpec& transition, double B, double theta = 0);

// max - min and midpoint of the line positions (Hz)
double comb_width(const std::vector<ENDORLine>& lines);
double comb_center(const std::vector<ENDORLine>& lines);

// sum of unit-area Gaussians of shared width sigma at each line position;
// grid spans the lines with a 6-sigma margin (a 2 MHz window around the bath
// Zeeman frequency when the table is empty)
Spectrum synthesize_spectrum(const DonorSpec& spec, const CouplingTable& table,
                             const TransitionSpec& transition, double B, double sigma = 40e3,
                             double theta = 0, int n_points = 4000);

struct ExtractionOptions {
    double peak_threshold_rel = 0.05;  // fraction of the max amplitude
    double match_rel_tol = 0.02;       // relative gap closing candidate clusters
    double match_abs_tol = 60e3;       // Hz floor for the same
    double min_field_fraction = 0.6;   // support needed to accept a coupling
    bool allow_anisotropic = true;
};

// Invert the line equation per fitted peak, cluster candidates across
// spectra, accept clusters supported at enough fields, refine jointly.
// Single-spectrum input cannot resolve the branch ambiguity; every candidate
// is returned flagged low_confidence. With allow_anisotropic and data at
// several orientations, clusters that fit poorly as isotropic entries are
// re-fit with the (a_iso, T) model.
CouplingTable extract_couplings(const DonorSpec& spec, const std::vector<MeasuredSpectrum>& data,
                                const TransitionSpec& transition,
                                const ExtractionOptions& opt = {});

}  // namespace spinbath
