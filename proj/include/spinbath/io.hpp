#pragma once

// File emission and ingestion for every artifact the pipelines produce.
// CSV files start with '# key=value' metadata lines (version, seed,
// parameters) followed by a column-header row; doubles are printed with
// enough digits to parse back to the same value. Readers throw
// std::runtime_error with the offending line number on malformed input.
//
// Boundary units follow the file formats: fields in mT, line positions in
// MHz, times in seconds, lengths in angstrom.

#include <string>

#include "spinbath/analysis.hpp"
#include "spinbath/cce.hpp"
#include "spinbath/endor.hpp"
#include "spinbath/lattice.hpp"

namespace spinbath {

inline constexpr int format_version = 1;

// JSON sidecar carrying the same metadata as the CSV header
std::string sidecar_path(const std::string& csv_path);

// (t_seconds, L) plus sidecar JSON with the ensemble metadata
void write_echo_curve(const std::string& csv_path, const EchoCurve& curve);
EchoCurve read_echo_curve(const std::string& csv_path);

// (frequency_MHz, amplitude) plus sidecar with (B_mT, theta_rad, sigma)
void write_spectrum(const std::string& csv_path, const Spectrum& spectrum, double B,
                    double theta);
MeasuredSpectrum read_spectrum(const std::string& csv_path);

void write_coupling_table(const std::string& csv_path, const CouplingTable& table);
CouplingTable read_coupling_table(const std::string& csv_path);

// site list with the lattice parameters in the header
void write_bath(const std::string& csv_path, const BathConfiguration& bath);
BathConfiguration read_bath(const std::string& csv_path);

// (B_mT, T_SD_s, n, T2_s, diverged, T_SD_lower_bound_s, residual_rms, ...)
void write_sweep(const std::string& csv_path, const SweepResult& sweep);
SweepResult read_sweep(const std::string& csv_path);

void write_owp_report(const std::string& json_path, const OWPReport& report);
OWPReport read_owp_report(const std::string& json_path);

}  // namespace spinbath
