#pragma once

#include <cstdint>

#include "fastonn/rng.hpp"

namespace fastonn::noise {

inline constexpr double kPlanck = 6.62607015e-34;       // J*s
inline constexpr double kSpeedOfLight = 299792458.0;    // m/s

// Relative intensity noise conversions between dBc/Hz and linear 1/Hz.
double rin_from_dbc(double dbc_per_hz);
double rin_to_dbc(double rin_per_hz);

// Photoreceiver and source noise description. The readout bandwidth is
// B = R/2 and the acquisition time is T = 1/R.
struct NoiseParams {
    double nep = 5e-12;                 // W/sqrt(Hz)
    double quantum_efficiency = 0.65;
    double wavelength = 975e-9;         // m
    double rin = 3.1622776601683794e-15;  // 1/Hz, i.e. -145 dBc/Hz
    double clock_rate = 25e9;           // samples/s
    // When set, the laser RIN is drawn once per source and applied to both
    // detector arms, so balanced detection subtracts the correlated part.
    bool rin_common_mode = false;

    void validate() const;

    double bandwidth() const { return clock_rate / 2.0; }
    double acquisition_time() const { return 1.0 / clock_rate; }
    double photon_energy() const { return kPlanck * kSpeedOfLight / wavelength; }

    // Constants of the 25 GS/s receiver study: eta = 0.65, 975 nm,
    // 5 pW/sqrt(Hz), -145 dBc/Hz.
    static NoiseParams receiver_25gsps();
};

// RMS input-referred noise powers in watts.
struct NoiseComponents {
    double detector = 0.0;
    double shot = 0.0;
    double rin = 0.0;

    double total() const;
};

NoiseComponents noise_rms_components(double power_w, const NoiseParams& params);

struct Snr {
    double snr = 0.0;
    double effective_bits = 0.0;
};

Snr snr_total(double power_w, const NoiseParams& params);

// Per-source SNRs next to the combined value; a source with zero noise
// reports +inf.
struct SnrBreakdown {
    double power_w = 0.0;
    double snr_det = 0.0;
    double snr_shot = 0.0;
    double snr_rin = 0.0;
    double snr_total = 0.0;
    double bits = 0.0;
};

SnrBreakdown snr_breakdown(double power_w, const NoiseParams& params);

// High-power limit sqrt(2T/RIN); +inf when RIN is zero.
double rin_plateau_snr(const NoiseParams& params);

// Smallest detector power reaching target_bits, to 0.1% relative.
// Throws InfeasibleError when the target lies at or above the RIN plateau.
double required_power(double target_bits, const NoiseParams& params);

// Zero-mean Gaussian draw (watts) with the combined RMS at power_w.
double sample_arm_noise(double power_w, const NoiseParams& params, Rng& rng);
double sample_arm_noise(double power_w, const NoiseParams& params, std::uint64_t seed);

}  // namespace fastonn::noise
