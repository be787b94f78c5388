#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fastonn/hardware.hpp"

namespace fastonn::calib {

// Simulated liquid-crystal SLM: a shared gray-level -> phase response and a
// multiplicative optical gain per fanout channel. This is the ground truth
// the calibration procedure tries to recover.
struct SlmDeviceModel {
    std::vector<double> phase_response;  // radians, one entry per gray level
    std::vector<double> pixel_gains;     // one per channel

    std::size_t gray_levels() const { return phase_response.size(); }
    std::size_t channels() const { return pixel_gains.size(); }

    // phi(g) = pi * g / (G - 1).
    static SlmDeviceModel ideal_linear(std::size_t gray_levels = 256, std::size_t channels = 1);

    // phi(g) = pi*u + 0.1*sin(2*pi*u), u = g/(G-1).
    static SlmDeviceModel default_perturbed(std::size_t gray_levels = 256,
                                            std::vector<double> gains = {1.0});

    // Copy with a constant phase drift added to every gray level.
    SlmDeviceModel with_phase_offset(double radians) const;

    void validate() const;

    // Realized differential weight at gray level g, -cos(phi(g)).
    double realized_weight(std::size_t gray_level) const;
};

// Weight -> gray level table over a uniform knot grid on [-1, 1].
struct WeightLut {
    std::vector<double> knots;                  // ascending, first -1, last 1
    std::vector<std::uint16_t> gray_levels;     // one per knot
    std::vector<double> fitted_intensity;       // monotone fit, one per gray level
    std::vector<double> gain_map;               // per-channel flat-field factors

    // Spacing of the weight grid.
    double knot_step() const;

    // Gray level for an arbitrary weight (nearest knot).
    std::uint16_t lookup(double weight) const;
};

struct CalibrationOptions {
    std::size_t grid_knots = 2049;
    double noise_std = 0.0;   // per-sample measurement noise, normalized intensity
    std::size_t sweeps = 16;  // repeated sweeps averaged per gray level
};

// One sweep: gain * sin^2(phi(g)/2) + N(0, noise_std) for every gray level.
std::vector<double> measure_response(const SlmDeviceModel& device, std::size_t channel,
                                     double noise_std, std::uint64_t seed);

// Mean of `sweeps` independent measure_response sweeps (sub-seeded).
std::vector<double> measure_averaged(const SlmDeviceModel& device, std::size_t channel,
                                     double noise_std, std::size_t sweeps, std::uint64_t seed);

// Pool-adjacent-violators least-squares non-decreasing fit.
std::vector<double> isotonic_fit(std::span<const double> samples);

// Fits, checks dynamic range [0.02, 0.98] and inverts I = (w + 1)/2 by linear
// interpolation between fitted samples, rounding to the nearest gray level.
WeightLut build_lut(std::span<const double> samples, std::size_t grid_knots = 2049);

// Per-channel factors that scale every channel's full-on intensity down to
// the weakest channel's.
std::vector<double> flat_field(const SlmDeviceModel& device, std::span<const std::size_t> channels);

// Full procedure on one channel: averaged sweeps, LUT build, flat field over
// every channel of the device.
WeightLut calibrate(const SlmDeviceModel& device, std::size_t channel,
                    const CalibrationOptions& options, std::uint64_t seed);

// Sparse drift compensation. Re-measures a pseudo-random subset of gray
// levels plus both end levels and fits a cubic to the residuals against the
// stored curve. If that correction exceeds twice the knot step anywhere, the
// curve is corrected and only the knots whose predicted weight then misses by
// more than that threshold are reassigned. A full subset rebuilds the LUT
// from the fresh sweep.
WeightLut recalibrate(const SlmDeviceModel& device, std::size_t channel, const WeightLut& lut,
                      double subset_fraction, const CalibrationOptions& options,
                      std::uint64_t seed);

// Largest realized-weight step between adjacent gray levels.
double max_lut_step(const SlmDeviceModel& device);

// max over knots of |realized_weight(LUT(w)) - w| against the device ground truth.
double max_weight_error(const SlmDeviceModel& device, const WeightLut& lut);

// Realizes an M x N weight matrix on the SLM through the LUT.
hw::WeightPlane program_plane(std::size_t rows, std::size_t cols, std::vector<double> weights,
                              const WeightLut& lut, const SlmDeviceModel& device);

}  // namespace fastonn::calib
