#include "fastonn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fastonn/error.hpp"
#include "fastonn/rng.hpp"

namespace fastonn::calib {

namespace {

constexpr double kMinFittedIntensity = 0.02;
constexpr double kMaxFittedIntensity = 0.98;

std::vector<double> uniform_knots(std::size_t count) {
    if (count < 2) throw DomainError("WeightLut: need at least 2 knots");
    std::vector<double> knots(count);
    for (std::size_t k = 0; k < count; ++k)
        knots[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(count - 1);
    knots.back() = 1.0;
    return knots;
}

void check_dynamic_range(std::span<const double> fitted) {
    if (fitted.empty()) throw CalibrationRangeError("calibration: no samples");
    if (fitted.front() > kMinFittedIntensity || fitted.back() < kMaxFittedIntensity) {
        std::ostringstream msg;
        msg << "calibration: fitted response spans [" << fitted.front() << ", " << fitted.back()
            << "], need at least [" << kMinFittedIntensity << ", " << kMaxFittedIntensity << "]";
        throw CalibrationRangeError(msg.str());
    }
}

// Gray level whose fitted intensity matches (w + 1)/2, by linear
// interpolation between neighbouring fitted samples.
std::uint16_t invert(std::span<const double> fitted, double weight) {
    const double target = 0.5 * (weight + 1.0);
    const std::size_t last = fitted.size() - 1;
    if (target <= fitted.front()) return 0;
    if (target >= fitted.back()) return static_cast<std::uint16_t>(last);
    const auto it = std::lower_bound(fitted.begin(), fitted.end(), target);
    const auto k = static_cast<std::size_t>(it - fitted.begin());  // fitted[k-1] < t <= fitted[k]
    const double lo = fitted[k - 1];
    const double hi = fitted[k];
    const double x = static_cast<double>(k - 1) + (target - lo) / (hi - lo);
    return static_cast<std::uint16_t>(std::min<double>(std::round(x), static_cast<double>(last)));
}

double full_on_intensity(const SlmDeviceModel& device, std::size_t channel) {
    const auto response = measure_response(device, channel, 0.0, 0);
    return *std::max_element(response.begin(), response.end());
}

std::vector<double> normalized_measurement(const SlmDeviceModel& device, std::size_t channel,
                                           const CalibrationOptions& options, std::uint64_t seed) {
    auto samples = measure_averaged(device, channel, options.noise_std, options.sweeps, seed);
    const double full_on = full_on_intensity(device, channel);
    if (!(full_on > 0.0))
        throw DeadChannelError(channel, "calibration: channel " + std::to_string(channel) +
                                            " has zero response");
    for (double& s : samples) s /= full_on;
    return samples;
}

}  // namespace

// --- SlmDeviceModel ----------------------------------------------------------

SlmDeviceModel SlmDeviceModel::ideal_linear(std::size_t gray_levels, std::size_t channels) {
    if (gray_levels < 2) throw DomainError("SlmDeviceModel: need at least 2 gray levels");
    SlmDeviceModel d;
    d.phase_response.resize(gray_levels);
    for (std::size_t g = 0; g < gray_levels; ++g)
        d.phase_response[g] =
            std::numbers::pi * static_cast<double>(g) / static_cast<double>(gray_levels - 1);
    d.pixel_gains.assign(channels, 1.0);
    return d;
}

SlmDeviceModel SlmDeviceModel::default_perturbed(std::size_t gray_levels,
                                                 std::vector<double> gains) {
    if (gray_levels < 2) throw DomainError("SlmDeviceModel: need at least 2 gray levels");
    SlmDeviceModel d;
    d.phase_response.resize(gray_levels);
    for (std::size_t g = 0; g < gray_levels; ++g) {
        const double u = static_cast<double>(g) / static_cast<double>(gray_levels - 1);
        d.phase_response[g] =
            std::numbers::pi * u + 0.1 * std::sin(2.0 * std::numbers::pi * u);
    }
    d.pixel_gains = std::move(gains);
    return d;
}

SlmDeviceModel SlmDeviceModel::with_phase_offset(double radians) const {
    SlmDeviceModel d = *this;
    for (double& p : d.phase_response) p += radians;
    return d;
}

void SlmDeviceModel::validate() const {
    if (phase_response.size() < 2) throw ConfigError("SlmDeviceModel: need at least 2 gray levels");
    if (pixel_gains.empty()) throw ConfigError("SlmDeviceModel: need at least one channel");
    for (double g : pixel_gains) {
        if (!(g >= 0.0)) throw ConfigError("SlmDeviceModel: negative pixel gain");
    }
}

double SlmDeviceModel::realized_weight(std::size_t gray_level) const {
    return -std::cos(phase_response.at(gray_level));
}

// --- WeightLut ---------------------------------------------------------------

double WeightLut::knot_step() const {
    return 2.0 / static_cast<double>(knots.size() - 1);
}

std::uint16_t WeightLut::lookup(double weight) const {
    if (!(std::abs(weight) <= 1.0)) throw DomainError("WeightLut::lookup: |w| > 1");
    const double pos = std::round((weight + 1.0) / knot_step());
    const auto idx = std::min(static_cast<std::size_t>(pos), knots.size() - 1);
    return gray_levels[idx];
}

// --- Measurement -------------------------------------------------------------

std::vector<double> measure_response(const SlmDeviceModel& device, std::size_t channel,
                                     double noise_std, std::uint64_t seed) {
    device.validate();
    if (channel >= device.channels()) throw DimensionError("measure_response: no such channel");
    const double gain = device.pixel_gains[channel];
    Rng rng(seed);
    std::vector<double> out(device.gray_levels());
    for (std::size_t g = 0; g < out.size(); ++g) {
        const double s = std::sin(device.phase_response[g] / 2.0);
        out[g] = gain * s * s;
        if (noise_std > 0.0) out[g] += noise_std * rng.normal();
    }
    return out;
}

std::vector<double> measure_averaged(const SlmDeviceModel& device, std::size_t channel,
                                     double noise_std, std::size_t sweeps, std::uint64_t seed) {
    if (sweeps == 0) throw DomainError("measure_averaged: sweeps must be >= 1");
    std::vector<double> mean(device.gray_levels(), 0.0);
    for (std::size_t k = 0; k < sweeps; ++k) {
        const auto sweep = measure_response(device, channel, noise_std, derive_seed(seed, k));
        for (std::size_t g = 0; g < mean.size(); ++g) mean[g] += sweep[g];
    }
    for (double& v : mean) v /= static_cast<double>(sweeps);
    return mean;
}

std::vector<double> isotonic_fit(std::span<const double> samples) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(samples.size());
    for (double s : samples) {
        blocks.push_back({s, 1});
        while (blocks.size() > 1 &&
               blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    std::vector<double> fitted;
    fitted.reserve(samples.size());
    for (const auto& b : blocks) fitted.insert(fitted.end(), b.count, b.mean());
    return fitted;
}

WeightLut build_lut(std::span<const double> samples, std::size_t grid_knots) {
    if (samples.size() > 65536) throw DomainError("build_lut: more than 65536 gray levels");
    WeightLut lut;
    lut.fitted_intensity = isotonic_fit(samples);
    check_dynamic_range(lut.fitted_intensity);
    lut.knots = uniform_knots(grid_knots);
    lut.gray_levels.reserve(grid_knots);
    for (double w : lut.knots) lut.gray_levels.push_back(invert(lut.fitted_intensity, w));
    lut.gain_map = {1.0};
    return lut;
}

std::vector<double> flat_field(const SlmDeviceModel& device, std::span<const std::size_t> channels) {
    if (channels.empty()) throw DomainError("flat_field: need at least one channel");
    std::vector<double> full_on;
    full_on.reserve(channels.size());
    for (std::size_t c : channels) {
        const double v = full_on_intensity(device, c);
        if (!(v > 0.0))
            throw DeadChannelError(c, "flat_field: channel " + std::to_string(c) +
                                          " has zero response");
        full_on.push_back(v);
    }
    const double weakest = *std::min_element(full_on.begin(), full_on.end());
    std::vector<double> map(full_on.size());
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = weakest / full_on[i];
    return map;
}

namespace {

std::vector<double> all_channel_gain_map(const SlmDeviceModel& device) {
    std::vector<std::size_t> channels(device.channels());
    std::iota(channels.begin(), channels.end(), std::size_t{0});
    return flat_field(device, channels);
}

// Least-squares polynomial coefficients (lowest order first) via the normal
// equations; the abscissae are expected in [-1, 1].
std::vector<double> least_squares_poly(std::span<const double> x, std::span<const double> y,
                                       std::size_t degree) {
    const std::size_t n = degree + 1;
    std::vector<double> a(n * (n + 1), 0.0);  // augmented n x (n + 1)
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> pw(2 * n - 1, 1.0);
        for (std::size_t k = 1; k < pw.size(); ++k) pw[k] = pw[k - 1] * x[i];
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) a[r * (n + 1) + c] += pw[r + c];
            a[r * (n + 1) + n] += pw[r] * y[i];
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * (n + 1) + col]) > std::abs(a[piv * (n + 1) + col])) piv = r;
        for (std::size_t c = 0; c <= n; ++c) std::swap(a[col * (n + 1) + c], a[piv * (n + 1) + c]);
        const double d = a[col * (n + 1) + col];
        if (d == 0.0) throw InternalError("least_squares_poly: singular system");
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * (n + 1) + col] / d;
            for (std::size_t c = col; c <= n; ++c) a[r * (n + 1) + c] -= f * a[col * (n + 1) + c];
        }
    }
    std::vector<double> coeffs(n);
    for (std::size_t r = 0; r < n; ++r) coeffs[r] = a[r * (n + 1) + n] / a[r * (n + 1) + r];
    return coeffs;
}

double eval_poly(std::span<const double> coeffs, double x) {
    double v = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
    return v;
}

}  // namespace

WeightLut calibrate(const SlmDeviceModel& device, std::size_t channel,
                    const CalibrationOptions& options, std::uint64_t seed) {
    const auto samples =
        normalized_measurement(device, channel, options, derive_seed(seed, "calibration-noise"));
    WeightLut lut = build_lut(samples, options.grid_knots);
    lut.gain_map = all_channel_gain_map(device);
    return lut;
}

WeightLut recalibrate(const SlmDeviceModel& device, std::size_t channel, const WeightLut& lut,
                      double subset_fraction, const CalibrationOptions& options,
                      std::uint64_t seed) {
    if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
        throw DomainError("recalibrate: subset_fraction must be in (0, 1]");
    const std::size_t levels = device.gray_levels();
    if (lut.fitted_intensity.size() != levels)
        throw DimensionError("recalibrate: LUT was built for a different gray-level count");

    // Deterministic pseudo-random subset of gray levels.
    std::vector<std::size_t> order(levels);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng pick(derive_seed(seed, "recalibration-subset"));
    pick.shuffle(std::span<std::size_t>(order));
    const auto count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(subset_fraction * static_cast<double>(levels))), 1,
        levels);
    std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<long>(count));
    // The two end levels are always re-measured so the correction is
    // interpolated, never extrapolated.
    subset.push_back(0);
    subset.push_back(levels - 1);
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());

    // The simulator sweeps every level; only the subset is used.
    const auto fresh =
        normalized_measurement(device, channel, options, derive_seed(seed, "recalibration-noise"));

    if (subset.size() == levels) {
        WeightLut rebuilt = build_lut(fresh, lut.knots.size());
        rebuilt.gain_map = all_channel_gain_map(device);
        return rebuilt;
    }

    std::vector<double> u(subset.size());
    std::vector<double> residual(subset.size());
    const double last = static_cast<double>(levels - 1);
    for (std::size_t i = 0; i < subset.size(); ++i) {
        u[i] = 2.0 * static_cast<double>(subset[i]) / last - 1.0;
        residual[i] = fresh[subset[i]] - lut.fitted_intensity[subset[i]];
    }
    // A smooth low-order correction: the individual residuals carry the
    // measurement noise of both sweeps, which piecewise interpolation would
    // pass straight into the fit.
    const auto coeffs = least_squares_poly(u, residual, std::min<std::size_t>(3, subset.size() - 1));

    const double threshold = 2.0 * lut.knot_step();
    std::vector<double> corrected(levels);
    double worst = 0.0;
    for (std::size_t g = 0; g < levels; ++g) {
        const double corr = eval_poly(coeffs, 2.0 * static_cast<double>(g) / last - 1.0);
        worst = std::max(worst, 2.0 * std::abs(corr));
        corrected[g] = lut.fitted_intensity[g] + corr;
    }
    if (worst <= threshold) return lut;

    WeightLut updated = lut;
    updated.fitted_intensity = isotonic_fit(corrected);
    check_dynamic_range(updated.fitted_intensity);
    for (std::size_t k = 0; k < updated.knots.size(); ++k) {
        const double w = updated.knots[k];
        const double predicted = 2.0 * updated.fitted_intensity[lut.gray_levels[k]] - 1.0;
        if (std::abs(predicted - w) > threshold)
            updated.gray_levels[k] = invert(updated.fitted_intensity, w);
    }
    updated.gain_map = all_channel_gain_map(device);
    return updated;
}

double max_lut_step(const SlmDeviceModel& device) {
    double worst = 0.0;
    for (std::size_t g = 0; g + 1 < device.gray_levels(); ++g)
        worst = std::max(worst, std::abs(device.realized_weight(g + 1) - device.realized_weight(g)));
    return worst;
}

double max_weight_error(const SlmDeviceModel& device, const WeightLut& lut) {
    double worst = 0.0;
    for (std::size_t k = 0; k < lut.knots.size(); ++k)
        worst = std::max(worst, std::abs(device.realized_weight(lut.gray_levels[k]) - lut.knots[k]));
    return worst;
}

hw::WeightPlane program_plane(std::size_t rows, std::size_t cols, std::vector<double> weights,
                              const WeightLut& lut, const SlmDeviceModel& device) {
    if (weights.size() != rows * cols) throw DimensionError("program_plane: weight count != rows*cols");
    std::vector<double> phases(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        phases[i] = device.phase_response.at(lut.lookup(weights[i]));
    return hw::WeightPlane::with_phases(rows, cols, std::move(weights), std::move(phases));
}

}  // namespace fastonn::calib
