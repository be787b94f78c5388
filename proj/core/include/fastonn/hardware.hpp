#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fastonn/noise.hpp"
#include "fastonn/rng.hpp"

namespace fastonn::hw {

// Geometry and electrical parameters of one optical MVM unit: N VCSEL
// inputs fanned out to M weighted copies, each read by a balanced detector.
struct HardwareConfig {
    std::size_t n_inputs = 9;
    std::size_t n_fanout = 9;
    double clock_rate = 1e8;             // samples/s
    double max_power_per_vcsel = 2e-3;   // W at normalized activation 1
    int dac_bits = 8;
    int adc_bits = 10;
    double crosstalk = 0.0;              // nearest-neighbour leakage, [0, 0.2]
    std::vector<double> fanout_efficiencies = std::vector<double>(9, 1.0);
    double reference_split = 0.5;

    // Config with the given shape, unit efficiencies and default electronics.
    static HardwareConfig with_shape(std::size_t n_inputs, std::size_t n_fanout);

    void validate() const;

    // Largest |analog| the ADC represents.
    double full_scale() const { return static_cast<double>(n_inputs); }
};

// Normalized per-VCSEL optical powers, each in [0, 1].
struct InputFrame {
    std::vector<double> activations;

    // Wraps already-normalized values; throws DomainError outside [0, 1].
    static InputFrame from_values(std::vector<double> values);
};

// Signed M x N weight matrix with the SLM phase realizing each entry.
// Row m is the kernel applied to fanout copy m.
class WeightPlane {
public:
    WeightPlane() = default;

    // Phases from the closed-form map phi = arccos(-w).
    static WeightPlane ideal(std::size_t rows, std::size_t cols, std::vector<double> weights);

    // Explicit phases, e.g. from a calibrated LUT driving a non-ideal SLM.
    static WeightPlane with_phases(std::size_t rows, std::size_t cols,
                                   std::vector<double> weights, std::vector<double> phases);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double weight(std::size_t m, std::size_t n) const { return weights_[m * cols_ + n]; }
    double phase(std::size_t m, std::size_t n) const { return phases_[m * cols_ + n]; }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> phases() const { return phases_; }

    // Differential weight the phase actually realizes, -cos(phi).
    double realized_weight(std::size_t m, std::size_t n) const;

    // Largest |realized - target| over the plane.
    double max_realization_error() const;

private:
    WeightPlane(std::size_t rows, std::size_t cols, std::vector<double> weights,
                std::vector<double> phases);

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> weights_;
    std::vector<double> phases_;
};

struct DetectorReadout {
    std::vector<double> analog;         // differential output, full scale [-N, N]
    std::vector<std::int32_t> digital;  // ADC codes
    std::uint64_t seed_used = 0;
};

// --- Quantizers (round half away from zero) ---------------------------------

double quantize_unipolar(double x, int bits);
std::int32_t adc_code(double analog, double full_scale, int bits);
double adc_value(std::int32_t code, double full_scale, int bits);

// --- Per-cycle operations -----------------------------------------------------

InputFrame encode_input(std::span<const double> raw, const HardwareConfig& cfg);

double weight_to_phase(double weight);

// In-place nearest-neighbour power leakage over the flattened VCSEL order.
// Edge elements reflect their leakage back onto themselves so power is
// conserved.
void mix_crosstalk(std::span<double> powers, double kappa);

std::vector<std::vector<double>> fanout_replicate(const InputFrame& frame,
                                                  const HardwareConfig& cfg);

DetectorReadout optical_mvm(const InputFrame& frame, const WeightPlane& plane,
                            const HardwareConfig& cfg,
                            const std::optional<noise::NoiseParams>& noise,
                            std::uint64_t seed);

// Deterministic per-frame seed for batch drivers.
inline std::uint64_t frame_seed(std::uint64_t base, std::uint64_t frame_index) {
    return derive_seed(base, frame_index);
}

// Repeated-evaluation engine with the plane's transmissions precomputed. This
// is what optical_mvm runs once; batch drivers reuse it across frames.
class OpticalCore {
public:
    OpticalCore(const WeightPlane& plane, const HardwareConfig& cfg,
                std::optional<noise::NoiseParams> noise);

    std::size_t inputs() const { return cfg_.n_inputs; }
    std::size_t outputs() const { return cfg_.n_fanout; }
    const HardwareConfig& config() const { return cfg_; }
    bool noisy() const { return noise_.has_value(); }

    // x must hold n_inputs values in [0, 1] (not range-checked here).
    // rng is only consumed when noise is enabled.
    void run(std::span<const double> x, Rng& rng, std::span<double> analog,
             std::span<std::int32_t> digital) const;

    // Noiseless per-copy arm powers (normalized units).
    void arm_powers(std::span<const double> x, std::span<double> signal,
                    std::span<double> reference) const;

    double dequantize(std::int32_t code) const;

private:
    HardwareConfig cfg_;
    std::optional<noise::NoiseParams> noise_;
    std::vector<double> transmission_;  // sin^2(phi/2), row-major M x N
};

// --- Noise operating point ------------------------------------------------

// Returns base with NEP chosen so the differential output noise std equals
// target_output_std (normalized output units) at the given mean arm powers
// (normalized units). Shot and RIN terms from base are kept. Throws
// InfeasibleError if shot and RIN alone already exceed the target.
noise::NoiseParams match_output_noise(const HardwareConfig& cfg, noise::NoiseParams base,
                                      double target_output_std, double mean_signal_arm,
                                      double mean_reference_arm);

struct OperatingPoint {
    noise::NoiseParams noise;
    double full_scale = 0.0;       // peak |ideal readout| over the workload
    double target_output_std = 0.0;
    double mean_signal_arm = 0.0;
    double mean_reference_arm = 0.0;
};

// Tunes detector noise so the readout error std is error_fraction times the
// peak |ideal readout| seen over the workload frames.
OperatingPoint tune_operating_point(const WeightPlane& plane, const HardwareConfig& cfg,
                                    std::span<const std::vector<double>> frames,
                                    noise::NoiseParams base, double error_fraction);

}  // namespace fastonn::hw
