#include "fastonn/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fastonn/error.hpp"

namespace fastonn::hw {

HardwareConfig HardwareConfig::with_shape(std::size_t n_inputs, std::size_t n_fanout) {
    HardwareConfig cfg;
    cfg.n_inputs = n_inputs;
    cfg.n_fanout = n_fanout;
    cfg.fanout_efficiencies.assign(n_fanout, 1.0);
    return cfg;
}

void HardwareConfig::validate() const {
    if (n_inputs < 1) throw ConfigError("hardware: n_inputs must be >= 1");
    if (n_fanout < 1) throw ConfigError("hardware: n_fanout must be >= 1");
    if (!(clock_rate > 0.0)) throw ConfigError("hardware: clock_rate must be > 0");
    if (!(max_power_per_vcsel > 0.0))
        throw ConfigError("hardware: max_power_per_vcsel must be > 0");
    if (dac_bits < 1 || dac_bits > 16) throw ConfigError("hardware: dac_bits must be in [1, 16]");
    if (adc_bits < 2 || adc_bits > 16) throw ConfigError("hardware: adc_bits must be in [2, 16]");
    if (!(crosstalk >= 0.0 && crosstalk <= 0.2))
        throw ConfigError("hardware: crosstalk must be in [0, 0.2]");
    if (fanout_efficiencies.size() != n_fanout) {
        std::ostringstream msg;
        msg << "hardware: expected " << n_fanout << " fanout_efficiencies, got "
            << fanout_efficiencies.size();
        throw ConfigError(msg.str());
    }
    for (double e : fanout_efficiencies) {
        if (!(e > 0.0 && e <= 1.0))
            throw ConfigError("hardware: every fanout efficiency must be in (0, 1]");
    }
    if (!(reference_split > 0.0 && reference_split < 1.0))
        throw ConfigError("hardware: reference_split must be in (0, 1)");
}

InputFrame InputFrame::from_values(std::vector<double> values) {
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("InputFrame: activation outside [0, 1]");
    }
    return InputFrame{std::move(values)};
}

// --- WeightPlane ------------------------------------------------------------

WeightPlane::WeightPlane(std::size_t rows, std::size_t cols, std::vector<double> weights,
                         std::vector<double> phases)
    : rows_(rows), cols_(cols), weights_(std::move(weights)), phases_(std::move(phases)) {}

WeightPlane WeightPlane::ideal(std::size_t rows, std::size_t cols, std::vector<double> weights) {
    if (weights.size() != rows * cols) throw DimensionError("WeightPlane: weight count != rows*cols");
    std::vector<double> phases(weights.size());
    std::transform(weights.begin(), weights.end(), phases.begin(), weight_to_phase);
    return WeightPlane(rows, cols, std::move(weights), std::move(phases));
}

WeightPlane WeightPlane::with_phases(std::size_t rows, std::size_t cols,
                                     std::vector<double> weights, std::vector<double> phases) {
    if (weights.size() != rows * cols || phases.size() != rows * cols)
        throw DimensionError("WeightPlane: weight/phase count != rows*cols");
    for (double w : weights) {
        if (!(std::abs(w) <= 1.0)) throw DomainError("WeightPlane: |weight| > 1");
    }
    return WeightPlane(rows, cols, std::move(weights), std::move(phases));
}

double WeightPlane::realized_weight(std::size_t m, std::size_t n) const {
    return -std::cos(phase(m, n));
}

double WeightPlane::max_realization_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        worst = std::max(worst, std::abs(-std::cos(phases_[i]) - weights_[i]));
    return worst;
}

// --- Quantizers ---------------------------------------------------------------

double quantize_unipolar(double x, int bits) {
    const double levels = std::ldexp(1.0, bits) - 1.0;
    return std::round(x * levels) / levels;
}

std::int32_t adc_code(double analog, double full_scale, int bits) {
    const double top = std::ldexp(1.0, bits - 1) - 1.0;
    const double bottom = -std::ldexp(1.0, bits - 1);
    const double code = std::clamp(std::round(analog / full_scale * top), bottom, top);
    return static_cast<std::int32_t>(code);
}

double adc_value(std::int32_t code, double full_scale, int bits) {
    const double top = std::ldexp(1.0, bits - 1) - 1.0;
    return static_cast<double>(code) * full_scale / top;
}

// --- Operations ---------------------------------------------------------------

InputFrame encode_input(std::span<const double> raw, const HardwareConfig& cfg) {
    if (raw.size() != cfg.n_inputs) {
        std::ostringstream msg;
        msg << "encode_input: expected " << cfg.n_inputs << " values, got " << raw.size();
        throw DimensionError(msg.str());
    }
    InputFrame frame;
    frame.activations.reserve(raw.size());
    for (double v : raw) {
        if (std::isnan(v)) throw DomainError("encode_input: NaN input");
        frame.activations.push_back(quantize_unipolar(std::clamp(v, 0.0, 1.0), cfg.dac_bits));
    }
    return frame;
}

double weight_to_phase(double weight) {
    if (!(std::abs(weight) <= 1.0)) throw DomainError("weight_to_phase: |w| > 1");
    return std::acos(-weight);
}

void mix_crosstalk(std::span<double> powers, double kappa) {
    const std::size_t n = powers.size();
    if (kappa == 0.0 || n == 0) return;
    std::vector<double> src(powers.begin(), powers.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? src[0] : src[i - 1];
        const double right = i + 1 == n ? src[n - 1] : src[i + 1];
        powers[i] = (1.0 - kappa) * src[i] + 0.5 * kappa * (left + right);
    }
}

std::vector<std::vector<double>> fanout_replicate(const InputFrame& frame,
                                                  const HardwareConfig& cfg) {
    cfg.validate();
    if (frame.activations.size() != cfg.n_inputs)
        throw DimensionError("fanout_replicate: frame length != n_inputs");
    std::vector<std::vector<double>> copies(cfg.n_fanout);
    for (std::size_t m = 0; m < cfg.n_fanout; ++m) {
        auto& copy = copies[m];
        copy.resize(cfg.n_inputs);
        for (std::size_t n = 0; n < cfg.n_inputs; ++n)
            copy[n] = cfg.fanout_efficiencies[m] * frame.activations[n];
        mix_crosstalk(copy, cfg.crosstalk);
    }
    return copies;
}

DetectorReadout optical_mvm(const InputFrame& frame, const WeightPlane& plane,
                            const HardwareConfig& cfg,
                            const std::optional<noise::NoiseParams>& noise,
                            std::uint64_t seed) {
    if (frame.activations.size() != cfg.n_inputs)
        throw DimensionError("optical_mvm: frame length != n_inputs");
    const OpticalCore core(plane, cfg, noise);
    DetectorReadout out;
    out.analog.resize(cfg.n_fanout);
    out.digital.resize(cfg.n_fanout);
    out.seed_used = seed;
    Rng rng(seed);
    core.run(frame.activations, rng, out.analog, out.digital);
    return out;
}

// --- OpticalCore --------------------------------------------------------------

OpticalCore::OpticalCore(const WeightPlane& plane, const HardwareConfig& cfg,
                         std::optional<noise::NoiseParams> noise)
    : cfg_(cfg), noise_(std::move(noise)) {
    cfg_.validate();
    if (plane.rows() != cfg_.n_fanout || plane.cols() != cfg_.n_inputs) {
        std::ostringstream msg;
        msg << "OpticalCore: plane is " << plane.rows() << "x" << plane.cols()
            << " but hardware is " << cfg_.n_fanout << "x" << cfg_.n_inputs;
        throw DimensionError(msg.str());
    }
    if (noise_) noise_->validate();
    transmission_.resize(plane.rows() * plane.cols());
    const auto phases = plane.phases();
    for (std::size_t i = 0; i < transmission_.size(); ++i) {
        const double s = std::sin(phases[i] / 2.0);
        transmission_[i] = s * s;
    }
}

void OpticalCore::arm_powers(std::span<const double> x, std::span<double> signal,
                             std::span<double> reference) const {
    const std::size_t n_in = cfg_.n_inputs;
    std::vector<double> copy(n_in);
    for (std::size_t m = 0; m < cfg_.n_fanout; ++m) {
        const double eff = cfg_.fanout_efficiencies[m];
        for (std::size_t n = 0; n < n_in; ++n) copy[n] = eff * x[n];
        mix_crosstalk(copy, cfg_.crosstalk);
        double s = 0.0;
        double total = 0.0;
        const double* t = &transmission_[m * n_in];
        for (std::size_t n = 0; n < n_in; ++n) {
            s += copy[n] * t[n];
            total += copy[n];
        }
        signal[m] = s;
        reference[m] = cfg_.reference_split * total;
    }
}

void OpticalCore::run(std::span<const double> x, Rng& rng, std::span<double> analog,
                      std::span<std::int32_t> digital) const {
    const std::size_t m_out = cfg_.n_fanout;
    std::vector<double> signal(m_out);
    std::vector<double> reference(m_out);
    arm_powers(x, signal, reference);

    const double r = cfg_.reference_split;
    const double p_max = cfg_.max_power_per_vcsel;
    for (std::size_t m = 0; m < m_out; ++m) {
        double s = signal[m];
        double ref = reference[m];
        if (noise_) {
            // Draw order per channel: signal arm, reference arm, then the
            // common RIN draw when enabled.
            const auto& np = *noise_;
            if (np.rin_common_mode) {
                noise::NoiseParams no_rin = np;
                no_rin.rin = 0.0;
                const double ds = noise::sample_arm_noise(s * p_max, no_rin, rng) / p_max;
                const double dr = noise::sample_arm_noise(ref * p_max, no_rin, rng) / p_max;
                const double rel = std::sqrt(np.rin * np.bandwidth()) * rng.normal();
                s += ds + s * rel;
                ref += dr + ref * rel;
            } else {
                s += noise::sample_arm_noise(s * p_max, np, rng) / p_max;
                ref += noise::sample_arm_noise(ref * p_max, np, rng) / p_max;
            }
        }
        analog[m] = 2.0 * (s - ref) / (2.0 * r);
        digital[m] = adc_code(analog[m], cfg_.full_scale(), cfg_.adc_bits);
    }
}

double OpticalCore::dequantize(std::int32_t code) const {
    return adc_value(code, cfg_.full_scale(), cfg_.adc_bits);
}

// --- Operating point ------------------------------------------------------------

noise::NoiseParams match_output_noise(const HardwareConfig& cfg, noise::NoiseParams base,
                                      double target_output_std, double mean_signal_arm,
                                      double mean_reference_arm) {
    cfg.validate();
    base.clock_rate = cfg.clock_rate;
    base.validate();
    if (!(target_output_std > 0.0)) throw DomainError("match_output_noise: target must be > 0");

    const double p_max = cfg.max_power_per_vcsel;
    const double r = cfg.reference_split;
    const double b = base.bandwidth();

    // Output is (S - R)/r, so var_out = (var_S + var_R)/r^2 for independent arms.
    const double budget = std::pow(target_output_std * r * p_max, 2);
    noise::NoiseParams no_det = base;
    no_det.nep = 0.0;
    const double s_w = mean_signal_arm * p_max;
    const double r_w = mean_reference_arm * p_max;
    double other = 0.0;
    if (base.rin_common_mode) {
        noise::NoiseParams shot_only = no_det;
        shot_only.rin = 0.0;
        other = std::pow(noise::noise_rms_components(s_w, shot_only).total(), 2) +
                std::pow(noise::noise_rms_components(r_w, shot_only).total(), 2) +
                std::pow(s_w - r_w, 2) * base.rin * b;
    } else {
        other = std::pow(noise::noise_rms_components(s_w, no_det).total(), 2) +
                std::pow(noise::noise_rms_components(r_w, no_det).total(), 2);
    }
    if (other >= budget) {
        throw InfeasibleError(
            "match_output_noise: shot and RIN noise already exceed the target output noise");
    }
    base.nep = std::sqrt((budget - other) / 2.0 / b);
    return base;
}

OperatingPoint tune_operating_point(const WeightPlane& plane, const HardwareConfig& cfg,
                                    std::span<const std::vector<double>> frames,
                                    noise::NoiseParams base, double error_fraction) {
    if (frames.empty()) throw DomainError("tune_operating_point: empty workload");
    if (!(error_fraction > 0.0)) throw DomainError("tune_operating_point: fraction must be > 0");
    const OpticalCore core(plane, cfg, std::nullopt);
    const std::size_t m_out = cfg.n_fanout;
    std::vector<double> signal(m_out);
    std::vector<double> reference(m_out);

    OperatingPoint op;
    double sum_s = 0.0;
    double sum_r = 0.0;
    for (const auto& frame : frames) {
        if (frame.size() != cfg.n_inputs)
            throw DimensionError("tune_operating_point: frame length != n_inputs");
        core.arm_powers(frame, signal, reference);
        for (std::size_t m = 0; m < m_out; ++m) {
            const double y = (signal[m] - reference[m]) / cfg.reference_split;
            op.full_scale = std::max(op.full_scale, std::abs(y));
            sum_s += signal[m];
            sum_r += reference[m];
        }
    }
    const double count = static_cast<double>(frames.size() * m_out);
    op.mean_signal_arm = sum_s / count;
    op.mean_reference_arm = sum_r / count;
    if (!(op.full_scale > 0.0))
        throw DomainError("tune_operating_point: workload produces an all-zero readout");
    op.target_output_std = error_fraction * op.full_scale;
    op.noise = match_output_noise(cfg, base, op.target_output_std, op.mean_signal_arm,
                                  op.mean_reference_arm);
    return op;
}

}  // namespace fastonn::hw
