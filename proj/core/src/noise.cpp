#include "fastonn/noise.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fastonn/error.hpp"

namespace fastonn::noise {

double rin_from_dbc(double dbc_per_hz) { return std::pow(10.0, dbc_per_hz / 10.0); }

double rin_to_dbc(double rin_per_hz) {
    if (rin_per_hz <= 0.0) throw DomainError("rin_to_dbc: RIN must be positive");
    return 10.0 * std::log10(rin_per_hz);
}

void NoiseParams::validate() const {
    if (!(nep >= 0.0)) throw ConfigError("noise: nep must be >= 0");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
        throw ConfigError("noise: quantum_efficiency must be in (0, 1]");
    if (!(wavelength > 0.0)) throw ConfigError("noise: wavelength must be > 0");
    if (!(rin >= 0.0)) throw ConfigError("noise: rin must be >= 0");
    if (!(clock_rate > 0.0)) throw ConfigError("noise: clock_rate must be > 0");
}

NoiseParams NoiseParams::receiver_25gsps() {
    NoiseParams p;
    p.nep = 5e-12;
    p.quantum_efficiency = 0.65;
    p.wavelength = 975e-9;
    p.rin = rin_from_dbc(-145.0);
    p.clock_rate = 25e9;
    return p;
}

double NoiseComponents::total() const {
    return std::sqrt(detector * detector + shot * shot + rin * rin);
}

NoiseComponents noise_rms_components(double power_w, const NoiseParams& params) {
    if (power_w < 0.0) throw DomainError("noise_rms_components: negative optical power");
    const double b = params.bandwidth();
    NoiseComponents c;
    c.detector = params.nep * std::sqrt(b);
    c.shot = std::sqrt(2.0 * params.photon_energy() * power_w * b / params.quantum_efficiency);
    c.rin = power_w * std::sqrt(params.rin * b);
    return c;
}

Snr snr_total(double power_w, const NoiseParams& params) {
    if (!(power_w > 0.0)) throw DomainError("snr_total: optical power must be > 0");
    const double n = noise_rms_components(power_w, params).total();
    Snr s;
    s.snr = n > 0.0 ? power_w / n : std::numeric_limits<double>::infinity();
    s.effective_bits = std::log2(s.snr);
    return s;
}

SnrBreakdown snr_breakdown(double power_w, const NoiseParams& params) {
    const auto c = noise_rms_components(power_w, params);
    const auto ratio = [power_w](double n) {
        return n > 0.0 ? power_w / n : std::numeric_limits<double>::infinity();
    };
    const auto total = snr_total(power_w, params);
    return {power_w, ratio(c.detector), ratio(c.shot), ratio(c.rin), total.snr,
            total.effective_bits};
}

double rin_plateau_snr(const NoiseParams& params) {
    if (params.rin <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0 * params.acquisition_time() / params.rin);
}

double required_power(double target_bits, const NoiseParams& params) {
    const double plateau = rin_plateau_snr(params);
    if (std::isfinite(plateau) && target_bits >= std::log2(plateau)) {
        std::ostringstream msg;
        msg << "required_power: " << target_bits << " bits is not reachable; RIN plateau is "
            << std::log2(plateau) << " bits";
        throw InfeasibleError(msg.str());
    }
    const auto bits_at = [&](double p) { return snr_total(p, params).effective_bits; };

    double lo = 1e-30;
    if (bits_at(lo) >= target_bits) return lo;
    double hi = 1e-12;
    while (bits_at(hi) < target_bits) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw InfeasibleError("required_power: no power below 1 TW reaches target");
    }
    // Invariant: bits(lo) < target <= bits(hi).
    while ((hi - lo) > 1e-3 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (bits_at(mid) >= target_bits) hi = mid; else lo = mid;
    }
    return hi;
}

double sample_arm_noise(double power_w, const NoiseParams& params, Rng& rng) {
    const double sigma = noise_rms_components(power_w, params).total();
    return sigma * rng.normal();
}

double sample_arm_noise(double power_w, const NoiseParams& params, std::uint64_t seed) {
    Rng rng(seed);
    return sample_arm_noise(power_w, params, rng);
}

}  // namespace fastonn::noise
