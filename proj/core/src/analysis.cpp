#include "fastonn/analysis.hpp"

#include <cmath>

#include "fastonn/error.hpp"

namespace fastonn::analysis {

double throughput(double n_inputs, double n_fanout, double clock_rate) {
    if (!(n_inputs > 0 && n_fanout > 0 && clock_rate > 0))
        throw DomainError("throughput: arguments must be positive");
    return 2.0 * n_inputs * n_fanout * clock_rate;
}

EnergyParams EnergyParams::current_system() { return EnergyParams{}; }

EnergyParams EnergyParams::near_term() {
    EnergyParams p;
    p.laser_power_per_vcsel = 5e-3;
    p.tia_energy = 170e-15;
    p.adc_energy = 2e-12;
    return p;
}

void EnergyParams::validate() const {
    for (double v : {laser_power_per_vcsel, dac_energy, slm_power_per_pixel, tia_energy,
                     adc_energy, nonlinearity_energy}) {
        if (!(v >= 0.0)) throw ConfigError("energy: every parameter must be >= 0");
    }
}

const EnergyRow& EnergyBreakdown::row(const std::string& component) const {
    for (const auto& r : rows)
        if (r.component == component) return r;
    throw DomainError("EnergyBreakdown: no row named " + component);
}

EnergyBreakdown energy_per_op(const EnergyParams& p, std::size_t n_inputs, std::size_t n_fanout,
                              double clock_rate) {
    p.validate();
    if (n_inputs == 0 || n_fanout == 0 || !(clock_rate > 0))
        throw DomainError("energy_per_op: N, M and R must be positive");
    const double n = static_cast<double>(n_inputs);
    const double m = static_cast<double>(n_fanout);
    const double r = clock_rate;
    const double ops = 2.0 * n * m * r;

    const double laser_w = n * p.laser_power_per_vcsel;
    const double dac_w = n * p.dac_energy * r;
    const double slm_w = n * m * p.slm_power_per_pixel;
    const double tia_w = m * p.tia_energy * r;
    const double adc_w = m * p.adc_energy * r;
    const double nl_w = m * p.nonlinearity_energy * r;

    EnergyBreakdown b;
    b.rows = {
        {"laser", "electrical power per VCSEL", p.laser_power_per_vcsel, "W", laser_w / ops},
        {"dac", "energy per DAC conversion", p.dac_energy, "J", dac_w / ops},
        {"slm", "power per SLM pixel", p.slm_power_per_pixel, "W", slm_w / ops},
        {"tia", "energy per TIA conversion", p.tia_energy, "J", tia_w / ops},
        {"adc", "energy per ADC conversion", p.adc_energy, "J", adc_w / ops},
        {"nonlinearity", "energy per nonlinearity", p.nonlinearity_energy, "J", nl_w / ops},
    };
    b.total_power = laser_w + dac_w + slm_w + tia_w + adc_w + nl_w;
    b.total = b.total_power / ops;
    return b;
}

void GeometryParams::validate() const {
    if (!(focal_length > 0.0)) throw ConfigError("geometry: focal_length must be > 0");
    if (!(diffraction_angle_per_order >= 0.0))
        throw ConfigError("geometry: diffraction_angle_per_order must be >= 0");
    if (!(source_pitch > 0.0)) throw ConfigError("geometry: source_pitch must be > 0");
    if (!(spot_diameter > 0.0)) throw ConfigError("geometry: spot_diameter must be > 0");
}

FanoutGeometry fanout_geometry(const GeometryParams& g, std::size_t copies_per_axis) {
    g.validate();
    if (copies_per_axis == 0) throw DomainError("fanout_geometry: copies_per_axis must be >= 1");
    FanoutGeometry out;
    out.spot_spacing = g.focal_length * std::tan(g.diffraction_angle_per_order);
    out.array_extent = out.spot_spacing * static_cast<double>(copies_per_axis - 1);
    out.crosstalk_margin = out.spot_spacing / g.spot_diameter;
    out.crosstalk_warning = out.crosstalk_margin < kCrosstalkMarginThreshold;
    return out;
}

}  // namespace fastonn::analysis
