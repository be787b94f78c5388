#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fastonn::analysis {

// Operations per second of an N-input, M-copy unit clocked at R.
double throughput(double n_inputs, double n_fanout, double clock_rate);

// Per-device electrical costs.
struct EnergyParams {
    double laser_power_per_vcsel = 400e-6;  // W, wall-plug
    double dac_energy = 0.5e-12;            // J per conversion
    double slm_power_per_pixel = 3e-6;      // W
    double tia_energy = 180e-15;            // J per conversion
    double adc_energy = 0.8e-12;            // J per conversion
    double nonlinearity_energy = 1e-12;     // J per operation

    // 9 x 9 unit at 100 MS/s.
    static EnergyParams current_system();
    // 1000 x 1000 unit at 25 GS/s.
    static EnergyParams near_term();

    void validate() const;
};

struct EnergyRow {
    std::string component;
    std::string description;
    double device_cost = 0.0;  // in the unit below
    std::string unit;          // "W" or "J"
    double per_op = 0.0;       // J per operation
};

struct EnergyBreakdown {
    std::vector<EnergyRow> rows;  // laser, dac, slm, tia, adc, nonlinearity
    double total = 0.0;           // J per operation
    double total_power = 0.0;     // W

    const EnergyRow& row(const std::string& component) const;
};

// Total power N(P_laser + E_DAC R) + N M P_SLM + M (E_TIA + E_ADC + E_NL) R,
// divided by 2 N M R.
EnergyBreakdown energy_per_op(const EnergyParams& params, std::size_t n_inputs,
                              std::size_t n_fanout, double clock_rate);

struct GeometryParams {
    double focal_length = 36.7e-3;            // m
    double diffraction_angle_per_order = 0.017453292519943295;  // rad (1 degree)
    double source_pitch = 250e-6;             // m
    double spot_diameter = 100e-6;            // m

    void validate() const;
};

struct FanoutGeometry {
    double spot_spacing = 0.0;     // m
    double array_extent = 0.0;     // m, centre to centre along one axis
    double crosstalk_margin = 0.0; // spacing / spot diameter
    bool crosstalk_warning = false;
};

inline constexpr double kCrosstalkMarginThreshold = 3.0;

FanoutGeometry fanout_geometry(const GeometryParams& params, std::size_t copies_per_axis);

}  // namespace fastonn::analysis
