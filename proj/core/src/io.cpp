#include "fastonn/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <initializer_list>
#include <string_view>

#include "fastonn/error.hpp"

namespace fastonn::io {

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string format_number(std::int64_t value) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%" PRId64, value);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw IoError("cannot write " + path.string());
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw InternalError("CsvWriter: row width differs from header in " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw IoError("error writing " + path_.string());
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& value) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << value.dump(2) << '\n';
    if (!out) throw IoError("error writing " + path.string());
}

void check_keys(const Json& j, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
    }
}


Json to_json(const hw::HardwareConfig& c) {
    return Json{{"n_inputs", c.n_inputs},
                {"n_fanout", c.n_fanout},
                {"clock_rate", c.clock_rate},
                {"max_power_per_vcsel", c.max_power_per_vcsel},
                {"dac_bits", c.dac_bits},
                {"adc_bits", c.adc_bits},
                {"crosstalk", c.crosstalk},
                {"fanout_efficiencies", c.fanout_efficiencies},
                {"reference_split", c.reference_split}};
}

void apply(const Json& j, hw::HardwareConfig& c) {
    constexpr std::string_view s = "hardware";
    check_keys(j, s, {"n_inputs", "n_fanout", "clock_rate", "max_power_per_vcsel", "dac_bits",
                      "adc_bits", "crosstalk", "fanout_efficiencies", "reference_split"});
    const std::size_t old_fanout = c.n_fanout;
    read_field(j, s, "n_inputs", c.n_inputs);
    read_field(j, s, "n_fanout", c.n_fanout);
    read_field(j, s, "clock_rate", c.clock_rate);
    read_field(j, s, "max_power_per_vcsel", c.max_power_per_vcsel);
    read_field(j, s, "dac_bits", c.dac_bits);
    read_field(j, s, "adc_bits", c.adc_bits);
    read_field(j, s, "crosstalk", c.crosstalk);
    read_field(j, s, "reference_split", c.reference_split);
    if (j.contains("fanout_efficiencies")) {
        read_field(j, s, "fanout_efficiencies", c.fanout_efficiencies);
    } else if (c.n_fanout != old_fanout) {
        c.fanout_efficiencies.assign(c.n_fanout, 1.0);
    }
    c.validate();
}

Json to_json(const noise::NoiseParams& p) {
    return Json{{"nep", p.nep},
                {"quantum_efficiency", p.quantum_efficiency},
                {"wavelength", p.wavelength},
                {"rin", p.rin},
                {"clock_rate", p.clock_rate},
                {"rin_common_mode", p.rin_common_mode}};
}

void apply(const Json& j, noise::NoiseParams& p) {
    constexpr std::string_view s = "noise";
    check_keys(j, s, {"nep", "quantum_efficiency", "wavelength", "rin", "clock_rate",
                      "rin_common_mode"});
    read_field(j, s, "nep", p.nep);
    read_field(j, s, "quantum_efficiency", p.quantum_efficiency);
    read_field(j, s, "wavelength", p.wavelength);
    read_field(j, s, "rin", p.rin);
    read_field(j, s, "clock_rate", p.clock_rate);
    read_field(j, s, "rin_common_mode", p.rin_common_mode);
    p.validate();
}

Json to_json(const calib::CalibrationOptions& o) {
    return Json{{"grid_knots", o.grid_knots}, {"noise_std", o.noise_std}, {"sweeps", o.sweeps}};
}

void apply(const Json& j, calib::CalibrationOptions& o) {
    constexpr std::string_view s = "calibration";
    check_keys(j, s, {"grid_knots", "noise_std", "sweeps"});
    read_field(j, s, "grid_knots", o.grid_knots);
    read_field(j, s, "noise_std", o.noise_std);
    read_field(j, s, "sweeps", o.sweeps);
    if (o.grid_knots < 2) throw ConfigError("calibration: grid_knots must be >= 2");
    if (!(o.noise_std >= 0.0)) throw ConfigError("calibration: noise_std must be >= 0");
    if (o.sweeps < 1) throw ConfigError("calibration: sweeps must be >= 1");
}

Json to_json(const analysis::EnergyParams& p) {
    return Json{{"laser_power_per_vcsel", p.laser_power_per_vcsel},
                {"dac_energy", p.dac_energy},
                {"slm_power_per_pixel", p.slm_power_per_pixel},
                {"tia_energy", p.tia_energy},
                {"adc_energy", p.adc_energy},
                {"nonlinearity_energy", p.nonlinearity_energy}};
}

void apply(const Json& j, analysis::EnergyParams& p) {
    constexpr std::string_view s = "energy";
    check_keys(j, s, {"laser_power_per_vcsel", "dac_energy", "slm_power_per_pixel", "tia_energy",
                      "adc_energy", "nonlinearity_energy"});
    read_field(j, s, "laser_power_per_vcsel", p.laser_power_per_vcsel);
    read_field(j, s, "dac_energy", p.dac_energy);
    read_field(j, s, "slm_power_per_pixel", p.slm_power_per_pixel);
    read_field(j, s, "tia_energy", p.tia_energy);
    read_field(j, s, "adc_energy", p.adc_energy);
    read_field(j, s, "nonlinearity_energy", p.nonlinearity_energy);
    p.validate();
}

Json to_json(const analysis::GeometryParams& p) {
    return Json{{"focal_length", p.focal_length},
                {"diffraction_angle_per_order", p.diffraction_angle_per_order},
                {"source_pitch", p.source_pitch},
                {"spot_diameter", p.spot_diameter}};
}

void apply(const Json& j, analysis::GeometryParams& p) {
    constexpr std::string_view s = "geometry";
    check_keys(j, s, {"focal_length", "diffraction_angle_per_order", "source_pitch",
                      "spot_diameter"});
    read_field(j, s, "focal_length", p.focal_length);
    read_field(j, s, "diffraction_angle_per_order", p.diffraction_angle_per_order);
    read_field(j, s, "source_pitch", p.source_pitch);
    read_field(j, s, "spot_diameter", p.spot_diameter);
    p.validate();
}

std::string backend_name(data::Backend b) {
    return b == data::Backend::optical ? "optical" : "digital";
}

data::Backend parse_backend(const std::string& name) {
    if (name == "digital") return data::Backend::digital;
    if (name == "optical" || name == "optical-sim") return data::Backend::optical;
    throw ConfigError("unknown backend '" + name + "' (expected digital or optical)");
}

Json to_json(const cnn::TrainConfig& c) {
    Json j{{"learning_rate", c.learning_rate},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"epsilon", c.epsilon},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"backend", backend_name(c.backend)},
           {"noise_sigma", c.noise_sigma},
           {"hardware", to_json(c.optical.hardware)}};
    j["noise"] = c.optical.noise ? to_json(*c.optical.noise) : Json(nullptr);
    return j;
}

void apply(const Json& j, cnn::TrainConfig& c) {
    constexpr std::string_view s = "train";
    check_keys(j, s, {"learning_rate", "beta1", "beta2", "epsilon", "epochs", "batch_size", "seed",
                      "backend", "noise_sigma", "hardware", "noise"});
    read_field(j, s, "learning_rate", c.learning_rate);
    read_field(j, s, "beta1", c.beta1);
    read_field(j, s, "beta2", c.beta2);
    read_field(j, s, "epsilon", c.epsilon);
    read_field(j, s, "epochs", c.epochs);
    read_field(j, s, "batch_size", c.batch_size);
    read_field(j, s, "seed", c.seed);
    read_field(j, s, "noise_sigma", c.noise_sigma);
    if (j.contains("backend")) {
        std::string name;
        read_field(j, s, "backend", name);
        c.backend = parse_backend(name);
    }
    if (j.contains("hardware")) apply(j.at("hardware"), c.optical.hardware);
    if (j.contains("noise")) {
        if (j.at("noise").is_null()) {
            c.optical.noise.reset();
        } else {
            noise::NoiseParams p = c.optical.noise.value_or(noise::NoiseParams{});
            apply(j.at("noise"), p);
            c.optical.noise = p;
        }
    }
    c.validate();
}

}  // namespace fastonn::io
