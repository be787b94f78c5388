#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string_view>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastonn/analysis.hpp"
#include "fastonn/calibration.hpp"
#include "fastonn/convnet.hpp"
#include "fastonn/error.hpp"
#include "fastonn/hardware.hpp"
#include "fastonn/noise.hpp"

namespace fastonn::io {

using Json = nlohmann::ordered_json;

// Fixed 17-significant-digit rendering used by every CSV.
std::string format_number(double value);
std::string format_number(std::int64_t value);
inline std::string format_number(std::size_t value) {
    return format_number(static_cast<std::int64_t>(value));
}
inline std::string format_number(int value) { return format_number(static_cast<std::int64_t>(value)); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    void row(const std::vector<std::string>& cells);

    template <typename... T>
    void values(const T&... v) {
        row({format_number(v)...});
    }

    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);

// Throws ConfigError naming the section when j is not an object or holds a
// key outside `allowed`.
void check_keys(const Json& j, std::string_view section,
                std::initializer_list<std::string_view> allowed);

// Reads j[key] into out when present; type mismatches become ConfigError.
template <typename T>
void read_field(const Json& j, std::string_view section, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        it->get_to(out);
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(section) + ": bad value for '" + key + "'");
    }
}

// Config sections. to_json writes every field; apply overwrites the fields
// present in j and rejects unknown keys with ConfigError.
Json to_json(const hw::HardwareConfig& cfg);
void apply(const Json& j, hw::HardwareConfig& cfg);

Json to_json(const noise::NoiseParams& params);
void apply(const Json& j, noise::NoiseParams& params);

Json to_json(const calib::CalibrationOptions& options);
void apply(const Json& j, calib::CalibrationOptions& options);

Json to_json(const analysis::EnergyParams& params);
void apply(const Json& j, analysis::EnergyParams& params);

Json to_json(const analysis::GeometryParams& params);
void apply(const Json& j, analysis::GeometryParams& params);

// Training settings, including the optical hardware and noise sections.
Json to_json(const cnn::TrainConfig& config);
void apply(const Json& j, cnn::TrainConfig& config);

std::string backend_name(data::Backend backend);
data::Backend parse_backend(const std::string& name);

}  // namespace fastonn::io
