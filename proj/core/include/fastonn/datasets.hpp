#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fastonn/hardware.hpp"
#include "fastonn/noise.hpp"

namespace fastonn::data {

// Grayscale images with integer labels, stored as raw bytes.
struct ImageSet {
    std::size_t rows = 28;
    std::size_t cols = 28;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, image-major
    std::vector<std::uint8_t> labels;  // count, each in [0, 9]

    std::size_t size() const { return labels.size(); }
    std::size_t image_size() const { return rows * cols; }
    std::span<const std::uint8_t> image(std::size_t i) const;

    // Pixels of image i scaled to [0, 1].
    std::vector<double> normalized(std::size_t i) const;

    // New set holding the given indices, in order.
    ImageSet subset(std::span<const std::size_t> indices) const;
};

ImageSet load_idx(const std::filesystem::path& images_path,
                  const std::filesystem::path& labels_path);

void write_idx(const ImageSet& set, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

// Parses in-memory IDX payloads (same checks as load_idx).
ImageSet parse_idx(std::span<const std::uint8_t> image_bytes,
                   std::span<const std::uint8_t> label_bytes);

// Draws `count` distinct indices from [0, population) deterministically.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count,
                                        std::uint64_t seed);

// Flattened kernel x kernel patches, one row per output position.
struct PatchMatrix {
    std::size_t kernel = 3;
    std::size_t out_rows = 0;
    std::size_t out_cols = 0;
    std::vector<double> values;  // (out_rows*out_cols) x kernel^2, row-major
    std::vector<std::pair<std::size_t, std::size_t>> origins;  // padded-image coords

    std::size_t count() const { return out_rows * out_cols; }
    std::size_t width() const { return kernel * kernel; }
    std::span<const double> patch(std::size_t p) const {
        return {values.data() + p * width(), width()};
    }
};

struct PatchGeometry {
    std::size_t kernel = 3;
    std::size_t stride = 3;
    std::size_t pad = 1;
};

// Zero-pads then tiles. Throws GeometryError unless (H + 2*pad - kernel)
// and the width equivalent are multiples of stride.
PatchMatrix extract_patches(std::span<const double> image, std::size_t rows, std::size_t cols,
                            PatchGeometry geometry = {});

// Inverse of a non-overlapping extract_patches: the padded image.
std::vector<double> assemble_patches(const PatchMatrix& patches, PatchGeometry geometry);

// --- Edge detection -------------------------------------------------------------

// 3x3 Laplacian (-1 ring, +8 centre) scaled by 1/8.
std::vector<double> edge_kernel();

enum class Backend { digital, optical };

struct EdgeOptions {
    Backend backend = Backend::digital;
    hw::HardwareConfig hardware = hw::HardwareConfig::with_shape(9, 1);
    std::optional<noise::NoiseParams> noise;
    std::uint64_t seed = 0;
    double threshold = 0.2;  // fraction of the kernel's output full scale
};

struct EdgeResult {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> response;        // signed kernel output
    std::vector<double> digital;         // oracle response
    std::vector<std::uint8_t> binary;    // |response| > threshold * full scale
    double agreement = 0.0;              // fraction of binary pixels matching the oracle's
};

// Output full scale of the edge kernel on [0, 1] inputs.
double edge_full_scale();

// Stride 1, zero pad 1. The optical backend routes every patch through the
// hardware model (one fanout copy, N = 9).
EdgeResult edge_detect(std::span<const double> image, std::size_t rows, std::size_t cols,
                       const EdgeOptions& options);

// All-stride-1 patches of an image, as hardware frames.
std::vector<std::vector<double>> edge_frames(std::span<const double> image, std::size_t rows,
                                             std::size_t cols);

// Binary PGM (P5, maxval 255); values are clamped to [0, 1] and scaled.
void write_pgm(const std::filesystem::path& path, std::span<const double> values,
               std::size_t rows, std::size_t cols);

// Reads a P5 (binary) or P2 (ASCII) PGM as values in [0, 1].
std::vector<double> read_pgm(const std::filesystem::path& path, std::size_t& rows,
                             std::size_t& cols);

}  // namespace fastonn::data
