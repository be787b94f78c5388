#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fastonn/datasets.hpp"
#include "fastonn/hardware.hpp"
#include "fastonn/noise.hpp"

namespace fastonn::cnn {

using data::Backend;

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kKernels = 9;
inline constexpr std::size_t kPatch = 9;       // 3x3
inline constexpr std::size_t kPositions = 100; // 10x10 grid
inline constexpr std::size_t kFeatures = kKernels * kPositions;
inline constexpr std::size_t kClasses = 10;

// Bias-free conv (9 kernels, 3x3, stride 3) + bias-free dense (900 x 10).
struct CnnModel {
    std::vector<double> conv = std::vector<double>(kKernels * kPatch, 0.0);  // kernel-major
    std::vector<double> dense = std::vector<double>(kFeatures * kClasses, 0.0);  // [f * 10 + c]

    // Glorot-uniform initialization; conv weights are then inside [-1, 1].
    static CnnModel glorot(std::uint64_t seed);

    void validate() const;
    double max_abs_conv() const;
};

struct OpticalSettings {
    hw::HardwareConfig hardware = hw::HardwareConfig::with_shape(kPatch, kKernels);
    std::optional<noise::NoiseParams> noise;
};

struct ForwardOptions {
    Backend backend = Backend::digital;
    OpticalSettings optical;
    double noise_sigma = 0.0;  // activation-noise std after ReLU
    std::uint64_t seed = 0;
};

struct ForwardResult {
    std::vector<double> features;       // 900, kernel-major then spatial
    std::vector<double> probabilities;  // 10
    int label = 0;
};

// image: 784 values in [0, 1].
ForwardResult forward(const CnnModel& model, std::span<const double> image,
                      const ForwardOptions& options);

// Patch frames the optical backend feeds to the hardware for one image:
// each nonzero patch divided by its maximum, DAC-quantized.
std::vector<std::vector<double>> optical_frames(std::span<const double> image,
                                                const hw::HardwareConfig& cfg);

// Readout noise for the optical backend, tuned so the conv readout error
// std is error_fraction times the peak readout over the sample images.
hw::OperatingPoint tune_optical_noise(const CnnModel& model, const data::ImageSet& sample,
                                      const hw::HardwareConfig& cfg, noise::NoiseParams base,
                                      double error_fraction);

struct Gradients {
    std::vector<double> conv = std::vector<double>(kKernels * kPatch, 0.0);
    std::vector<double> dense = std::vector<double>(kFeatures * kClasses, 0.0);
};

struct LossGrad {
    double loss = 0.0;  // mean cross-entropy
    std::size_t correct = 0;
    Gradients grads;    // batch mean
};

// Mean cross-entropy and exact gradients. With the optical backend the
// output error comes from the optical forward while every intermediate used
// for backprop comes from the digital forward.
LossGrad loss_and_grads(const CnnModel& model, std::span<const std::vector<double>> images,
                        std::span<const std::uint8_t> labels, const ForwardOptions& options);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    Backend backend = Backend::digital;
    double noise_sigma = 0.0;
    OpticalSettings optical;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean over the epoch's steps
    double train_acc = 0.0;
    double test_acc = 0.0;    // NaN without a test set
};

struct TrainResult {
    CnnModel model;
    std::vector<EpochStats> history;
};

// Throws DomainError on an empty training set.
TrainResult train(CnnModel model, const data::ImageSet& train_set, const data::ImageSet* test_set,
                  const TrainConfig& config);

struct Evaluation {
    double accuracy = 0.0;
    std::array<std::array<std::size_t, kClasses>, kClasses> confusion{};  // [true][predicted]
};

// Image i uses seed derive_seed(options.seed, i).
Evaluation evaluate(const CnnModel& model, const data::ImageSet& set,
                    const ForwardOptions& options);

void save_checkpoint(const std::filesystem::path& path, const CnnModel& model);
CnnModel load_checkpoint(const std::filesystem::path& path);

void write_history_csv(const std::filesystem::path& path, std::span<const EpochStats> history);

}  // namespace fastonn::cnn
