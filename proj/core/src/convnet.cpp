#include "fastonn/convnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include "fastonn/error.hpp"
#include "fastonn/io.hpp"
#include "fastonn/parallel.hpp"
#include "fastonn/rng.hpp"

namespace fastonn::cnn {

namespace {

constexpr data::PatchGeometry kGeometry{3, 3, 1};
constexpr char kMagic[4] = {'F', 'O', 'N', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct Trace {
    std::vector<double> patches;   // 100 x 9
    std::vector<double> pre;       // 900 conv outputs before ReLU
    std::vector<double> features;  // 900 after ReLU and activation noise
    std::vector<double> probs;     // 10
};

void check_image(std::span<const double> image) {
    if (image.size() != kImageSide * kImageSide)
        throw DimensionError("cnn: image must hold 28x28 values");
    for (double v : image) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("cnn: pixel outside [0, 1]");
    }
}

hw::OpticalCore make_core(const CnnModel& model, const OpticalSettings& optical) {
    const auto& cfg = optical.hardware;
    if (cfg.n_inputs != kPatch || cfg.n_fanout != kKernels)
        throw ConfigError("cnn: optical backend needs n_inputs = 9 and n_fanout = 9");
    const auto plane = hw::WeightPlane::ideal(kKernels, kPatch, model.conv);
    return hw::OpticalCore(plane, cfg, optical.noise);
}

void conv_digital(const CnnModel& model, const std::vector<double>& patches,
                  std::vector<double>& pre) {
    for (std::size_t k = 0; k < kKernels; ++k) {
        const double* w = &model.conv[k * kPatch];
        for (std::size_t p = 0; p < kPositions; ++p) {
            const double* x = &patches[p * kPatch];
            double acc = 0.0;
            for (std::size_t j = 0; j < kPatch; ++j) acc += w[j] * x[j];
            pre[k * kPositions + p] = acc;
        }
    }
}

// Each patch is normalized by its peak so it spans the DAC range; the scale
// is multiplied back onto the readout.
void conv_optical(const hw::OpticalCore& core, const std::vector<double>& patches, Rng& rng,
                  std::vector<double>& pre) {
    const auto& cfg = core.config();
    std::vector<double> x(kPatch);
    std::vector<double> analog(kKernels);
    std::vector<std::int32_t> codes(kKernels);
    for (std::size_t p = 0; p < kPositions; ++p) {
        const double* patch = &patches[p * kPatch];
        const double scale = *std::max_element(patch, patch + kPatch);
        if (!(scale > 0.0)) {
            for (std::size_t k = 0; k < kKernels; ++k) pre[k * kPositions + p] = 0.0;
            continue;
        }
        for (std::size_t j = 0; j < kPatch; ++j) x[j] = patch[j] / scale;
        const auto frame = hw::encode_input(x, cfg);
        core.run(frame.activations, rng, analog, codes);
        for (std::size_t k = 0; k < kKernels; ++k)
            pre[k * kPositions + p] = scale * core.dequantize(codes[k]);
    }
}

void dense_softmax(const CnnModel& model, const std::vector<double>& features,
                   std::vector<double>& probs) {
    std::array<double, kClasses> logits{};
    for (std::size_t f = 0; f < kFeatures; ++f) {
        const double a = features[f];
        if (a == 0.0) continue;
        const double* w = &model.dense[f * kClasses];
        for (std::size_t c = 0; c < kClasses; ++c) logits[c] += a * w[c];
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    probs.resize(kClasses);
    for (std::size_t c = 0; c < kClasses; ++c) {
        probs[c] = std::exp(logits[c] - top);
        sum += probs[c];
    }
    for (double& p : probs) p /= sum;
    const double check = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (!(std::abs(check - 1.0) <= 1e-6))
        throw InternalError("cnn: softmax probabilities do not sum to 1");
}

Trace run_forward(const CnnModel& model, std::span<const double> image, Backend backend,
                  const hw::OpticalCore* core, double noise_sigma, std::uint64_t seed) {
    check_image(image);
    Trace t;
    t.patches = data::extract_patches(image, kImageSide, kImageSide, kGeometry).values;
    t.pre.resize(kFeatures);
    if (backend == Backend::optical) {
        Rng hw_rng(derive_seed(seed, "hardware-noise"));
        conv_optical(*core, t.patches, hw_rng, t.pre);
    } else {
        conv_digital(model, t.patches, t.pre);
    }
    t.features.resize(kFeatures);
    for (std::size_t i = 0; i < kFeatures; ++i) t.features[i] = std::max(t.pre[i], 0.0);
    if (noise_sigma > 0.0) {
        Rng act_rng(derive_seed(seed, "activation-noise"));
        for (double& a : t.features) a += noise_sigma * act_rng.normal();
    }
    dense_softmax(model, t.features, t.probs);
    return t;
}

int argmax(const std::vector<double>& probs) {
    // max_element returns the first maximum: lowest index wins ties.
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

}  // namespace

// --- Model ---------------------------------------------------------------------

CnnModel CnnModel::glorot(std::uint64_t seed) {
    CnnModel m;
    Rng rng(seed);
    // Conv: fan_in = 3*3*1, fan_out = 3*3*9.
    const double conv_limit = std::sqrt(6.0 / (9.0 + 81.0));
    for (double& w : m.conv) w = conv_limit * (2.0 * rng.uniform() - 1.0);
    const double dense_limit = std::sqrt(6.0 / (static_cast<double>(kFeatures) + kClasses));
    for (double& w : m.dense) w = dense_limit * (2.0 * rng.uniform() - 1.0);
    return m;
}

void CnnModel::validate() const {
    if (conv.size() != kKernels * kPatch) throw DimensionError("CnnModel: conv must hold 81 weights");
    if (dense.size() != kFeatures * kClasses)
        throw DimensionError("CnnModel: dense must hold 9000 weights");
    for (double w : conv)
        if (!std::isfinite(w)) throw DomainError("CnnModel: non-finite conv weight");
    for (double w : dense)
        if (!std::isfinite(w)) throw DomainError("CnnModel: non-finite dense weight");
}

double CnnModel::max_abs_conv() const {
    double m = 0.0;
    for (double w : conv) m = std::max(m, std::abs(w));
    return m;
}

// --- Forward -----------------------------------------------------------------------

ForwardResult forward(const CnnModel& model, std::span<const double> image,
                      const ForwardOptions& options) {
    model.validate();
    std::optional<hw::OpticalCore> core;
    if (options.backend == Backend::optical) core.emplace(make_core(model, options.optical));
    auto t = run_forward(model, image, options.backend, core ? &*core : nullptr,
                         options.noise_sigma, options.seed);
    ForwardResult r;
    r.label = argmax(t.probs);
    r.features = std::move(t.features);
    r.probabilities = std::move(t.probs);
    return r;
}

std::vector<std::vector<double>> optical_frames(std::span<const double> image,
                                                const hw::HardwareConfig& cfg) {
    check_image(image);
    const auto pm = data::extract_patches(image, kImageSide, kImageSide, kGeometry);
    std::vector<std::vector<double>> frames;
    std::vector<double> x(kPatch);
    for (std::size_t p = 0; p < pm.count(); ++p) {
        const auto patch = pm.patch(p);
        const double scale = *std::max_element(patch.begin(), patch.end());
        if (!(scale > 0.0)) continue;
        for (std::size_t j = 0; j < kPatch; ++j) x[j] = patch[j] / scale;
        frames.push_back(hw::encode_input(x, cfg).activations);
    }
    return frames;
}

hw::OperatingPoint tune_optical_noise(const CnnModel& model, const data::ImageSet& sample,
                                      const hw::HardwareConfig& cfg, noise::NoiseParams base,
                                      double error_fraction) {
    model.validate();
    std::vector<std::vector<double>> frames;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        auto f = optical_frames(sample.normalized(i), cfg);
        std::move(f.begin(), f.end(), std::back_inserter(frames));
    }
    const auto plane = hw::WeightPlane::ideal(kKernels, kPatch, model.conv);
    return hw::tune_operating_point(plane, cfg, frames, base, error_fraction);
}

// --- Gradients ---------------------------------------------------------------------

LossGrad loss_and_grads(const CnnModel& model, std::span<const std::vector<double>> images,
                        std::span<const std::uint8_t> labels, const ForwardOptions& options) {
    model.validate();
    if (images.size() != labels.size()) throw DimensionError("loss_and_grads: images != labels");
    if (images.empty()) throw DomainError("loss_and_grads: empty batch");
    for (auto l : labels)
        if (l >= kClasses) throw DomainError("loss_and_grads: label outside [0, 9]");

    std::optional<hw::OpticalCore> core;
    if (options.backend == Backend::optical) core.emplace(make_core(model, options.optical));

    const std::size_t n = images.size();
    std::vector<Gradients> per(n);
    std::vector<double> losses(n);
    std::vector<std::uint8_t> hits(n);

    parallel_for(n, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(i));
        const Trace d = run_forward(model, images[i], Backend::digital, nullptr,
                                    options.noise_sigma, seed);
        std::vector<double> probs = d.probs;
        if (core) {
            probs = run_forward(model, images[i], Backend::optical, &*core, options.noise_sigma,
                                seed)
                        .probs;
        }
        const std::size_t y = labels[i];
        losses[i] = -std::log(std::max(probs[y], std::numeric_limits<double>::min()));
        hits[i] = static_cast<std::size_t>(argmax(probs)) == y ? 1 : 0;

        std::array<double, kClasses> delta{};
        for (std::size_t c = 0; c < kClasses; ++c) delta[c] = probs[c] - (c == y ? 1.0 : 0.0);

        Gradients& g = per[i];
        std::vector<double> dpre(kFeatures, 0.0);
        for (std::size_t f = 0; f < kFeatures; ++f) {
            const double a = d.features[f];
            const double* w = &model.dense[f * kClasses];
            double* gd = &g.dense[f * kClasses];
            double back = 0.0;
            for (std::size_t c = 0; c < kClasses; ++c) {
                gd[c] = a * delta[c];
                back += w[c] * delta[c];
            }
            dpre[f] = d.pre[f] > 0.0 ? back : 0.0;
        }
        for (std::size_t k = 0; k < kKernels; ++k) {
            double* gc = &g.conv[k * kPatch];
            for (std::size_t p = 0; p < kPositions; ++p) {
                const double up = dpre[k * kPositions + p];
                if (up == 0.0) continue;
                const double* x = &d.patches[p * kPatch];
                for (std::size_t j = 0; j < kPatch; ++j) gc[j] += up * x[j];
            }
        }
    });

    LossGrad out;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.loss += losses[i];
        out.correct += hits[i];
        for (std::size_t j = 0; j < out.grads.conv.size(); ++j) out.grads.conv[j] += per[i].conv[j];
        for (std::size_t j = 0; j < out.grads.dense.size(); ++j)
            out.grads.dense[j] += per[i].dense[j];
    }
    out.loss *= inv;
    for (double& v : out.grads.conv) v *= inv;
    for (double& v : out.grads.dense) v *= inv;
    return out;
}

// --- Training ----------------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("train: noise_sigma must be >= 0");
    if (backend == Backend::optical) {
        optical.hardware.validate();
        if (optical.noise) optical.noise->validate();
    }
}

namespace {

struct Adam {
    explicit Adam(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

    void step(std::vector<double>& w, const std::vector<double>& g, const TrainConfig& c,
              double bias1, double bias2) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mh = m[i] / bias1;
            const double vh = v[i] / bias2;
            w[i] -= c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
        }
    }

    std::vector<double> m;
    std::vector<double> v;
};

}  // namespace

TrainResult train(CnnModel model, const data::ImageSet& train_set, const data::ImageSet* test_set,
                  const TrainConfig& config) {
    config.validate();
    model.validate();
    if (train_set.size() == 0) throw DomainError("train: empty training set");
    if (train_set.rows != kImageSide || train_set.cols != kImageSide)
        throw DimensionError("train: images must be 28x28");

    Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
    const std::uint64_t noise_base = derive_seed(config.seed, "hardware-noise");
    const std::uint64_t eval_base = derive_seed(config.seed, "evaluation");

    Adam conv_opt(model.conv.size());
    Adam dense_opt(model.dense.size());
    std::uint64_t step = 0;

    std::vector<std::size_t> order(train_set.size());
    TrainResult result;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<std::vector<double>> images;
            std::vector<std::uint8_t> labels;
            images.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                images.push_back(train_set.normalized(order[i]));
                labels.push_back(train_set.labels[order[i]]);
            }
            ForwardOptions opts;
            opts.backend = config.backend;
            opts.optical = config.optical;
            opts.noise_sigma = config.noise_sigma;
            opts.seed = derive_seed(noise_base, step);
            const LossGrad lg = loss_and_grads(model, images, labels, opts);

            ++step;
            const double t = static_cast<double>(step);
            const double bias1 = 1.0 - std::pow(config.beta1, t);
            const double bias2 = 1.0 - std::pow(config.beta2, t);
            conv_opt.step(model.conv, lg.grads.conv, config, bias1, bias2);
            dense_opt.step(model.dense, lg.grads.dense, config, bias1, bias2);
            for (double& w : model.conv) w = std::clamp(w, -1.0, 1.0);

            loss_sum += lg.loss * static_cast<double>(end - start);
            correct += lg.correct;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.test_acc = std::numeric_limits<double>::quiet_NaN();
        if (test_set && test_set->size() > 0) {
            // Test accuracy uses the training backend without activation noise.
            ForwardOptions eval;
            eval.backend = config.backend;
            eval.optical = config.optical;
            eval.seed = derive_seed(eval_base, static_cast<std::uint64_t>(epoch));
            stats.test_acc = evaluate(model, *test_set, eval).accuracy;
        }
        result.history.push_back(stats);
    }
    result.model = std::move(model);
    return result;
}

Evaluation evaluate(const CnnModel& model, const data::ImageSet& set,
                    const ForwardOptions& options) {
    model.validate();
    if (set.size() == 0) throw DomainError("evaluate: empty dataset");
    std::optional<hw::OpticalCore> core;
    if (options.backend == Backend::optical) core.emplace(make_core(model, options.optical));

    std::vector<int> predicted(set.size());
    parallel_for(set.size(), [&](std::size_t i) {
        const auto image = set.normalized(i);
        const auto t = run_forward(model, image, options.backend, core ? &*core : nullptr,
                                   options.noise_sigma,
                                   derive_seed(options.seed, static_cast<std::uint64_t>(i)));
        predicted[i] = argmax(t.probs);
    });

    Evaluation ev;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const std::size_t y = set.labels[i];
        ev.confusion[y][static_cast<std::size_t>(predicted[i])] += 1;
        hits += static_cast<std::size_t>(predicted[i]) == y ? 1 : 0;
    }
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(set.size());
    return ev;
}

// --- Checkpoints -----------------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& os, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& b, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{b[offset + i]} << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CnnModel& model) {
    model.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(kMagic, 4);
    put_u32(os, kCheckpointVersion);
    for (double w : model.conv) put_f64(os, w);
    for (double w : model.dense) put_f64(os, w);
    if (!os) throw IoError("error writing " + path.string());
}

CnnModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(path.string() + ": not a model checkpoint");
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
    CnnModel m;
    const std::size_t expected = 8 + 8 * (m.conv.size() + m.dense.size());
    if (bytes.size() != expected)
        throw LengthError(path.string() + ": checkpoint has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected));
    std::size_t off = 8;
    for (double& w : m.conv) {
        w = std::bit_cast<double>(get_le(bytes, off, 8));
        off += 8;
    }
    for (double& w : m.dense) {
        w = std::bit_cast<double>(get_le(bytes, off, 8));
        off += 8;
    }
    m.validate();
    return m;
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochStats> history) {
    io::CsvWriter csv(path, {"epoch", "train_loss", "train_acc", "test_acc"});
    for (const auto& h : history) csv.values(h.epoch, h.train_loss, h.train_acc, h.test_acc);
    csv.close();
}

}  // namespace fastonn::cnn
