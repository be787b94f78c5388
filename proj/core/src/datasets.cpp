#include "fastonn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "fastonn/error.hpp"
#include "fastonn/rng.hpp"

namespace fastonn::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) throw LengthError("IDX: truncated header");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
    os.write(b, 4);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex_magic(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

}  // namespace

std::span<const std::uint8_t> ImageSet::image(std::size_t i) const {
    return {pixels.data() + i * image_size(), image_size()};
}

std::vector<double> ImageSet::normalized(std::size_t i) const {
    const auto px = image(i);
    std::vector<double> out(px.size());
    std::transform(px.begin(), px.end(), out.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return out;
}

ImageSet ImageSet::subset(std::span<const std::size_t> indices) const {
    ImageSet out;
    out.rows = rows;
    out.cols = cols;
    out.pixels.reserve(indices.size() * image_size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= size()) throw DimensionError("ImageSet::subset: index out of range");
        const auto px = image(i);
        out.pixels.insert(out.pixels.end(), px.begin(), px.end());
        out.labels.push_back(labels[i]);
    }
    return out;
}

ImageSet parse_idx(std::span<const std::uint8_t> image_bytes,
                   std::span<const std::uint8_t> label_bytes) {
    const std::uint32_t image_magic = read_be32(image_bytes, 0);
    if (image_magic != kImageMagic)
        throw FormatError("IDX images: bad magic " + hex_magic(image_magic));
    const std::uint32_t count = read_be32(image_bytes, 4);
    const std::uint32_t rows = read_be32(image_bytes, 8);
    const std::uint32_t cols = read_be32(image_bytes, 12);
    const std::size_t payload = std::size_t{count} * rows * cols;
    if (image_bytes.size() - 16 < payload) {
        std::ostringstream msg;
        msg << "IDX images: expected " << payload << " payload bytes, found "
            << image_bytes.size() - 16;
        throw LengthError(msg.str());
    }

    const std::uint32_t label_magic = read_be32(label_bytes, 0);
    if (label_magic != kLabelMagic)
        throw FormatError("IDX labels: bad magic " + hex_magic(label_magic));
    const std::uint32_t label_count = read_be32(label_bytes, 4);
    if (label_bytes.size() - 8 < label_count) throw LengthError("IDX labels: truncated payload");
    if (label_count != count) {
        std::ostringstream msg;
        msg << "IDX: " << count << " images but " << label_count << " labels";
        throw PairingError(msg.str());
    }

    ImageSet set;
    set.rows = rows;
    set.cols = cols;
    set.pixels.assign(image_bytes.begin() + 16, image_bytes.begin() + 16 + static_cast<long>(payload));
    set.labels.assign(label_bytes.begin() + 8, label_bytes.begin() + 8 + label_count);
    for (std::uint8_t l : set.labels) {
        if (l > 9) throw FormatError("IDX labels: label outside [0, 9]");
    }
    return set;
}

ImageSet load_idx(const std::filesystem::path& images_path,
                  const std::filesystem::path& labels_path) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);
    return parse_idx(images, labels);
}

void write_idx(const ImageSet& set, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot write " + images_path.string());
    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(set.size()));
    write_be32(img, static_cast<std::uint32_t>(set.rows));
    write_be32(img, static_cast<std::uint32_t>(set.cols));
    img.write(reinterpret_cast<const char*>(set.pixels.data()),
              static_cast<std::streamsize>(set.pixels.size()));

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot write " + labels_path.string());
    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(set.size()));
    lab.write(reinterpret_cast<const char*>(set.labels.data()),
              static_cast<std::streamsize>(set.labels.size()));
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count,
                                        std::uint64_t seed) {
    if (count > population) throw DomainError("sample_indices: count exceeds population");
    std::vector<std::size_t> all(population);
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(population - i));
        std::swap(all[i], all[j]);
    }
    all.resize(count);
    return all;
}

// --- Patches -------------------------------------------------------------------

PatchMatrix extract_patches(std::span<const double> image, std::size_t rows, std::size_t cols,
                            PatchGeometry g) {
    if (image.size() != rows * cols) throw DimensionError("extract_patches: image size != rows*cols");
    if (g.kernel == 0 || g.stride == 0) throw GeometryError("extract_patches: zero kernel/stride");
    const std::size_t prow = rows + 2 * g.pad;
    const std::size_t pcol = cols + 2 * g.pad;
    if (prow < g.kernel || pcol < g.kernel || (prow - g.kernel) % g.stride != 0 ||
        (pcol - g.kernel) % g.stride != 0) {
        std::ostringstream msg;
        msg << "extract_patches: kernel " << g.kernel << " / stride " << g.stride
            << " does not tile a " << prow << "x" << pcol << " padded image";
        throw GeometryError(msg.str());
    }

    PatchMatrix pm;
    pm.kernel = g.kernel;
    pm.out_rows = (prow - g.kernel) / g.stride + 1;
    pm.out_cols = (pcol - g.kernel) / g.stride + 1;
    pm.values.assign(pm.count() * pm.width(), 0.0);
    pm.origins.reserve(pm.count());

    for (std::size_t orow = 0; orow < pm.out_rows; ++orow) {
        for (std::size_t ocol = 0; ocol < pm.out_cols; ++ocol) {
            const std::size_t r0 = orow * g.stride;
            const std::size_t c0 = ocol * g.stride;
            const std::size_t p = orow * pm.out_cols + ocol;
            pm.origins.emplace_back(r0, c0);
            double* dst = pm.values.data() + p * pm.width();
            for (std::size_t i = 0; i < g.kernel; ++i) {
                for (std::size_t j = 0; j < g.kernel; ++j) {
                    const std::size_t pr = r0 + i;
                    const std::size_t pc = c0 + j;
                    if (pr < g.pad || pc < g.pad || pr >= rows + g.pad || pc >= cols + g.pad)
                        continue;
                    dst[i * g.kernel + j] = image[(pr - g.pad) * cols + (pc - g.pad)];
                }
            }
        }
    }
    return pm;
}

std::vector<double> assemble_patches(const PatchMatrix& pm, PatchGeometry g) {
    if (g.stride < g.kernel) throw GeometryError("assemble_patches: patches overlap");
    const std::size_t prow = (pm.out_rows - 1) * g.stride + g.kernel;
    const std::size_t pcol = (pm.out_cols - 1) * g.stride + g.kernel;
    std::vector<double> padded(prow * pcol, 0.0);
    for (std::size_t p = 0; p < pm.count(); ++p) {
        const auto [r0, c0] = pm.origins[p];
        const auto patch = pm.patch(p);
        for (std::size_t i = 0; i < g.kernel; ++i)
            for (std::size_t j = 0; j < g.kernel; ++j)
                padded[(r0 + i) * pcol + (c0 + j)] = patch[i * g.kernel + j];
    }
    return padded;
}

// --- Edge detection --------------------------------------------------------------

std::vector<double> edge_kernel() {
    std::vector<double> k(9, -1.0 / 8.0);
    k[4] = 1.0;
    return k;
}

double edge_full_scale() {
    double pos = 0.0;
    double neg = 0.0;
    for (double w : edge_kernel()) (w > 0 ? pos : neg) += std::abs(w);
    return std::max(pos, neg);
}

std::vector<std::vector<double>> edge_frames(std::span<const double> image, std::size_t rows,
                                             std::size_t cols) {
    const auto pm = extract_patches(image, rows, cols, {3, 1, 1});
    std::vector<std::vector<double>> frames(pm.count());
    for (std::size_t p = 0; p < pm.count(); ++p) {
        const auto patch = pm.patch(p);
        frames[p].assign(patch.begin(), patch.end());
    }
    return frames;
}

EdgeResult edge_detect(std::span<const double> image, std::size_t rows, std::size_t cols,
                       const EdgeOptions& options) {
    for (double v : image) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("edge_detect: pixel outside [0, 1]");
    }
    const auto pm = extract_patches(image, rows, cols, {3, 1, 1});
    const auto kernel = edge_kernel();

    EdgeResult res;
    res.rows = rows;
    res.cols = cols;
    res.digital.resize(pm.count());
    for (std::size_t p = 0; p < pm.count(); ++p) {
        const auto patch = pm.patch(p);
        res.digital[p] = std::inner_product(patch.begin(), patch.end(), kernel.begin(), 0.0);
    }

    if (options.backend == Backend::digital) {
        res.response = res.digital;
    } else {
        auto cfg = options.hardware;
        if (cfg.n_inputs != 9 || cfg.n_fanout != 1)
            throw ConfigError("edge_detect: optical backend needs n_inputs = 9, n_fanout = 1");
        const auto plane = hw::WeightPlane::ideal(1, 9, kernel);
        const hw::OpticalCore core(plane, cfg, options.noise);
        Rng rng(options.seed);
        double analog = 0.0;
        std::int32_t code = 0;
        res.response.resize(pm.count());
        for (std::size_t p = 0; p < pm.count(); ++p) {
            const auto frame = hw::encode_input(pm.patch(p), cfg);
            core.run(frame.activations, rng, {&analog, 1}, {&code, 1});
            res.response[p] = core.dequantize(code);
        }
    }

    const double cut = options.threshold * edge_full_scale();
    res.binary.resize(pm.count());
    std::size_t matches = 0;
    for (std::size_t p = 0; p < pm.count(); ++p) {
        res.binary[p] = std::abs(res.response[p]) > cut ? 1 : 0;
        const std::uint8_t ref = std::abs(res.digital[p]) > cut ? 1 : 0;
        matches += res.binary[p] == ref ? 1 : 0;
    }
    res.agreement = static_cast<double>(matches) / static_cast<double>(pm.count());
    return res;
}

// --- PGM -----------------------------------------------------------------------

void write_pgm(const std::filesystem::path& path, std::span<const double> values,
               std::size_t rows, std::size_t cols) {
    if (values.size() != rows * cols) throw DimensionError("write_pgm: size != rows*cols");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << "P5\n" << cols << " " << rows << "\n255\n";
    for (double v : values) {
        const auto byte = static_cast<unsigned char>(std::round(std::clamp(v, 0.0, 1.0) * 255.0));
        os.put(static_cast<char>(byte));
    }
}

std::vector<double> read_pgm(const std::filesystem::path& path, std::size_t& rows,
                             std::size_t& cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") throw FormatError("PGM: unsupported magic " + magic);
    const auto next_token = [&in]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw FormatError("PGM: truncated header");
    };
    cols = std::stoul(next_token());
    rows = std::stoul(next_token());
    const double maxval = std::stod(next_token());
    if (!(maxval > 0 && maxval < 256)) throw FormatError("PGM: only 8-bit images are supported");
    std::vector<double> values(rows * cols);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        for (double& v : values) {
            const int c = in.get();
            if (c == EOF) throw LengthError("PGM: truncated pixel data");
            v = static_cast<double>(c) / maxval;
        }
    } else {
        for (double& v : values) v = std::stod(next_token()) / maxval;
    }
    return values;
}

}  // namespace fastonn::data
