#include "robustgen/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "robustgen/errors.hpp"
#include "robustgen/prng.hpp"

namespace robustgen {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t& offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) throw ParseError(path, offset, "truncated header");
    offset += 4;
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

void Dataset::validate() const {
    if (features.rows() != labels.size())
        throw InvalidConfigError("dataset label count does not match feature rows");
    if (features.cols() != d) throw InvalidConfigError("dataset d does not match feature columns");
    if (!features.all_finite()) throw InvalidConfigError("dataset has non-finite features");
    for (int y : labels) {
        if (y < 1 || static_cast<std::size_t>(y) > num_classes)
            throw InvalidConfigError("dataset label outside [1, K]");
    }
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw ParseError(images_path, 0, "cannot open file");
    std::size_t img_off = 0;
    const std::uint32_t img_magic = read_be32(img, images_path, img_off);
    if (img_magic != kImagesMagic)
        throw ParseError(images_path, 0, "bad magic (expected 0x00000803)");
    const std::uint32_t n_images = read_be32(img, images_path, img_off);
    const std::uint32_t rows = read_be32(img, images_path, img_off);
    const std::uint32_t cols = read_be32(img, images_path, img_off);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw ParseError(labels_path, 0, "cannot open file");
    std::size_t lab_off = 0;
    const std::uint32_t lab_magic = read_be32(lab, labels_path, lab_off);
    if (lab_magic != kLabelsMagic)
        throw ParseError(labels_path, 0, "bad magic (expected 0x00000801)");
    const std::uint32_t n_labels = read_be32(lab, labels_path, lab_off);

    if (n_images != n_labels)
        throw ParseError(labels_path, lab_off,
                         "label count " + std::to_string(n_labels) + " != image count " +
                             std::to_string(n_images));

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset ds;
    ds.d = dim;
    ds.features = Matrix(n_images, dim);
    ds.labels.resize(n_labels);
    ds.name = images_path;

    std::vector<unsigned char> buf(dim);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
        if (static_cast<std::size_t>(img.gcount()) != dim)
            throw ParseError(images_path, img_off, "truncated image payload");
        img_off += dim;
        auto row = ds.features.row(i);
        for (std::size_t j = 0; j < dim; ++j) row[j] = buf[j] / 255.0;
    }

    int max_label = 0;
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        unsigned char y;
        lab.read(reinterpret_cast<char*>(&y), 1);
        if (lab.gcount() != 1) throw ParseError(labels_path, lab_off, "truncated label payload");
        ++lab_off;
        ds.labels[i] = static_cast<int>(y) + 1;  // 1-based classes
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = static_cast<std::size_t>(std::max(max_label, 1));
    ds.validate();
    return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path,
               std::uint32_t img_rows, std::uint32_t img_cols) {
    if (static_cast<std::size_t>(img_rows) * img_cols != ds.d)
        throw InvalidConfigError("write_idx: rows*cols must equal feature dimension");
    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw ParseError(images_path, 0, "cannot open file for writing");
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, img_rows);
    write_be32(img, img_cols);
    std::vector<unsigned char> buf(ds.d);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.example(i);
        for (std::size_t j = 0; j < ds.d; ++j) {
            const double v = std::clamp(row[j], 0.0, 1.0);
            buf[j] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        img.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(ds.d));
    }

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw ParseError(labels_path, 0, "cannot open file for writing");
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (int y : ds.labels) {
        const unsigned char b = static_cast<unsigned char>(y - 1);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
}

namespace {

// K unit directions from a seed: draw K random vectors, orthonormalize,
// then center and renormalize. Centering makes K=2 antipodal (separation
// 2*mean_scale) and K>=3 simplex-like, maximizing pairwise distance.
std::vector<std::vector<double>> class_directions(std::size_t d, std::size_t k, SplitMix64& rng) {
    std::vector<std::vector<double>> basis;
    basis.reserve(k);
    while (basis.size() < k) {
        std::vector<double> v(d);
        for (double& x : v) x = rng.normal();
        for (const auto& b : basis) {
            const double proj = dot(v, b);
            for (std::size_t j = 0; j < d; ++j) v[j] -= proj * b[j];
        }
        const double norm = lp_norm(v, NormExponent::finite(2.0));
        if (norm < 1e-8) continue;  // re-draw on near-degenerate direction
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    if (k == 1) return basis;
    std::vector<double> centroid(d, 0.0);
    for (const auto& b : basis)
        for (std::size_t j = 0; j < d; ++j) centroid[j] += b[j] / static_cast<double>(k);
    for (auto& b : basis) {
        for (std::size_t j = 0; j < d; ++j) b[j] -= centroid[j];
        const double norm = lp_norm(b, NormExponent::finite(2.0));
        for (double& x : b) x /= norm;
    }
    return basis;
}

}  // namespace

Dataset synth_gaussian(std::size_t d, std::size_t num_classes, std::size_t n_per_class,
                       double mean_scale, double noise_sigma, std::uint64_t seed) {
    if (d == 0 || num_classes == 0 || n_per_class == 0)
        throw InvalidConfigError("synth_gaussian: all counts must be positive");
    if (noise_sigma < 0.0) throw InvalidConfigError("synth_gaussian: noise_sigma must be >= 0");
    if (num_classes > d)
        throw InvalidConfigError("synth_gaussian: cannot build " + std::to_string(num_classes) +
                                 " separated directions in dimension " + std::to_string(d));

    SplitMix64 dir_rng(derive_seed(seed, 0));
    const auto directions = class_directions(d, num_classes, dir_rng);

    const std::size_t n = num_classes * n_per_class;
    Dataset ds;
    ds.d = d;
    ds.num_classes = num_classes;
    ds.features = Matrix(n, d);
    ds.labels.resize(n);
    char name[96];
    std::snprintf(name, sizeof(name), "synth(d=%zu,K=%zu,seed=%llu)", d, num_classes,
                  static_cast<unsigned long long>(seed));
    ds.name = name;

    std::size_t idx = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
        SplitMix64 rng(derive_seed(seed, 1 + k));
        for (std::size_t s = 0; s < n_per_class; ++s, ++idx) {
            auto row = ds.features.row(idx);
            for (std::size_t j = 0; j < d; ++j)
                row[j] = mean_scale * directions[k][j] +
                         (noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0);
            ds.labels[idx] = static_cast<int>(k) + 1;
        }
    }
    return ds;
}

Dataset resample_resolution(const Dataset& ds, ResampleDirection direction, std::size_t side) {
    if (side * side != ds.d)
        throw InvalidConfigError("resample_resolution: d must equal side^2");
    if (direction == ResampleDirection::down && side % 2 != 0)
        throw InvalidConfigError("resample_resolution: side must be even for down");

    const std::size_t out_side = direction == ResampleDirection::down ? side / 2 : side * 2;
    const std::size_t out_d = out_side * out_side;

    Dataset out;
    out.d = out_d;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.features = Matrix(ds.size(), out_d);
    out.name = ds.name + (direction == ResampleDirection::down ? "/down" : "/up");

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto src = ds.example(i);
        auto dst = out.features.row(i);
        if (direction == ResampleDirection::down) {
            for (std::size_t r = 0; r < out_side; ++r) {
                for (std::size_t c = 0; c < out_side; ++c) {
                    const double a = src[(2 * r) * side + 2 * c];
                    const double b = src[(2 * r) * side + 2 * c + 1];
                    const double e = src[(2 * r + 1) * side + 2 * c];
                    const double f = src[(2 * r + 1) * side + 2 * c + 1];
                    dst[r * out_side + c] = std::sqrt(a * a + b * b + e * e + f * f);
                }
            }
        } else {
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    const double half = src[r * side + c] / 2.0;
                    dst[(2 * r) * out_side + 2 * c] = half;
                    dst[(2 * r) * out_side + 2 * c + 1] = half;
                    dst[(2 * r + 1) * out_side + 2 * c] = half;
                    dst[(2 * r + 1) * out_side + 2 * c + 1] = half;
                }
            }
        }
    }
    return out;
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.size())
        throw InvalidConfigError("subsample: requested " + std::to_string(n) + " of " +
                                 std::to_string(ds.size()));
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    // Partial Fisher-Yates; the first n slots are the sample.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.uniform_index(ds.size() - i);
        std::swap(idx[i], idx[j]);
    }

    Dataset out;
    out.d = ds.d;
    out.num_classes = ds.num_classes;
    out.features = Matrix(n, ds.d);
    out.labels.resize(n);
    out.name = ds.name + "/sub" + std::to_string(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = ds.example(idx[i]);
        auto dst = out.features.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        out.labels[i] = ds.labels[idx[i]];
    }
    return out;
}

}  // namespace robustgen
