#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustgen/numerics.hpp"

namespace robustgen {

// A labeled dataset: features row-per-example (n x d), labels 1-based in
// {1, ..., K}. Immutable after construction.
struct Dataset {
    Matrix features;            // n x d
    std::vector<int> labels;    // values in [1, K]
    std::size_t d = 0;
    std::size_t num_classes = 0;
    std::string name;

    std::size_t size() const { return features.rows(); }
    std::span<const double> example(std::size_t i) const { return features.row(i); }

    // Throws InvalidConfigError if labels are out of range, sizes disagree
    // or features contain non-finite entries.
    void validate() const;
};

// Reads an IDX image/label pair (big-endian dims, unsigned bytes).
// Pixels are scaled to [0,1] by dividing by 255; labels become 1-based.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a dataset back to the IDX pair. Features are clamped to [0,1] and
// quantized to bytes (round of value*255); labels revert to 0-based bytes.
// Images are written as rows x cols with rows*cols == d.
void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path,
               std::uint32_t img_rows, std::uint32_t img_cols);

// Synthetic Gaussian classes: class k mean is mean_scale * u_k where the
// u_k are unit directions built from a seed-derived orthonormal set,
// centered so that K=2 gives antipodal directions. Same (seed, params)
// yields a bit-identical dataset.
Dataset synth_gaussian(std::size_t d, std::size_t num_classes, std::size_t n_per_class,
                       double mean_scale, double noise_sigma, std::uint64_t seed);

enum class ResampleDirection { down, up };

// Resolution transforms over side x side images (row-major flattened).
//   down: each disjoint 2x2 patch (a,b,c,d) -> one pixel sqrt(a^2+b^2+c^2+d^2)
//   up:   each pixel a -> a 2x2 patch of a/2
// Both preserve every example's l2 norm exactly; labels are unchanged.
Dataset resample_resolution(const Dataset& ds, ResampleDirection direction, std::size_t side);

// Uniform sample of n examples without replacement, deterministic in seed.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

}  // namespace robustgen
