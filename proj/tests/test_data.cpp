#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "helpers.hpp"
#include "robustgen/data.hpp"
#include "robustgen/errors.hpp"
#include "robustgen/linear.hpp"

using namespace robustgen;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("/tmp/robustgen_test_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> be32(std::uint32_t v) {
    return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

void append(std::vector<unsigned char>& dst, const std::vector<unsigned char>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

TEST_CASE("load_idx parses a hand-built pair") {
    TempPath img("idx_img"), lab("idx_lab");
    std::vector<unsigned char> ib;
    append(ib, be32(0x00000803));
    append(ib, be32(1));  // one image
    append(ib, be32(2));
    append(ib, be32(2));
    append(ib, {0, 255, 0, 255});
    write_bytes(img.path, ib);

    std::vector<unsigned char> lb;
    append(lb, be32(0x00000801));
    append(lb, be32(1));
    append(lb, {3});
    write_bytes(lab.path, lb);

    const Dataset ds = load_idx(img.path, lab.path);
    CHECK(ds.size() == 1);
    CHECK(ds.d == 4);
    CHECK(ds.example(0)[0] == doctest::Approx(0.0));
    CHECK(ds.example(0)[1] == doctest::Approx(1.0));
    CHECK(ds.example(0)[2] == doctest::Approx(0.0));
    CHECK(ds.example(0)[3] == doctest::Approx(1.0));
    CHECK(ds.labels[0] == 4);  // 1-based
}

TEST_CASE("load_idx rejects a bad label magic without partial output") {
    TempPath img("idx_img2"), lab("idx_lab2");
    std::vector<unsigned char> ib;
    append(ib, be32(0x00000803));
    append(ib, be32(1));
    append(ib, be32(1));
    append(ib, be32(1));
    append(ib, {7});
    write_bytes(img.path, ib);

    std::vector<unsigned char> lb;
    append(lb, be32(0x00000999));
    append(lb, be32(1));
    append(lb, {0});
    write_bytes(lab.path, lb);

    CHECK_THROWS_AS(load_idx(img.path, lab.path), ParseError);
}

TEST_CASE("load_idx reports count mismatch and truncation") {
    TempPath img("idx_img3"), lab("idx_lab3");
    std::vector<unsigned char> ib;
    append(ib, be32(0x00000803));
    append(ib, be32(2));
    append(ib, be32(1));
    append(ib, be32(1));
    append(ib, {7, 8});
    write_bytes(img.path, ib);

    std::vector<unsigned char> lb;
    append(lb, be32(0x00000801));
    append(lb, be32(1));
    append(lb, {0});
    write_bytes(lab.path, lb);
    CHECK_THROWS_AS(load_idx(img.path, lab.path), ParseError);

    std::vector<unsigned char> truncated;
    append(truncated, be32(0x00000803));
    append(truncated, be32(2));
    append(truncated, be32(1));
    append(truncated, be32(1));
    append(truncated, {7});  // one byte missing
    write_bytes(img.path, truncated);
    std::vector<unsigned char> lb2;
    append(lb2, be32(0x00000801));
    append(lb2, be32(2));
    append(lb2, {0, 1});
    write_bytes(lab.path, lb2);
    CHECK_THROWS_AS(load_idx(img.path, lab.path), ParseError);
}

TEST_CASE("IDX write/read round trip is bit exact") {
    Dataset ds;
    ds.d = 4;
    ds.num_classes = 3;
    ds.features = Matrix(5, 4);
    SplitMix64 rng(77);
    for (double& x : ds.features.data())
        x = static_cast<double>(rng.uniform_index(256)) / 255.0;  // byte-valued pixels
    ds.labels = {1, 2, 3, 1, 2};
    ds.name = "roundtrip";

    TempPath img("idx_rt_img"), lab("idx_rt_lab");
    write_idx(ds, img.path, lab.path, 2, 2);
    const Dataset back = load_idx(img.path, lab.path);
    REQUIRE(back.size() == ds.size());
    CHECK(back.labels == ds.labels);
    for (std::size_t i = 0; i < ds.features.size(); ++i)
        CHECK(back.features.data()[i] == ds.features.data()[i]);
}

TEST_CASE("synth_gaussian with zero noise emits the class means") {
    const Dataset ds = synth_gaussian(6, 3, 4, 2.0, 0.0, 9);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto a = ds.example(i);
        const auto b = ds.example((static_cast<std::size_t>(ds.labels[i]) - 1) * 4);
        for (std::size_t j = 0; j < ds.d; ++j) CHECK(a[j] == b[j]);
        CHECK(lp_norm(a, NormExponent::finite(2.0)) == doctest::Approx(2.0));
    }
}

TEST_CASE("synth_gaussian determinism and label histogram") {
    const Dataset a = synth_gaussian(8, 2, 50, 1.0, 0.5, 123);
    const Dataset b = synth_gaussian(8, 2, 50, 1.0, 0.5, 123);
    CHECK(a.features.data() == b.features.data());
    CHECK(a.labels == b.labels);

    std::size_t count1 = 0, count2 = 0;
    for (int y : a.labels) (y == 1 ? count1 : count2)++;
    CHECK(count1 == 50);
    CHECK(count2 == 50);

    const Dataset c = synth_gaussian(8, 2, 50, 1.0, 0.5, 124);
    CHECK(c.features.data() != a.features.data());
}

TEST_CASE("synth_gaussian rejects more classes than dimensions") {
    CHECK_THROWS_AS(synth_gaussian(3, 4, 10, 1.0, 1.0, 1), InvalidConfigError);
}

TEST_CASE("separated synthetic classes train to high natural accuracy") {
    const Dataset train = synth_gaussian(10, 2, 500, 2.0, 1.0, 5);
    const Dataset test = synth_gaussian(10, 2, 500, 2.0, 1.0, 6);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 1;
    const LinearModel model = train_linear(train, cfg).model;
    const LinearMetrics m = eval_linear(model, test, 0.0);
    CHECK(m.natural_error < 0.05);
}

TEST_CASE("resolution transforms match the pinned patches") {
    Dataset ds;
    ds.d = 4;
    ds.num_classes = 1;
    ds.features = Matrix(1, 4);
    ds.features(0, 0) = 3.0;
    ds.features(0, 1) = 4.0;
    ds.labels = {1};
    const Dataset down = resample_resolution(ds, ResampleDirection::down, 2);
    CHECK(down.d == 1);
    CHECK(down.features(0, 0) == doctest::Approx(5.0));

    Dataset one;
    one.d = 1;
    one.num_classes = 1;
    one.features = Matrix(1, 1);
    one.features(0, 0) = 2.0;
    one.labels = {1};
    const Dataset up = resample_resolution(one, ResampleDirection::up, 1);
    CHECK(up.d == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(up.features(0, j) == doctest::Approx(1.0));
    CHECK(lp_norm(up.example(0), NormExponent::finite(2.0)) ==
          doctest::Approx(lp_norm(one.example(0), NormExponent::finite(2.0))));
}

TEST_CASE("resolution transforms preserve every image's l2 norm") {
    Dataset ds;
    ds.d = 64;
    ds.num_classes = 1;
    ds.features = testutil::random_matrix(100, 64, 31, 0.0, 1.0);
    ds.labels.assign(100, 1);

    const Dataset down = resample_resolution(ds, ResampleDirection::down, 8);
    const Dataset up = resample_resolution(ds, ResampleDirection::up, 8);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double base = lp_norm(ds.example(i), NormExponent::finite(2.0));
        CHECK(std::abs(lp_norm(down.example(i), NormExponent::finite(2.0)) - base) <=
              1e-12 * std::max(1.0, base));
        CHECK(std::abs(lp_norm(up.example(i), NormExponent::finite(2.0)) - base) <=
              1e-12 * std::max(1.0, base));
    }
}

TEST_CASE("resolution transform rejects dimension mismatch") {
    Dataset ds;
    ds.d = 5;
    ds.num_classes = 1;
    ds.features = Matrix(1, 5);
    ds.labels = {1};
    CHECK_THROWS_AS(resample_resolution(ds, ResampleDirection::down, 2), InvalidConfigError);
}

TEST_CASE("subsample contracts") {
    const Dataset ds = synth_gaussian(4, 2, 30, 1.0, 0.3, 17);

    const Dataset all = subsample(ds, ds.size(), 1);
    std::vector<double> orig_first_col, sub_first_col;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        orig_first_col.push_back(ds.features(i, 0));
        sub_first_col.push_back(all.features(i, 0));
    }
    std::sort(orig_first_col.begin(), orig_first_col.end());
    std::sort(sub_first_col.begin(), sub_first_col.end());
    CHECK(orig_first_col == sub_first_col);  // a permutation of the full set

    const Dataset a = subsample(ds, 10, 2);
    const Dataset b = subsample(ds, 10, 2);
    CHECK(a.features.data() == b.features.data());
    const Dataset c = subsample(ds, 10, 3);
    CHECK(c.features.data() != a.features.data());

    CHECK_THROWS_AS(subsample(ds, ds.size() + 1, 1), InvalidConfigError);
}
