#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <vector>

#include "common/checkpoint.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/fft.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"

using namespace ranopt;

TEST_CASE("fft matches a direct DFT") {
    for (std::size_t n : {1u, 2u, 8u, 64u}) {
        Rng rng(n);
        std::vector<fft::cplx> x(n);
        for (auto& v : x) v = {uniform_open0(rng) - 0.5, uniform_open0(rng) - 0.5};
        auto y = x;
        fft::transform(y, false);
        for (std::size_t k = 0; k < n; ++k) {
            fft::cplx ref{};
            for (std::size_t t = 0; t < n; ++t)
                ref += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / double(n));
            CHECK(std::abs(ref - y[k]) < 1e-10);
        }
        fft::transform(y, true);
        for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(y[t] - x[t]) < 1e-12);
    }
    CHECK(fft::next_pow2(5) == 8);
    CHECK(fft::next_pow2(8) == 8);
}

TEST_CASE("csv formatting round-trips doubles") {
    for (double v : {0.1, 1.0 / 3.0, 298.0, -1e-300, 6.02e23}) CHECK(std::stod(csv::fmt(v)) == v);
    CHECK(csv::fmt(std::nan("")) == "nan");
}

TEST_CASE("csv write then read") {
    const auto path = (std::filesystem::temp_directory_path() / "ranopt_csv_test.csv").string();
    {
        csv::Writer w(path);
        w.header({"a", "b"});
        w.row({"1", csv::fmt(2.5)});
        w.row({"3", csv::fmt(-4.0)});
    }
    const auto t = csv::read(path);
    CHECK(t.header.size() == 2);
    CHECK(t.numeric("b") == std::vector<double>{2.5, -4.0});
    CHECK_THROWS_AS(t.col("zzz"), Error);
    CHECK_THROWS_AS(csv::read(path + ".missing"), MissingArtifact);
}

TEST_CASE("checkpoint round trip and kind check") {
    const auto path = (std::filesystem::temp_directory_path() / "ranopt_ckpt_test.bin").string();
    Checkpoint ck;
    ck.kind = "demo";
    ck.meta = {{"x", 3}};
    ck.tensors.push_back({"w", 2, 2, {1.0, -2.0, 1e-310, 4.5}});
    ck.tensors.push_back({"b", 1, 1, {0.125}});
    save_checkpoint(path, ck);
    const auto back = load_checkpoint(path, "demo");
    CHECK(back.meta.at("x") == 3);
    CHECK(back.tensor("w").data == ck.tensors[0].data);
    CHECK(back.tensor("b").data[0] == 0.125);
    CHECK_THROWS_AS(load_checkpoint(path, "other"), Error);
    CHECK_THROWS_AS(load_checkpoint(path + ".none", "demo"), MissingArtifact);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("derived seeds differ per tag and repeat per input") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform_open0(r);
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}
