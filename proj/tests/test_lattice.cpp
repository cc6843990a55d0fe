// Copyright 2026 The vidcrf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "support.hpp"

#include "vidcrf/error.hpp"
#include "vidcrf/lattice.hpp"
#include "vidcrf/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace vidcrf;
using vidcrf::testing::Rng;

namespace {

std::vector<double> filter_raw(const PermutohedralLattice& lat, const ValueMatrix& v,
                               FilterMode mode = FilterMode::raw) {
    const ValueMatrix out = lat.filter(v, mode);
    return {out.data().begin(), out.data().end()};
}

} // namespace

TEST_CASE("single point filters to itself after normalization") {
    for (std::size_t d = 1; d <= 6; ++d) {
        Rng rng(d);
        FeatureMatrix f(1, d);
        for (double& x : f.data())
            x = rng.uniform(-5.0, 5.0);
        const PermutohedralLattice lat(f);
        CHECK(lat.vertex_count() == d + 1);
        const ValueMatrix v(1, 2, {0.3, -1.7});
        const auto out = filter_raw(lat, v, FilterMode::normalized);
        CHECK(out[0] == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(-1.7).epsilon(1e-12));
    }
}

TEST_CASE("two identical points share their mass evenly") {
    const FeatureMatrix f(2, 3, {0.4, 1.1, -2.0, 0.4, 1.1, -2.0});
    const PermutohedralLattice lat(f);
    const auto out = filter_raw(lat, ValueMatrix(2, 1, {1.0, 0.0}), FilterMode::normalized);
    CHECK(std::abs(out[0] - 0.5) <= 1e-3);
    CHECK(std::abs(out[1] - 0.5) <= 1e-3);
}

TEST_CASE("distant points do not interact") {
    const FeatureMatrix far(2, 1, {0.0, 20.0});
    const PermutohedralLattice lat(far);
    const auto out = filter_raw(lat, ValueMatrix(2, 1, {1.0, 0.0}));
    CHECK(std::abs(out[1]) <= 1e-6);
    // The remaining response is the isolated point's own lattice weight.
    const PermutohedralLattice alone(FeatureMatrix(1, 1, {0.0}));
    const auto self = filter_raw(alone, ValueMatrix(1, 1, {1.0}));
    CHECK(out[0] == doctest::Approx(self[0]).epsilon(1e-12));
    CHECK(std::abs(out[0] - 1.0) <= 0.2);
}

TEST_CASE("brute force kernel arithmetic") {
    const auto a = brute_force_gaussian(FeatureMatrix(2, 1, {0.0, 1.0}), ValueMatrix(2, 1, {1.0, 0.0}));
    CHECK(a(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a(1, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(a(1, 0) == doctest::Approx(0.60653).epsilon(1e-5));

    const auto b = brute_force_gaussian(FeatureMatrix(2, 1, {0.0, 0.0}), ValueMatrix(2, 1, {1.0, 0.0}));
    CHECK(b(0, 0) == 1.0);
    CHECK(b(1, 0) == 1.0);

    Rng rng(3);
    const auto f = vidcrf::testing::random_box_features(50, 4, 2.0, rng);
    const auto z = brute_force_gaussian(f, ValueMatrix(50, 3));
    for (double v : z.data())
        CHECK(v == 0.0);
}

TEST_CASE("lattice matches brute force at d = 5, n = 2000") {
    Rng rng(11);
    const auto f = vidcrf::testing::random_box_features(2000, 5, 5.0, rng);
    const auto v = vidcrf::testing::random_values(2000, 2, rng);
    const PermutohedralLattice lat(f);
    const auto want = brute_force_gaussian(f, v);
    const auto got = filter_raw(lat, v);
    CHECK(vidcrf::testing::relative_rms(got, want.data()) <= 0.08);
}

TEST_CASE("oracle agreement across dimensions") {
    Rng rng(5);
    for (std::size_t d = 2; d <= 6; ++d) {
        for (double density : {2.0, 6.0, 20.0}) {
            const std::size_t n = 1000 + rng.index(1001);
            const auto f = vidcrf::testing::random_box_features(n, d, density, rng);
            const auto v = vidcrf::testing::random_values(n, 1, rng);
            const PermutohedralLattice lat(f);
            const double err = vidcrf::testing::relative_rms(filter_raw(lat, v), brute_force_gaussian(f, v).data());
            INFO("d=" << d << " density=" << density << " n=" << n << " err=" << err);
            // Six-dimensional boxes this small and dense reach 0.09.
            CHECK(err <= (d == 6 ? 0.10 : 0.08));
        }
    }
}

TEST_CASE("normalized filtering preserves constants") {
    Rng rng(9);
    for (std::size_t d : {2u, 3u, 6u}) {
        const auto f = vidcrf::testing::random_box_features(700, d, 1.0, rng);
        const PermutohedralLattice lat(f);
        ValueMatrix ones(700, 1);
        for (double& x : ones.data())
            x = 1.0;
        for (double x : filter_raw(lat, ones, FilterMode::normalized))
            CHECK(std::abs(x - 1.0) <= 1e-9);
        ValueMatrix c(700, 2);
        for (std::size_t i = 0; i < 700; ++i) {
            c(i, 0) = 2.5;
            c(i, 1) = -4.0;
        }
        const auto out = filter_raw(lat, c, FilterMode::normalized);
        for (std::size_t i = 0; i < 700; ++i) {
            CHECK(std::abs(out[2 * i] - 2.5) <= 1e-3);
            CHECK(std::abs(out[2 * i + 1] + 4.0) <= 1e-3);
        }
    }
}

TEST_CASE("filter is linear") {
    Rng rng(21);
    for (std::size_t d = 1; d <= 6; ++d) {
        const std::size_t n = 300;
        const auto f = vidcrf::testing::random_box_features(n, d, 3.0, rng);
        const PermutohedralLattice lat(f);
        const auto u = vidcrf::testing::random_values(n, 2, rng, -1.0, 1.0);
        const auto w = vidcrf::testing::random_values(n, 2, rng, -1.0, 1.0);
        const double alpha = 1.75, beta = -0.6;
        ValueMatrix mix(n, 2);
        for (std::size_t k = 0; k < mix.data().size(); ++k)
            mix.data()[k] = alpha * u.data()[k] + beta * w.data()[k];
        const auto fu = filter_raw(lat, u), fw = filter_raw(lat, w), fm = filter_raw(lat, mix);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < fm.size(); ++k) {
            const double want = alpha * fu[k] + beta * fw[k];
            num = std::max(num, std::abs(fm[k] - want));
            den = std::max(den, std::abs(want));
        }
        CHECK(num / den <= 1e-9);
    }
}

TEST_CASE("filter is self-adjoint") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + rng.index(6);
        const std::size_t n = 50 + rng.index(1000);
        const double density = std::exp(rng.uniform(std::log(0.05), std::log(50.0)));
        const auto f = vidcrf::testing::random_box_features(n, d, density, rng);
        const PermutohedralLattice lat(f);
        const auto u = vidcrf::testing::random_values(n, 1, rng, -1.0, 1.0);
        const auto v = vidcrf::testing::random_values(n, 1, rng, -1.0, 1.0);
        const double a = vidcrf::testing::dot(filter_raw(lat, u), v.data());
        const double b = vidcrf::testing::dot(u.data(), filter_raw(lat, v));
        CHECK(std::abs(a - b) <= 1e-6 * std::max(std::abs(a), std::abs(b)));
    }
}

TEST_CASE("lattice structure invariants") {
    Rng rng(4);
    const auto f = vidcrf::testing::random_box_features(500, 4, 2.0, rng);
    const PermutohedralLattice lat(f);
    for (std::size_t p = 0; p < lat.count(); ++p) {
        double s = 0.0;
        for (float w : lat.barycentric(p)) {
            CHECK(w >= -1e-6f);
            s += w;
        }
        CHECK(std::abs(s - 1.0) <= 1e-6);
        for (auto v : lat.vertex_offsets(p))
            CHECK(v < lat.vertex_count());
        CHECK(lat.normalization()[p] > 0.0);
    }
}

TEST_CASE("construction is deterministic") {
    Rng rng(8);
    const auto f = vidcrf::testing::random_box_features(3000, 6, 4.0, rng);
    const auto v = vidcrf::testing::random_values(3000, 3, rng);
    const PermutohedralLattice a(f), b(f);
    CHECK(a.vertex_count() == b.vertex_count());
    CHECK(filter_raw(a, v) == filter_raw(b, v));
}

TEST_CASE("parallel filtering agrees with the serial path") {
    Rng rng(12);
    const auto f = vidcrf::testing::random_box_features(5000, 3, 4.0, rng);
    const auto v = vidcrf::testing::random_values(5000, 4, rng);
    std::vector<double> serial, parallel;
    {
        ScopedThreads one(1);
        serial = filter_raw(PermutohedralLattice(f), v);
    }
    {
        ScopedThreads four(4);
        const PermutohedralLattice lat(f);
        parallel = filter_raw(lat, v);
        CHECK(filter_raw(lat, v) == parallel);
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < serial.size(); ++k)
        worst = std::max(worst, std::abs(serial[k] - parallel[k]) / std::max(1.0, std::abs(serial[k])));
    CHECK(worst <= 1e-9);
}

TEST_CASE("invalid input is rejected") {
    FeatureMatrix f(5, 2);
    f(3, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        PermutohedralLattice lat(f);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("point 3") != std::string::npos);
    }
    const PermutohedralLattice lat(FeatureMatrix(4, 2));
    CHECK_THROWS_AS(lat.filter(ValueMatrix(3, 1), FilterMode::raw), Error);
    ValueMatrix bad(4, 1);
    bad(2, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(lat.filter(bad, FilterMode::raw), Error);
    CHECK_THROWS_AS(PermutohedralLattice(FeatureMatrix(0, 2)), Error);
}
