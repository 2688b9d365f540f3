#include <catch2/catch_amalgamated.hpp>

#include "dmesh/autodiff.hpp"
#include "dmesh/core.hpp"

using namespace dmesh;

TEST_CASE("vec arithmetic") {
    Vec3 a(1, 2, 3), b(4, 5, 6);
    CHECK(dot(a, b) == 32.0);
    CHECK(norm2(b - a) == 27.0);
    Vec3 c = cross(Vec3(1, 0, 0), Vec3(0, 1, 0));
    CHECK(c[2] == 1.0);
    CHECK(norm(normalized(b)) == Catch::Approx(1.0));
    CHECK(perp(Vec2(1, 0))[1] == 1.0);
}

TEST_CASE("rng determinism and uniformity") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    double mean = 0;
    int n = 20000;
    for (int i = 0; i < n; ++i) mean += c.uniform();
    mean /= n;
    CHECK(mean == Catch::Approx(0.5).margin(0.02));
    // normal variance sanity
    Rng d(7);
    double var = 0;
    for (int i = 0; i < n; ++i) {
        double x = d.normal(0.0, std::sqrt(1e-3));
        var += x * x;
    }
    var /= n;
    CHECK(var == Catch::Approx(1e-3).epsilon(0.1));
}

TEST_CASE("parallel_for covers the range exactly once") {
    std::vector<int> hits(10000, 0);
    parallel_for(hits.size(), [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t i = b; i < e; ++i) hits[i]++;
    });
    for (int h : hits) REQUIRE(h == 1);
}

TEST_CASE("tape gradients match finite differences") {
    auto f = [](auto x, auto y) {
        using std::sqrt;
        using std::abs;
        auto r = sqrt(x * x + y * y) * sigmoid(x - y) + abs(y) / (x + 2.0);
        return r;
    };
    double x0 = 0.7, y0 = -0.3, h = 1e-6;
    Tape tape;
    Var x = make_var(tape, x0), y = make_var(tape, y0);
    Var z = f(x, y);
    tape.backward(z.id);
    double gx = tape.adjoint(x.id), gy = tape.adjoint(y.id);
    double fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2 * h);
    double fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2 * h);
    CHECK(gx == Catch::Approx(fx).epsilon(1e-6));
    CHECK(gy == Catch::Approx(fy).epsilon(1e-6));
}

TEST_CASE("tape min/max select subgradients") {
    Tape tape;
    Var x = make_var(tape, 2.0), y = make_var(tape, 3.0);
    Var m = min(x, y) * 5.0;
    tape.backward(m.id);
    CHECK(tape.adjoint(x.id) == 5.0);
    CHECK(tape.adjoint(y.id) == 0.0);
}

TEST_CASE("constants do not grow the tape") {
    Tape tape;
    Var x = make_var(tape, 1.0);
    std::size_t before = tape.size();
    Var c = Var(2.0) * Var(3.0);
    CHECK(tape.size() == before);
    Var z = x * c;
    tape.backward(z.id);
    CHECK(tape.adjoint(x.id) == 6.0);
}
