#include <catch2/catch_amalgamated.hpp>

#include "dmesh/oracle.hpp"
#include "dmesh/probability.hpp"

using namespace dmesh;

namespace {

template <int D>
std::vector<WeightedPoint<D>> random_points(int n, std::uint64_t seed, Real wsigma = 1e-3) {
    Rng rng(seed);
    std::vector<WeightedPoint<D>> pts(n);
    for (auto& p : pts) {
        for (int i = 0; i < D; ++i) p.position[i] = rng.uniform(0.05, 0.95);
        p.weight = rng.normal(0.0, wsigma);
        p.real_value = rng.uniform();
    }
    return pts;
}

std::vector<WeightedPoint<2>> equilateral() {
    std::vector<WeightedPoint<2>> pts(3);
    pts[0].position = Vec2(0.3, 0.3);
    pts[1].position = Vec2(0.7, 0.3);
    pts[2].position = Vec2(0.5, 0.3 + 0.4 * std::sqrt(3.0) / 2);
    return pts;
}

}  // namespace

TEST_CASE("tau positive on edges of a single triangle") {
    auto pts = equilateral();
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);
    for (const auto& f : wdt.faces)
        for (int i = 0; i < 2; ++i) {
            Real t = tau<2>(f, f[i], wdt, pd, pts);
            CHECK(t > 0.0);
        }
}

TEST_CASE("tau negative for a blocked pair") {
    // convex kite: the short vertical diagonal wins, the long one is blocked
    std::vector<WeightedPoint<2>> pts(4);
    pts[0].position = Vec2(0.1, 0.5);
    pts[1].position = Vec2(0.9, 0.5);
    pts[2].position = Vec2(0.5, 0.8);
    pts[3].position = Vec2(0.5, 0.2);
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);
    Simplex far{0, 1};
    REQUIRE(!wdt.is_face(far));
    Real t_fast = tau<2>(far, 0, wdt, pd, pts);
    Real t_exact = exact_tau<2>(far, 0, pts);
    CHECK(t_fast < 0.0);
    CHECK(t_exact < 0.0);
    CHECK(t_fast <= t_exact + 1e-12);
}

TEST_CASE("lambda_wdt basics") {
    auto pts = equilateral();
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);
    Simplex edge{0, 1};
    ProbConfig sharp;
    sharp.alpha_wdt = 1e9;  // sigmoid saturation
    CHECK(lambda_wdt<2>(edge, wdt, pd, pts, sharp) == Catch::Approx(1.0));
    ProbConfig mild;
    mild.alpha_wdt = 5.0;
    Real lw = lambda_wdt<2>(edge, wdt, pd, pts, mild);
    CHECK(lw > 0.5);
    CHECK(lw < 1.0);
}

TEST_CASE("lambda_real softmin") {
    std::vector<WeightedPoint<3>> pts(3);
    for (auto& p : pts) p.real_value = 1.0;
    Simplex f{0, 1, 2};
    CHECK(lambda_real<3>(f, pts) == Catch::Approx(1.0));
    for (auto& p : pts) p.real_value = 0.37;
    CHECK(lambda_real<3>(f, pts) == Catch::Approx(0.37));
    pts[2].real_value = 0.0;
    pts[0].real_value = pts[1].real_value = 1.0;
    CHECK(lambda_real<3>(f, pts) < 1e-40);
}

TEST_CASE("sign soundness against the exact oracle, small batch") {
    for (std::uint64_t seed : {1u, 2u}) {
        auto pts = bench_points<2>(200, seed);
        auto wdt = build_wdt<2>(pts);
        auto pd = build_power_diagram<2>(wdt, pts);
        auto queries = bench_queries<2>(1, pts, wdt, seed * 7);
        auto evals = evaluate_faces<2>(queries, pts, wdt, pd, {}, false);
        int bound_misses = 0, bound_checked = 0;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            for (int vi = 0; vi < 2; ++vi) {
                bool capped = false;
                Real ex = exact_tau<2>(queries[i], queries[i][vi], pts, &capped);
                if (std::fabs(ex) < 1e-9) continue;
                Real fast = evals[i].tau[vi];
                INFO("face " << queries[i][0] << "," << queries[i][1] << " vertex " << vi);
                REQUIRE(fast * ex > 0.0);
                if (capped) continue;
                // signed lower bound; the ring approximation can overshoot
                // only when deleting the face resurfaces a hidden point
                bound_checked++;
                bound_misses += !(fast <= ex + 1e-9);
            }
        }
        REQUIRE(bound_checked > 100);
        REQUIRE(bound_misses <= bound_checked / 50);
    }
}

TEST_CASE("exact tau bounds: existing faces") {
    auto pts = bench_points<3>(150, 5);
    auto wdt = build_wdt<3>(pts);
    auto pd = build_power_diagram<3>(wdt, pts);
    int tested = 0, bound_misses = 0;
    for (std::size_t fi = 0; fi < wdt.faces.size() && tested < 60; fi += 7, ++tested) {
        const Simplex& f = wdt.faces[fi];
        for (int vi = 0; vi < 3; ++vi) {
            bool capped = false;
            Real fast = tau<3>(f, f[vi], wdt, pd, pts);
            Real ex = exact_tau<3>(f, f[vi], pts, &capped);
            REQUIRE(fast >= -1e-10);
            REQUIRE(ex >= -1e-10);  // existing face: exact tau nonnegative
            if (capped) continue;
            bound_misses += !(ex >= fast - 1e-9);
        }
    }
    REQUIRE(tested > 0);
    REQUIRE(bound_misses <= 3);
}

TEST_CASE("remark: all per-vertex exact tau share one sign") {
    auto pts = bench_points<2>(120, 9);
    auto wdt = build_wdt<2>(pts);
    auto queries = bench_queries<2>(1, pts, wdt, 3);
    for (const auto& f : queries) {
        Real a = exact_tau<2>(f, f[0], pts);
        Real b = exact_tau<2>(f, f[1], pts);
        if (std::fabs(a) < 1e-9 || std::fabs(b) < 1e-9) continue;
        REQUIRE(a * b > 0.0);
        REQUIRE((a > 0) == wdt.is_face(f));
    }
}

TEST_CASE("evaluate_faces on a single triangle") {
    auto pts = equilateral();
    for (auto& p : pts) p.real_value = 1.0;
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);
    auto evals = evaluate_faces<2>(wdt.faces, pts, wdt, pd);
    REQUIRE(evals.size() == 3);
    for (const auto& ev : evals) {
        CHECK(ev.status == FaceStatus::ok);
        CHECK(ev.lambda > 0.5);
        CHECK(ev.lambda == Catch::Approx(ev.lambda_wdt * ev.lambda_real));
    }

    // zero psi on one vertex kills the edges touching it
    pts[0].real_value = 0.0;
    auto evals2 = evaluate_faces<2>(wdt.faces, pts, wdt, pd);
    for (const auto& ev : evals2) {
        if (ev.face.contains(0))
            CHECK(ev.lambda < 0.5);
        else
            CHECK(ev.lambda > 0.5);
    }
}

TEST_CASE("degenerate faces are reported per entry") {
    auto pts = equilateral();
    pts.push_back(pts[0]);  // nearly coincides with point 0
    pts[3].position[0] += 3e-13;
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);
    std::vector<Simplex> faces = {Simplex{0, 1}, Simplex{0, 3}};
    auto evals = evaluate_faces<2>(faces, pts, wdt, pd);
    CHECK(evals[0].status == FaceStatus::ok);
    CHECK(evals[1].status == FaceStatus::degenerate);
}

TEMPLATE_TEST_CASE_SIG("lambda gradients match finite differences", "", ((int D), D), 2, 3) {
    auto pts = random_points<D>(D == 2 ? 60 : 80, 31, 0.02);
    auto wdt = build_wdt<D>(pts);
    auto pd = build_power_diagram<D>(wdt, pts);
    auto queries = bench_queries<D>(D - 1, pts, wdt, 17);
    queries.resize(std::min<std::size_t>(queries.size(), 40));
    std::vector<FaceProgram<D>> progs;
    auto evals = evaluate_faces<D>(queries, pts, wdt, pd, {}, true, &progs);

    const Real h = 1e-5;
    int checked_grads = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        if (evals[qi].status != FaceStatus::ok) continue;
        for (const auto& ge : evals[qi].grads) {
            for (int attr = 0; attr < D + 2; ++attr) {
                auto perturbed = [&](Real delta) {
                    auto tmp = pts;
                    if (attr < D)
                        tmp[ge.point].position[attr] += delta;
                    else if (attr == D)
                        tmp[ge.point].weight += delta;
                    else
                        tmp[ge.point].real_value += delta;
                    detail::PointReadPool<D> pool(tmp);
                    return lambda_from_program<D, Real>(progs[qi], pool, pd.box, ProbConfig{});
                };
                Real fd = (perturbed(-2 * h) - 8 * perturbed(-h) + 8 * perturbed(h) - perturbed(2 * h)) /
                          (12 * h);
                Real an = ge.g[attr];
                if (std::fabs(fd) < 1e-7) continue;
                INFO("face " << qi << " point " << ge.point << " attr " << attr);
                REQUIRE(an == Catch::Approx(fd).epsilon(1e-4));
                checked_grads++;
            }
        }
    }
    REQUIRE(checked_grads > 100);
}

TEST_CASE("gradient translation invariance") {
    auto pts = random_points<3>(40, 3, 0.02);
    auto wdt = build_wdt<3>(pts);
    auto pd = build_power_diagram<3>(wdt, pts);
    auto evals = evaluate_faces<3>(wdt.faces, pts, wdt, pd);
    for (std::size_t i = 0; i < evals.size(); i += 5) {
        const auto& ev = evals[i];
        if (ev.status != FaceStatus::ok) continue;
        for (int axis = 0; axis < 3; ++axis) {
            Real sum = 0;
            bool box_involved = false;
            for (int vi = 0; vi < 3; ++vi) {
                const auto& plan = FaceProgram<3>{}.plans[0];  // placeholder, see below
                (void)plan;
            }
            // a rigid translation changes nothing unless the box binds
            for (const auto& ge : ev.grads) sum += ge.g[axis];
            // detect box involvement through a probe: translate all points
            auto probe = [&](Real delta) {
                auto tmp = pts;
                for (auto& p : tmp) p.position[axis] += delta;
                std::vector<Simplex> one{ev.face};
                // frozen program from the original state
                std::vector<FaceProgram<3>> progs;
                auto e0 = evaluate_faces<3>(one, pts, wdt, pd, {}, false, &progs);
                detail::PointReadPool<3> pool(tmp);
                return lambda_from_program<3, Real>(progs[0], pool, pd.box, ProbConfig{});
            };
            Real fd = (probe(1e-6) - probe(-1e-6)) / 2e-6;
            box_involved = std::fabs(fd) > 1e-7;
            if (!box_involved) CHECK(std::fabs(sum) < 1e-6);
        }
    }
}

TEST_CASE("lambda_real gradient concentrates on the min vertex") {
    std::vector<WeightedPoint<3>> pts(3);
    pts[0].position = Vec3(0.2, 0.2, 0.2);
    pts[1].position = Vec3(0.8, 0.2, 0.2);
    pts[2].position = Vec3(0.5, 0.8, 0.2);
    pts[0].real_value = 1.0;
    pts[1].real_value = 1.0;
    pts[2].real_value = 0.0;
    Tape tape;
    detail::PointVarPool<3> pool(tape, pts);
    Simplex f{0, 1, 2};
    Var lr = softmin_psi<3, Var>(f, 100.0, [&](int p) { return pool.psi(p); });
    tape.backward(lr.id);
    // adjoint of psi_2 (the zero one) is ~1, others ~0
    Real g2 = 0;
    for (const auto& e : pool.entries())
        if (e.point == 2) g2 = tape.adjoint(e.ids[4]);
    CHECK(g2 == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("prior method: accurate for k=d, half-blind for k=d-1") {
    auto pts = bench_points<2>(1000, 44);
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);

    auto q2 = bench_queries<2>(2, pts, wdt, 5);
    auto prior2 = prior_method_eval<2>(q2, pts, wdt);
    CHECK(prior2.fp_pct() == Catch::Approx(0.0).margin(0.5));
    CHECK(prior2.fn_pct() == Catch::Approx(0.0).margin(1.0));

    auto q1 = bench_queries<2>(1, pts, wdt, 6);
    auto prior1 = prior_method_eval<2>(q1, pts, wdt);
    CHECK(prior1.fn_pct() > 40.0);
    CHECK(prior1.fn_pct() < 60.0);
    CHECK(prior1.fp_pct() == Catch::Approx(0.0).margin(0.5));

    auto ours1 = ours_method_eval<2>(q1, pts, wdt, pd);
    CHECK(ours1.fp_pct() == 0.0);
    CHECK(ours1.fn_pct() < 0.5);
    auto ours2 = ours_method_eval<2>(q2, pts, wdt, pd);
    CHECK(ours2.fp_pct() == 0.0);
    CHECK(ours2.fn_pct() < 0.5);
}

TEST_CASE("exact reduced cell contains the normal power cell") {
    auto pts = bench_points<2>(60, 12);
    auto wdt = build_wdt<2>(pts);
    auto pd = build_power_diagram<2>(wdt, pts);
    int tested = 0;
    for (const auto& f : wdt.faces) {
        if (tested >= 20) break;
        int p = f[0];
        if (pd.cells[p].empty()) continue;
        auto red = exact_reduced_cell<2>(p, f, pts);
        for (const auto& v : pd.cells[p].vertices) {
            for (const auto& h : red.planes) REQUIRE(h.inner_distance(v) > -1e-9);
        }
        tested++;
    }
    REQUIRE(tested == 20);

    // two-point set: the pair's reduced cell is the whole box
    std::vector<WeightedPoint<2>> two(2);
    two[0].position = Vec2(0.4, 0.5);
    two[1].position = Vec2(0.6, 0.5);
    auto red = exact_reduced_cell<2>(0, Simplex{0, 1}, two);
    CHECK(red.vertices.size() == 4);

    // and its exact tau hits the unbounded-cell cap at domain scale
    bool capped = false;
    Real t = exact_tau<2>(Simplex{0, 1}, 0, two, &capped);
    CHECK(t == Catch::Approx(1.0));
    CHECK(capped);
}
