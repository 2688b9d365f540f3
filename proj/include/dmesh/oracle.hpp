#pragma once

#include <chrono>
#include <sstream>

#include "dmesh/probability.hpp"

// Exhaustive reference implementations: exact reduced power cells, exact tau
// by maximizing the signed distance along the dual form, and the previous
// exhaustive-projection method. Used by correctness tests and the benchmark
// CLI; never by the fast path.

namespace dmesh {

template <int D>
ConvexCell<D> exact_reduced_cell(int p, const Simplex& face, const std::vector<WeightedPoint<D>>& pts,
                                 const Box<D>& box = {}) {
    if (!face.contains(p)) throw ContractError("exact_reduced_cell: p not in face");
    ConvexCell<D> cell = make_box_cell<D>(box);
    cell.generator = p;
    for (int q = 0; q < static_cast<int>(pts.size()); ++q) {
        if (face.contains(q)) continue;
        if (norm2(pts[q].position - pts[p].position) == 0.0)
            throw DegeneracyError("exact_reduced_cell: coincident positions");
        cell_add_plane(cell, bisector_plane<D, Real>(pts[p].position, pts[p].weight, pts[q].position,
                                                     pts[q].weight),
                       PlaneSource{p, q, -1});
        if (cell.empty()) break;
    }
    return cell;
}

namespace detail {

struct MaxMinResult {
    Real t = 0;
    Real z = 0;
    bool bounded = true;  // false: the supremum is a limit at infinity
};

// maximize min_i (alpha_i + beta_i t) over t; incremental 2-variable LP with
// a deterministically shuffled insertion order
inline MaxMinResult maximize_min_affine(const std::vector<Real>& alpha, const std::vector<Real>& beta,
                                        std::uint64_t seed) {
    const std::size_t n = alpha.size();
    if (n == 0) return {0.0, std::numeric_limits<Real>::infinity(), false};
    int pos = -1, neg = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (beta[i] > 1e-12 && pos < 0) pos = static_cast<int>(i);
        if (beta[i] < -1e-12 && neg < 0) neg = static_cast<int>(i);
    }
    if (pos < 0 || neg < 0) {
        // one-sided slopes: the supremum is the limit toward the open side,
        // bounded only by the flat constraints
        Real z = std::numeric_limits<Real>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (std::fabs(beta[i]) <= 1e-12) z = std::min(z, alpha[i]);
        return {0.0, z, false};
    }

    Real t = (alpha[neg] - alpha[pos]) / (beta[pos] - beta[neg]);
    Real z = alpha[pos] + beta[pos] * t;

    std::vector<int> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (static_cast<int>(i) != pos && static_cast<int>(i) != neg) order.push_back(static_cast<int>(i));
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<int> done{pos, neg};
    for (int c : order) {
        Real val = alpha[c] + beta[c] * t;
        if (val >= z - 1e-14 * (std::fabs(z) + 1.0)) {
            z = std::min(z, val);
            done.push_back(c);
            continue;
        }
        // optimum moves onto constraint c
        Real lo = -std::numeric_limits<Real>::infinity();
        Real hi = std::numeric_limits<Real>::infinity();
        for (int j : done) {
            Real d = beta[c] - beta[j];
            Real r = alpha[j] - alpha[c];
            if (std::fabs(d) < 1e-15) continue;
            Real bound = r / d;
            if (d > 0)
                hi = std::min(hi, bound);
            else
                lo = std::max(lo, bound);
        }
        if (lo > hi) {  // numerical corner: settle for the midpoint
            Real mid = 0.5 * (lo + hi);
            t = std::isfinite(mid) ? mid : t;
        } else if (beta[c] > 0) {
            t = std::isfinite(hi) ? hi : t;
        } else if (beta[c] < 0) {
            t = std::isfinite(lo) ? lo : t;
        } else {
            t = std::clamp(t, lo, hi);
        }
        z = alpha[c] + beta[c] * t;
        for (int j : done) z = std::min(z, alpha[j] + beta[j] * t);
        done.push_back(c);
    }
    return {t, z, true};
}

// All reduced-cell plane distances along the dual line as affine functions
// of the parameter. No box planes: tau is capped at the domain scale by the
// caller instead of clipped.
template <int D>
void reduced_affine_profile(int p, const Simplex& face, const std::vector<WeightedPoint<D>>& pts,
                            const DualForm<D>& line, std::vector<Real>& alpha, std::vector<Real>& beta) {
    alpha.clear();
    beta.clear();
    auto add = [&](const HalfPlane<D>& h) {
        Real nn = norm(h.normal);
        alpha.push_back((h.offset - dot(h.normal, line.anchor)) / nn);
        beta.push_back(-dot(h.normal, line.direction) / nn);
    };
    for (int q = 0; q < static_cast<int>(pts.size()); ++q) {
        if (face.contains(q)) continue;
        add(bisector_plane<D, Real>(pts[p].position, pts[p].weight, pts[q].position, pts[q].weight));
    }
}

}  // namespace detail

// Exact tau: the maximum of the signed distance to the exact reduced cell
// over the dual form. Supports k = d-1 (line) and k = d (point). If
// cap_active is given it reports whether the unbounded-cell cap decided the
// value; bound comparisons should skip those.
template <int D>
Real exact_tau(const Simplex& face, int vertex, const std::vector<WeightedPoint<D>>& pts,
               bool* cap_active = nullptr) {
    if (!face.contains(vertex)) throw ContractError("exact_tau: vertex not in face");
    if (cap_active) *cap_active = false;
    Vec<D, Real> pos[D + 1];
    Real w[D + 1];
    for (int i = 0; i < face.size(); ++i) {
        pos[i] = pts[face[i]].position;
        w[i] = pts[face[i]].weight;
    }
    if (face.size() == D + 1) {
        Vec<D, Real> dp = dual_point<D, Real>(pos, w);
        Real best = kTauCap;
        for (int q = 0; q < static_cast<int>(pts.size()); ++q) {
            if (face.contains(q)) continue;
            auto h = bisector_plane<D, Real>(pts[vertex].position, pts[vertex].weight, pts[q].position,
                                             pts[q].weight);
            best = std::min(best, h.inner_distance(dp));
        }
        if (cap_active && best >= kTauCap) *cap_active = true;
        return best;
    }
    if (face.size() != D) throw ContractError("exact_tau: face must be a (d-1)- or d-simplex");
    DualForm<D> line = dual_line<D, Real>(pos, w);
    std::vector<Real> alpha, beta;
    detail::reduced_affine_profile<D>(vertex, face, pts, line, alpha, beta);
    auto res = detail::maximize_min_affine(alpha, beta, 0x5eed5eedULL + vertex);
    if (res.z > kTauCap) {
        if (cap_active) *cap_active = true;
        return kTauCap;
    }
    return res.z;
}

// ---------------------------------------------------------------------------
// Reports

struct OracleFaceRecord {
    Simplex face;
    std::array<Real, 4> exact_tau{};  // per face vertex, size() entries used
    bool exists_exact = false;        // membership in the built WDT
    bool predicted = false;           // method's verdict (Lambda_wdt > 0.5)
    bool sign_agreement = true;
};

struct OracleReport {
    std::vector<OracleFaceRecord> records;
    Real build_ms = 0;
    Real eval_ms = 0;
    int false_positives = 0;
    int false_negatives = 0;
    int existing = 0;

    Real fp_pct() const {
        int non = static_cast<int>(records.size()) - existing;
        return non ? 100.0 * false_positives / non : 0.0;
    }
    Real fn_pct() const { return existing ? 100.0 * false_negatives / existing : 0.0; }
};

// ---------------------------------------------------------------------------
// The previous exhaustive method: one representative sample point on the dual
// form (its intersection with the simplex's affine hull), projected against
// the bisector planes of every other point.

namespace detail {

template <int D>
std::optional<Vec<D, Real>> prior_sample_point(const Simplex& simplex,
                                               const std::vector<WeightedPoint<D>>& pts) {
    Vec<D, Real> pos[D + 1];
    Real w[D + 1];
    for (int i = 0; i < simplex.size(); ++i) {
        pos[i] = pts[simplex[i]].position;
        w[i] = pts[simplex[i]].weight;
    }
    if (simplex.size() == D + 1) return dual_point<D, Real>(pos, w);
    DualForm<D> line = dual_line<D, Real>(pos, w);
    if constexpr (D == 2) {
        // dual line meets the segment's supporting line
        Vec2 u = pos[1] - pos[0];
        Real den = dot(u, line.direction);
        Real num = dot(u, pos[0] - line.anchor);
        // the dual line is orthogonal to the segment: den = u . dir
        if (std::fabs(den) < 1e-15) {
            // orthogonal case: project anchor onto the segment line instead
            return line.anchor;
        }
        return line.anchor + line.direction * (num / den);
    } else {
        Vec3 n = cross(pos[1] - pos[0], pos[2] - pos[0]);
        Real den = dot(n, line.direction);
        if (std::fabs(den) < 1e-15 * norm(n)) return std::nullopt;
        Real t = dot(n, pos[0] - line.anchor) / den;
        return line.anchor + line.direction * t;
    }
}

}  // namespace detail

// Evaluates every query simplex by projecting the single sample point against
// all N bisector planes (plus the box cap). Reproduction target for the
// accuracy/timing comparison; not a correct method for k = d-1.
template <int D>
OracleReport prior_method_eval(const std::vector<Simplex>& queries,
                               const std::vector<WeightedPoint<D>>& pts, const WdtComplex<D>& wdt,
                               const ProbConfig& cfg = {}) {
    OracleReport rep;
    rep.records.resize(queries.size());
    // membership of full-dimensional simplices checked against the cell list
    SimplexSet cell_set;
    if (!queries.empty() && queries[0].size() == D + 1)
        for (const auto& c : wdt.cells) cell_set.insert(Simplex(c.begin(), c.end()));

    auto t0 = std::chrono::steady_clock::now();
    parallel_for(queries.size(), [&](std::size_t lo, std::size_t hi, unsigned) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Simplex& s = queries[i];
            OracleFaceRecord& r = rep.records[i];
            r.face = s;
            r.exists_exact = s.size() == D ? wdt.is_face(s) : cell_set.count(s) != 0;
            auto xs = detail::prior_sample_point<D>(s, pts);
            Real acc = 0;
            for (int vi = 0; vi < s.size(); ++vi) {
                Real tau_est;
                if (!xs) {
                    tau_est = -1.0;
                } else {
                    tau_est = kTauCap;
                    int p = s[vi];
                    for (int q = 0; q < static_cast<int>(pts.size()); ++q) {
                        if (s.contains(q)) continue;
                        auto h = bisector_plane<D, Real>(pts[p].position, pts[p].weight, pts[q].position,
                                                         pts[q].weight);
                        tau_est = std::min(tau_est, h.inner_distance(*xs));
                    }
                }
                acc += sigmoid(tau_est * cfg.alpha_wdt);
            }
            r.predicted = acc / s.size() > 0.5;
        }
    });
    rep.eval_ms = std::chrono::duration<Real, std::milli>(std::chrono::steady_clock::now() - t0).count();

    for (auto& r : rep.records) {
        rep.existing += r.exists_exact;
        rep.false_positives += (!r.exists_exact && r.predicted);
        rep.false_negatives += (r.exists_exact && !r.predicted);
    }
    return rep;
}

// Our kernel on the same queries: fast tau over the precomputed PD.
template <int D>
OracleReport ours_method_eval(const std::vector<Simplex>& queries,
                              const std::vector<WeightedPoint<D>>& pts, const WdtComplex<D>& wdt,
                              const PowerDiagram<D>& pd, const ProbConfig& cfg = {}) {
    OracleReport rep;
    rep.records.resize(queries.size());
    SimplexSet cell_set;
    if (!queries.empty() && queries[0].size() == D + 1)
        for (const auto& c : wdt.cells) cell_set.insert(Simplex(c.begin(), c.end()));

    auto t0 = std::chrono::steady_clock::now();
    if (!queries.empty() && queries[0].size() == D) {
        auto evals = evaluate_faces<D>(queries, pts, wdt, pd, cfg, /*with_grads=*/false);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            rep.records[i].face = queries[i];
            rep.records[i].exists_exact = evals[i].in_wdt;
            rep.records[i].predicted = evals[i].lambda_wdt > 0.5;
        }
    } else {
        parallel_for(queries.size(), [&](std::size_t lo, std::size_t hi, unsigned) {
            for (std::size_t i = lo; i < hi; ++i) {
                const Simplex& s = queries[i];
                rep.records[i].face = s;
                bool exists = cell_set.count(s) != 0;
                rep.records[i].exists_exact = exists;
                Real acc = 0;
                for (int vi = 0; vi < s.size(); ++vi)
                    acc += sigmoid(tau_cell_simplex<D>(s, s[vi], exists, wdt, pd, pts) * cfg.alpha_wdt);
                rep.records[i].predicted = acc / s.size() > 0.5;
            }
        });
    }
    rep.eval_ms = std::chrono::duration<Real, std::milli>(std::chrono::steady_clock::now() - t0).count();

    for (auto& r : rep.records) {
        rep.existing += r.exists_exact;
        rep.false_positives += (!r.exists_exact && r.predicted);
        rep.false_negatives += (r.exists_exact && !r.predicted);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Benchmark harness: random points in the unit box, weights N(0, 1e-3) as in
// the published comparison, equal counts of existing and non-existing query
// simplices.

template <int D>
std::vector<WeightedPoint<D>> bench_points(int n, std::uint64_t seed, Real weight_sigma = 1e-3) {
    Rng rng(seed);
    std::vector<WeightedPoint<D>> pts(n);
    for (auto& p : pts) {
        for (int i = 0; i < D; ++i) p.position[i] = rng.uniform();
        p.weight = rng.normal(0.0, weight_sigma);
        p.real_value = 1.0;
    }
    return pts;
}

// Existing simplices from the WDT, an equal number of non-existing ones from
// near-neighbor combinations.
template <int D>
std::vector<Simplex> bench_queries(int k_order, const std::vector<WeightedPoint<D>>& pts,
                                   const WdtComplex<D>& wdt, std::uint64_t seed) {
    std::vector<Simplex> existing;
    if (k_order == D - 1) {
        existing = wdt.faces;
    } else if (k_order == D) {
        for (const auto& c : wdt.cells) existing.push_back(Simplex(c.begin(), c.end()));
    } else {
        throw ContractError("bench_queries: k must be d-1 or d");
    }

    SimplexSet existing_set(existing.begin(), existing.end());
    std::vector<Vec<D, Real>> pos(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pos[i] = pts[i].position;
    UniformGrid<D> grid(pos);
    std::vector<Simplex> non;
    SimplexSet non_set;
    std::vector<int> nn;
    int knn = 8;
    for (std::size_t p = 0; p < pts.size() && non.size() < existing.size() * 2; ++p) {
        grid.knn(pos[p], knn, static_cast<int>(p), nn);
        int m = static_cast<int>(nn.size());
        auto consider = [&](const Simplex& s) {
            if (existing_set.count(s) || non_set.count(s)) return;
            non_set.insert(s);
            non.push_back(s);
        };
        if (k_order == 1) {
            for (int i = 0; i < m; ++i) consider(Simplex{static_cast<int>(p), nn[i]});
        } else if (k_order == 2) {
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) consider(Simplex{static_cast<int>(p), nn[i], nn[j]});
        } else {
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j)
                    for (int l = j + 1; l < m; ++l)
                        consider(Simplex{static_cast<int>(p), nn[i], nn[j], nn[l]});
        }
    }

    Rng rng(seed);
    rng.shuffle(non);
    std::size_t half = std::min(existing.size(), non.size());
    std::vector<Simplex> queries(existing.begin(), existing.begin() + half);
    queries.insert(queries.end(), non.begin(), non.begin() + half);
    rng.shuffle(queries);
    return queries;
}

struct BenchRow {
    std::string method;
    int d = 0, k = 0, n = 0;
    std::size_t n_queries = 0;
    Real build_ms = 0, eval_ms = 0, fp_pct = 0, fn_pct = 0;
};

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "method,d,k,n,n_queries,build_ms,eval_ms,fp_pct,fn_pct\n";
    for (const auto& r : rows) {
        os << r.method << ',' << r.d << ',' << r.k << ',' << r.n << ',' << r.n_queries << ','
           << r.build_ms << ',' << r.eval_ms << ',' << r.fp_pct << ',' << r.fn_pct << '\n';
    }
    return os.str();
}

template <int D>
std::vector<BenchRow> run_oracle_bench(const std::vector<int>& ns, const std::vector<int>& ks,
                                       std::uint64_t seed, bool run_ours = true, bool run_prior = true,
                                       const ProbConfig& cfg = {}) {
    std::vector<BenchRow> rows;
    for (int n : ns) {
        auto pts = bench_points<D>(n, seed + n);
        auto tb0 = std::chrono::steady_clock::now();
        auto wdt = build_wdt<D>(pts);
        auto tb1 = std::chrono::steady_clock::now();
        auto pd = build_power_diagram<D>(wdt, pts);
        auto tb2 = std::chrono::steady_clock::now();
        Real wdt_ms = std::chrono::duration<Real, std::milli>(tb1 - tb0).count();
        Real pd_ms = std::chrono::duration<Real, std::milli>(tb2 - tb1).count();
        for (int k : ks) {
            auto queries = bench_queries<D>(k, pts, wdt, seed + n * 31 + k);
            if (run_ours) {
                auto rep = ours_method_eval<D>(queries, pts, wdt, pd, cfg);
                rows.push_back({"ours", D, k, n, queries.size(), wdt_ms + pd_ms, rep.eval_ms,
                                rep.fp_pct(), rep.fn_pct()});
            }
            if (run_prior) {
                auto rep = prior_method_eval<D>(queries, pts, wdt, cfg);
                rows.push_back({"prior", D, k, n, queries.size(), wdt_ms, rep.eval_ms, rep.fp_pct(),
                                rep.fn_pct()});
            }
        }
    }
    return rows;
}

}  // namespace dmesh
