#pragma once

#include "dmesh/triangulation.hpp"

namespace dmesh {

struct ProbConfig {
    Real alpha_wdt = 1000.0;  // sigmoid sharpness on tau
    Real beta = 100.0;        // softmin sharpness on psi
};

// tau of an unconstrained reduced cell is capped at the domain-box scale;
// the existence branch itself is evaluated without the box so hull faces do
// not pick up spurious negative distances
inline constexpr Real kTauCap = 1.0;
inline constexpr Real kTauClipSpan = 2.0;  // synthetic parameter bound on the dual segment

enum class FaceStatus : std::uint8_t { ok, degenerate };

// Per-face evaluation record. Gradient entries carry d+2 partials per
// contributing point: position, weight, real value.
template <int D>
struct FaceEval {
    Simplex face;
    FaceStatus status = FaceStatus::ok;
    bool in_wdt = false;
    std::array<Real, D> tau{};
    Real lambda_wdt = 0.0;
    Real lambda_real = 0.0;
    Real lambda = 0.0;

    struct GradEntry {
        int point;
        std::array<Real, D + 2> g{};  // [0..D-1] position, [D] weight, [D+1] psi
    };
    std::vector<GradEntry> grads;

    const std::array<Real, D + 2>* grad_for(int point) const {
        for (const auto& e : grads)
            if (e.point == point) return &e.g;
        return nullptr;
    }
};

namespace detail {

// Lazily created tape leaves for the attributes of the points a face's
// evaluation touches. Linear scan: faces touch a few dozen points at most.
template <int D>
class PointVarPool {
public:
    PointVarPool(Tape& tape, const std::vector<WeightedPoint<D>>& pts) : tape_(&tape), pts_(&pts) {}

    struct Entry {
        int point;
        std::array<int, D + 2> ids;
    };

    Vec<D, Var> pos(int p) {
        const Entry& e = touch(p);
        Vec<D, Var> r;
        for (int i = 0; i < D; ++i) r[i] = Var(tape_, e.ids[i], (*pts_)[p].position[i]);
        return r;
    }
    Var weight(int p) {
        const Entry& e = touch(p);
        return Var(tape_, e.ids[D], (*pts_)[p].weight);
    }
    Var psi(int p) {
        const Entry& e = touch(p);
        return Var(tape_, e.ids[D + 1], (*pts_)[p].real_value);
    }

    const std::vector<Entry>& entries() const { return entries_; }

private:
    Tape* tape_;
    const std::vector<WeightedPoint<D>>* pts_;
    std::vector<Entry> entries_;

    const Entry& touch(int p) {
        for (const auto& e : entries_)
            if (e.point == p) return e;
        Entry e;
        e.point = p;
        for (int i = 0; i < D; ++i) e.ids[i] = tape_->leaf((*pts_)[p].position[i]);
        e.ids[D] = tape_->leaf((*pts_)[p].weight);
        e.ids[D + 1] = tape_->leaf((*pts_)[p].real_value);
        entries_.push_back(e);
        return entries_.back();
    }
};

// read-only "pool" so the same replay code evaluates on plain doubles
template <int D>
class PointReadPool {
public:
    explicit PointReadPool(const std::vector<WeightedPoint<D>>& pts) : pts_(&pts) {}
    Vec<D, Real> pos(int p) const { return (*pts_)[p].position; }
    Real weight(int p) const { return (*pts_)[p].weight; }
    Real psi(int p) const { return (*pts_)[p].real_value; }

private:
    const std::vector<WeightedPoint<D>>* pts_;
};

template <int D, class T, class Pool>
HalfPlane<D, T> plane_from_source_t(const PlaneSource& src, Pool& pool, const Box<D>& box) {
    if (src.is_box()) {
        HalfPlane<D> h = box_plane<D>(src.box_plane, box);
        HalfPlane<D, T> r;
        for (int i = 0; i < D; ++i) r.normal[i] = T(h.normal[i]);
        r.offset = T(h.offset);
        return r;
    }
    return bisector_plane<D, T>(pool.pos(src.a), pool.weight(src.a), pool.pos(src.b), pool.weight(src.b));
}

template <int D, class T>
T plane_distance(const HalfPlane<D, T>& h, const Vec<D, T>& x) {
    return (h.offset - dot(h.normal, x)) / norm(h.normal);
}

// The combinatorial skeleton of one tau evaluation, recorded on the double
// pass and replayed on the tape.
template <int D>
struct TauPlan {
    bool exists = false;
    bool submerged_fallback = false;
    bool degenerate_interval = false;
    // existence branch
    PlaneSource clip_lo, clip_hi;  // binding planes of the dual segment
    bool lo_synthetic = false;     // endpoint from the synthetic span bound
    bool hi_synthetic = false;
    Real t_lo = 0, t_hi = 0;       // recorded parameters for synthetic endpoints
    PlaneSource nearest;           // argmin distance plane
    bool cap_active = false;       // no plane closer than the cap
    // non-existence branch
    std::array<PlaneSource, D> vert_a{};  // defining planes of edge endpoint a
    std::array<PlaneSource, D> vert_b{};  // (3D) second endpoint
    bool use_edge = false;                // 3D edge vs 2D vertex
};

template <int D, class T, class Pool>
DualForm<D, T> face_dual_line(const Simplex& face, Pool& pool) {
    Vec<D, T> pos[D];
    T w[D];
    for (int i = 0; i < D; ++i) {
        pos[i] = pool.pos(face[i]);
        w[i] = pool.weight(face[i]);
    }
    return dual_line<D, T>(pos, w);
}

template <int D, class T, class Pool>
Vec<D, T> solve_vertex(const std::array<PlaneSource, D>& srcs, Pool& pool, const Box<D>& box) {
    HalfPlane<D, T> h[D];
    for (int i = 0; i < D; ++i) h[i] = plane_from_source_t<D, T>(srcs[i], pool, box);
    if constexpr (D == 2)
        return solve2<T>(h[0].normal, h[1].normal, h[0].offset, h[1].offset);
    else
        return solve3<T>(h[0].normal, h[1].normal, h[2].normal, h[0].offset, h[1].offset, h[2].offset);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fast tau (lower bound of the exact signed distance, same sign):
//   face in WDT:  tau_pt(v, R~) with v the midpoint of the dual segment and
//                 R~ the power cell of the vertex with the planes against the
//                 other face vertices dropped
//   otherwise:    -d(D, C_p) via vertex (2D) or edge (3D) distances

namespace detail {

// Opponent set for the reduced cell of any vertex of `face`: the union of
// the face vertices' WDT rings minus the face itself. By the hole-boundary
// property of vertex deletion this covers the facets of the true reduced
// cell (up to points that resurface from submersion).
template <int D>
void reduced_opponents(const Simplex& face, const WdtComplex<D>& wdt, std::vector<int>& out) {
    out.clear();
    for (int i = 0; i < face.size(); ++i)
        for (int q : wdt.rings[face[i]])
            if (!face.contains(q)) out.push_back(q);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

// Bisector planes of vertex p against the opponent set. No box planes: the
// existence branch is evaluated unclipped and capped instead.
template <int D>
void reduced_planes(int p, const Simplex& face, const WdtComplex<D>& wdt,
                    const std::vector<WeightedPoint<D>>& pts, std::vector<HalfPlane<D>>& planes,
                    std::vector<PlaneSource>& sources, std::vector<int>& opp_scratch) {
    planes.clear();
    sources.clear();
    reduced_opponents<D>(face, wdt, opp_scratch);
    for (int q : opp_scratch) {
        planes.push_back(bisector_plane<D, Real>(pts[p].position, pts[p].weight, pts[q].position,
                                                 pts[q].weight));
        sources.push_back(PlaneSource{p, q, -1});
    }
}

template <int D>
Real tau_value(const Simplex& face, int vertex, bool exists, const DualForm<D>& line,
               const std::optional<std::pair<Real, Real>>& segment, const WdtComplex<D>& wdt,
               const PowerDiagram<D>& pd, const std::vector<WeightedPoint<D>>& pts, TauPlan<D>& plan,
               std::vector<HalfPlane<D>>& scratch_planes, std::vector<PlaneSource>& scratch_sources,
               std::vector<int>& opp_scratch) {
    plan.exists = exists;
    if (exists) {
        if (!segment) {
            plan.degenerate_interval = true;
            return 0.0;
        }
        Vec<D, Real> v = line.anchor + line.direction * (0.5 * (segment->first + segment->second));
        reduced_planes<D>(vertex, face, wdt, pts, scratch_planes, scratch_sources, opp_scratch);
        Real best = kTauCap;
        plan.cap_active = true;
        for (std::size_t i = 0; i < scratch_planes.size(); ++i) {
            Real d = scratch_planes[i].inner_distance(v);
            if (d < best) {
                best = d;
                plan.nearest = scratch_sources[i];
                plan.cap_active = false;
            }
        }
        return best;
    }

    const ConvexCell<D>& cell = pd.cells[vertex];
    if (cell.empty()) {
        plan.submerged_fallback = true;
        return -point_line_distance<D, Real>(pts[vertex].position, line.anchor, line.direction);
    }
    Real best = std::numeric_limits<Real>::infinity();
    if constexpr (D == 2) {
        int n = static_cast<int>(cell.vertices.size());
        for (int i = 0; i < n; ++i) {
            Real d = point_line_distance<2, Real>(cell.vertices[i], line.anchor, line.direction);
            if (d < best) {
                best = d;
                for (int k = 0; k < 2; ++k) plan.vert_a[k] = cell.sources[cell.vertex_planes[i][k]];
            }
        }
    } else {
        plan.use_edge = true;
        for (const auto& e : cell.edges) {
            Real d = line_segment_distance<3, Real>(line.anchor, line.direction, cell.vertices[e[0]],
                                                    cell.vertices[e[1]]);
            if (d < best) {
                best = d;
                for (int k = 0; k < 3; ++k) {
                    plan.vert_a[k] = cell.sources[cell.vertex_planes[e[0]][k]];
                    plan.vert_b[k] = cell.sources[cell.vertex_planes[e[1]][k]];
                }
            }
        }
    }
    return -best;
}

// replay the recorded plan: T = Var on the tape, T = Real for evaluation
// with frozen combinatorics
template <int D, class T, class Pool>
T tau_replay(const Simplex& face, int vertex, const TauPlan<D>& plan, Pool& pool, const Box<D>& box) {
    if (plan.degenerate_interval) return T(0.0);
    DualForm<D, T> line = face_dual_line<D, T>(face, pool);
    if (plan.exists) {
        if (plan.cap_active) return T(kTauCap);
        T t0(plan.t_lo), t1(plan.t_hi);
        if (!plan.lo_synthetic) {
            auto lo = plane_from_source_t<D, T>(plan.clip_lo, pool, box);
            t0 = (lo.offset - dot(lo.normal, line.anchor)) / dot(lo.normal, line.direction);
        }
        if (!plan.hi_synthetic) {
            auto hi = plane_from_source_t<D, T>(plan.clip_hi, pool, box);
            t1 = (hi.offset - dot(hi.normal, line.anchor)) / dot(hi.normal, line.direction);
        }
        Vec<D, T> v = line.anchor + line.direction * ((t0 + t1) * T(0.5));
        auto near = plane_from_source_t<D, T>(plan.nearest, pool, box);
        return plane_distance<D, T>(near, v);
    }
    if (plan.submerged_fallback) {
        return -point_line_distance<D, T>(pool.pos(vertex), line.anchor, line.direction);
    }
    Vec<D, T> a = solve_vertex<D, T>(plan.vert_a, pool, box);
    if constexpr (D == 2) {
        return -point_line_distance<2, T>(a, line.anchor, line.direction);
    } else {
        Vec<D, T> b = solve_vertex<D, T>(plan.vert_b, pool, box);
        return -line_segment_distance<3, T>(line.anchor, line.direction, a, b);
    }
}

template <int D>
bool face_positions_degenerate(const Simplex& face, const std::vector<WeightedPoint<D>>& pts) {
    if constexpr (D == 2) {
        return norm2(pts[face[1]].position - pts[face[0]].position) < 1e-24;
    } else {
        Vec3 e1 = pts[face[1]].position - pts[face[0]].position;
        Vec3 e2 = pts[face[2]].position - pts[face[0]].position;
        Real scale = std::max(norm2(e1), norm2(e2));
        return scale < 1e-24 || norm2(cross(e1, e2)) < 1e-24 * scale * scale;
    }
}

}  // namespace detail

// softmin of the face's psi values; beta 100 by default
template <int D, class T, class PsiFn>
T softmin_psi(const Simplex& face, Real beta, PsiFn&& psi_of) {
    using std::exp;
    Real m = std::numeric_limits<Real>::infinity();
    for (int i = 0; i < face.size(); ++i) m = std::min(m, value_of(psi_of(face[i])));
    T num(0.0), den(0.0);
    for (int i = 0; i < face.size(); ++i) {
        T p = psi_of(face[i]);
        T k = exp((p - T(m)) * T(-beta));  // shifted for stability; exact by softmax invariance
        num = num + k * p;
        den = den + k;
    }
    return num / den;
}

template <int D>
Real lambda_real(const Simplex& face, const std::vector<WeightedPoint<D>>& pts, Real beta = 100.0) {
    return softmin_psi<D, Real>(face, beta, [&](int p) { return pts[p].real_value; });
}

// The frozen combinatorial skeleton of one face evaluation: which planes
// bind, which cell edge is nearest. Lambda is a smooth function of the point
// attributes given the program.
template <int D>
struct FaceProgram {
    Simplex face;
    bool degenerate = false;
    bool in_wdt = false;
    std::array<detail::TauPlan<D>, D> plans{};
};

template <int D, class T, class Pool>
T lambda_from_program(const FaceProgram<D>& prog, Pool& pool, const Box<D>& box, const ProbConfig& cfg,
                      T* lambda_wdt_out = nullptr, T* lambda_real_out = nullptr) {
    T acc(0.0);
    for (int i = 0; i < D; ++i) {
        T t = detail::tau_replay<D, T>(prog.face, prog.face[i], prog.plans[i], pool, box);
        acc = acc + sigmoid(t * T(cfg.alpha_wdt));
    }
    T lw = acc / T(static_cast<Real>(D));
    T lr = softmin_psi<D, T>(prog.face, cfg.beta, [&](int p) { return pool.psi(p); });
    if (lambda_wdt_out) *lambda_wdt_out = lw;
    if (lambda_real_out) *lambda_real_out = lr;
    return lw * lr;
}



// Builds the frozen program for one face (the double pass), filling tau
// values on the way.
template <int D>
FaceProgram<D> face_program(const Simplex& face, const std::vector<WeightedPoint<D>>& pts,
                            const WdtComplex<D>& wdt, const PowerDiagram<D>& pd,
                            std::array<Real, D>* tau_out = nullptr) {
    FaceProgram<D> prog;
    prog.face = face;
    if (face.size() != D || detail::face_positions_degenerate<D>(face, pts)) {
        prog.degenerate = true;
        return prog;
    }
    prog.in_wdt = wdt.is_face(face);

    Vec<D, Real> pos[D];
    Real w[D];
    for (int i = 0; i < D; ++i) {
        pos[i] = pts[face[i]].position;
        w[i] = pts[face[i]].weight;
    }
    DualForm<D> line = dual_line<D, Real>(pos, w);
    std::optional<std::pair<Real, Real>> segment;
    PlaneSource src_lo, src_hi;
    bool lo_syn = false, hi_syn = false;
    std::vector<HalfPlane<D>> sp;
    std::vector<PlaneSource> ss;
    std::vector<int> opp;
    if (prog.in_wdt) {
        int clip_lo = -1, clip_hi = -1;
        detail::reduced_planes<D>(face[0], face, wdt, pts, sp, ss, opp);
        segment = clip_line_by_planes<D, Real>(line.anchor, line.direction, sp, &clip_lo, &clip_hi);
        if (segment) {
            Real t0 = segment->first, t1 = segment->second;
            if (clip_lo >= 0) src_lo = ss[clip_lo];
            if (clip_hi >= 0) src_hi = ss[clip_hi];
            lo_syn = t0 < -kTauClipSpan || clip_lo < 0;
            hi_syn = t1 > kTauClipSpan || clip_hi < 0;
            if (lo_syn) t0 = std::max(t0, -kTauClipSpan);
            if (hi_syn) t1 = std::min(t1, kTauClipSpan);
            // a segment entirely beyond the span collapses onto its nearest
            // true endpoint, which stays inside the true dual segment
            if (t0 > t1) {
                if (lo_syn) {
                    t0 = t1;
                    src_lo = src_hi;
                    lo_syn = hi_syn;
                } else {
                    t1 = t0;
                    src_hi = src_lo;
                    hi_syn = lo_syn;
                }
            }
            segment = std::make_pair(t0, t1);
        }
    }
    for (int i = 0; i < D; ++i) {
        Real t = detail::tau_value<D>(face, face[i], prog.in_wdt, line, segment, wdt, pd, pts,
                                      prog.plans[i], sp, ss, opp);
        if (tau_out) (*tau_out)[i] = t;
        if (prog.in_wdt && segment) {
            prog.plans[i].clip_lo = src_lo;
            prog.plans[i].clip_hi = src_hi;
            prog.plans[i].lo_synthetic = lo_syn;
            prog.plans[i].hi_synthetic = hi_syn;
            prog.plans[i].t_lo = segment->first;
            prog.plans[i].t_hi = segment->second;
        }
    }
    return prog;
}

// Single-face tau per vertex (value only).
template <int D>
Real tau(const Simplex& face, int vertex, const WdtComplex<D>& wdt, const PowerDiagram<D>& pd,
         const std::vector<WeightedPoint<D>>& pts) {
    if (!face.contains(vertex)) throw ContractError("tau: vertex not in face");
    if (face.size() != D) throw ContractError("tau: face must be a (d-1)-simplex");
    if (detail::face_positions_degenerate<D>(face, pts)) throw DegeneracyError("tau: degenerate face");
    std::array<Real, D> taus{};
    (void)face_program<D>(face, pts, wdt, pd, &taus);
    for (int i = 0; i < D; ++i)
        if (face[i] == vertex) return taus[i];
    throw ContractError("tau: vertex not in face");
}

template <int D>
Real lambda_wdt(const Simplex& face, const WdtComplex<D>& wdt, const PowerDiagram<D>& pd,
                const std::vector<WeightedPoint<D>>& pts, const ProbConfig& cfg = {}) {
    std::array<Real, D> taus{};
    (void)face_program<D>(face, pts, wdt, pd, &taus);
    Real acc = 0;
    for (int i = 0; i < D; ++i) acc += sigmoid(taus[i] * cfg.alpha_wdt);
    return acc / D;
}

// Batch evaluation with analytic gradients. Faces are independent; the batch
// is partitioned across threads with one tape per worker. When `programs` is
// given it receives the per-face frozen combinatorics.
template <int D>
std::vector<FaceEval<D>> evaluate_faces(const std::vector<Simplex>& faces,
                                        const std::vector<WeightedPoint<D>>& pts,
                                        const WdtComplex<D>& wdt, const PowerDiagram<D>& pd,
                                        const ProbConfig& cfg = {}, bool with_grads = true,
                                        std::vector<FaceProgram<D>>* programs = nullptr) {
    std::vector<FaceEval<D>> out(faces.size());
    if (programs) programs->resize(faces.size());
    parallel_for(faces.size(), [&](std::size_t lo, std::size_t hi, unsigned) {
        Tape tape;
        for (std::size_t fi = lo; fi < hi; ++fi) {
            const Simplex& face = faces[fi];
            FaceEval<D>& ev = out[fi];
            ev.face = face;
            FaceProgram<D> prog = face_program<D>(face, pts, wdt, pd, &ev.tau);
            if (programs) (*programs)[fi] = prog;
            if (prog.degenerate) {
                ev.status = FaceStatus::degenerate;
                continue;
            }
            ev.in_wdt = prog.in_wdt;

            if (!with_grads) {
                detail::PointReadPool<D> pool(pts);
                Real lw, lr;
                ev.lambda = lambda_from_program<D, Real>(prog, pool, pd.box, cfg, &lw, &lr);
                ev.lambda_wdt = lw;
                ev.lambda_real = lr;
                continue;
            }

            tape.clear();
            detail::PointVarPool<D> pool(tape, pts);
            Var lw, lr;
            Var lam = lambda_from_program<D, Var>(prog, pool, pd.box, cfg, &lw, &lr);
            tape.backward(lam.id);

            ev.lambda_wdt = lw.v;
            ev.lambda_real = lr.v;
            ev.lambda = lam.v;
            for (const auto& e : pool.entries()) {
                typename FaceEval<D>::GradEntry ge;
                ge.point = e.point;
                bool nonzero = false;
                for (int k = 0; k < D + 2; ++k) {
                    ge.g[k] = tape.adjoint(e.ids[k]);
                    nonzero |= ge.g[k] != 0.0;
                }
                if (nonzero) ev.grads.push_back(ge);
            }
            std::sort(ev.grads.begin(), ev.grads.end(),
                      [](const auto& a, const auto& b) { return a.point < b.point; });
        }
    });
    return out;
}

// tau for full-dimensional simplices (k = d), used by the benchmark paths.
// The dual form is a point: the distance itself on the existence side, the
// negated cell distance otherwise.
template <int D>
Real tau_cell_simplex(const Simplex& simplex, int vertex, bool exists, const WdtComplex<D>& wdt,
                      const PowerDiagram<D>& pd, const std::vector<WeightedPoint<D>>& pts) {
    Vec<D, Real> pos[D + 1];
    Real w[D + 1];
    for (int i = 0; i <= D; ++i) {
        pos[i] = pts[simplex[i]].position;
        w[i] = pts[simplex[i]].weight;
    }
    Vec<D, Real> dp = dual_point<D, Real>(pos, w);
    if (exists) {
        std::vector<HalfPlane<D>> planes;
        std::vector<PlaneSource> sources;
        std::vector<int> opp;
        detail::reduced_planes<D>(vertex, simplex, wdt, pts, planes, sources, opp);
        Real best = kTauCap;
        for (const auto& h : planes) best = std::min(best, h.inner_distance(dp));
        return best;
    }
    const ConvexCell<D>& cell = pd.cells[vertex];
    if (cell.empty()) return -norm(dp - pts[vertex].position);
    Real sd = signed_distance_to_cell<D>(dp, cell);
    return sd >= 0 ? Real(0) : sd;
}

}  // namespace dmesh
