#pragma once

#include <optional>
#include <vector>

#include "dmesh/autodiff.hpp"
#include "dmesh/core.hpp"

namespace dmesh {

// ---------------------------------------------------------------------------
// Weighted points. real_value is the surface-membership attribute psi.

template <int D>
struct WeightedPoint {
    Vec<D, Real> position;
    Real weight = 0.0;
    Real real_value = 1.0;
};

// pi(p, q) = d(p,q)^2 - w_p - w_q; weights grouped so the result is exactly
// symmetric in its arguments
template <int D, class T>
T power_distance(const Vec<D, T>& p, const T& wp, const Vec<D, T>& q, const T& wq) {
    return norm2(q - p) - (wp + wq);
}

template <int D>
Real power_distance(const WeightedPoint<D>& p, const WeightedPoint<D>& q) {
    return power_distance<D, Real>(p.position, p.weight, q.position, q.weight);
}

// ---------------------------------------------------------------------------
// Half plane {x : normal . x <= offset}; the "<=" side is the side of p in a
// bisector between p and q.

template <int D, class T = Real>
struct HalfPlane {
    Vec<D, T> normal;
    T offset{};

    // signed distance to the plane, positive on the inner side
    T inner_distance(const Vec<D, T>& x) const {
        return (offset - dot(normal, x)) / norm(normal);
    }
};

// Where a plane of a power cell came from: a bisector between two points, or
// one of the 2*D domain-box planes. Gradients are re-derived from this.
struct PlaneSource {
    int a = -1, b = -1;  // bisector between points a, b when b >= 0
    int box_plane = -1;  // 0..2D-1 otherwise (axis*2 + side)
    bool is_box() const { return box_plane >= 0; }
};

// locus pi(x,p) = pi(x,q): normal = 2(q-p), offset = |q|^2 - |p|^2 - w_q + w_p
template <int D, class T>
HalfPlane<D, T> bisector_plane(const Vec<D, T>& p, const T& wp, const Vec<D, T>& q, const T& wq) {
    HalfPlane<D, T> h;
    h.normal = (q - p) * T(2.0);
    h.offset = norm2(q) - norm2(p) - wq + wp;
    return h;
}

template <int D>
HalfPlane<D> bisector(const WeightedPoint<D>& p, const WeightedPoint<D>& q) {
    if (norm2(q.position - p.position) == 0.0)
        throw DegeneracyError("bisector: coincident positions");
    return bisector_plane<D, Real>(p.position, p.weight, q.position, q.weight);
}

template <int D>
HalfPlane<D> box_plane(int k, const Box<D>& box = {}) {
    HalfPlane<D> h;
    int axis = k / 2;
    if (k % 2 == 0) {  // lower side: -x_axis <= -lo
        h.normal[axis] = -1.0;
        h.offset = -box.lo[axis];
    } else {  // upper side: x_axis <= hi
        h.normal[axis] = 1.0;
        h.offset = box.hi[axis];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Dual form of a simplex: the set of points power-equidistant to all its
// vertices. A point when k = d, a line when k = d - 1.

template <int D, class T = Real>
struct DualForm {
    bool is_line = false;
    Vec<D, T> anchor;
    Vec<D, T> direction;  // unit; line case only
};

namespace detail {

template <class T>
Vec<2, T> solve2(const Vec<2, T>& r0, const Vec<2, T>& r1, const T& b0, const T& b1) {
    T det = r0[0] * r1[1] - r0[1] * r1[0];
    return Vec<2, T>((b0 * r1[1] - b1 * r0[1]) / det, (r0[0] * b1 - r1[0] * b0) / det);
}

template <class T>
Vec<3, T> solve3(const Vec<3, T>& r0, const Vec<3, T>& r1, const Vec<3, T>& r2, const T& b0,
                 const T& b1, const T& b2) {
    Vec<3, T> c12 = cross(r1, r2);
    T det = dot(r0, c12);
    Vec<3, T> x = c12 * b0 + cross(r2, r0) * b1 + cross(r0, r1) * b2;
    return x / det;
}

}  // namespace detail

// Dual point of a full-dimensional simplex (k = d): solves the d pairwise
// bisector planes against vertex 0.
template <int D, class T>
Vec<D, T> dual_point(const Vec<D, T>* pos, const T* w) {
    if constexpr (D == 2) {
        auto h1 = bisector_plane<2, T>(pos[0], w[0], pos[1], w[1]);
        auto h2 = bisector_plane<2, T>(pos[0], w[0], pos[2], w[2]);
        return detail::solve2(h1.normal, h2.normal, h1.offset, h2.offset);
    } else {
        auto h1 = bisector_plane<3, T>(pos[0], w[0], pos[1], w[1]);
        auto h2 = bisector_plane<3, T>(pos[0], w[0], pos[2], w[2]);
        auto h3 = bisector_plane<3, T>(pos[0], w[0], pos[3], w[3]);
        return detail::solve3(h1.normal, h2.normal, h3.normal, h1.offset, h2.offset, h3.offset);
    }
}

// Dual line of a (d-1)-simplex. Anchored at the projection of the simplex
// centroid onto the intersection of the pairwise bisectors.
template <int D, class T>
DualForm<D, T> dual_line(const Vec<D, T>* pos, const T* w) {
    DualForm<D, T> f;
    f.is_line = true;
    if constexpr (D == 2) {
        auto h = bisector_plane<2, T>(pos[0], w[0], pos[1], w[1]);
        Vec<2, T> c = (pos[0] + pos[1]) * T(0.5);
        T nn = norm2(h.normal);
        f.anchor = c + h.normal * ((h.offset - dot(h.normal, c)) / nn);
        f.direction = normalized(perp(h.normal));
    } else {
        auto h1 = bisector_plane<3, T>(pos[0], w[0], pos[1], w[1]);
        auto h2 = bisector_plane<3, T>(pos[0], w[0], pos[2], w[2]);
        Vec<3, T> dir = cross(h1.normal, h2.normal);
        f.direction = normalized(dir);
        Vec<3, T> c = (pos[0] + pos[1] + pos[2]) / T(3.0);
        // x = c + [n1 n2]^T lambda with N x = off
        T g11 = norm2(h1.normal), g12 = dot(h1.normal, h2.normal), g22 = norm2(h2.normal);
        T r1 = h1.offset - dot(h1.normal, c);
        T r2 = h2.offset - dot(h2.normal, c);
        T det = g11 * g22 - g12 * g12;
        T l1 = (r1 * g22 - r2 * g12) / det;
        T l2 = (g11 * r2 - g12 * r1) / det;
        f.anchor = c + h1.normal * l1 + h2.normal * l2;
    }
    return f;
}

// Generic entry point per the simplex order; throws on affinely dependent
// input. k+1 = number of points, k in {d-1, d}.
template <int D>
DualForm<D> dual_form(const std::vector<WeightedPoint<D>>& pts) {
    int k = static_cast<int>(pts.size()) - 1;
    if (k != D - 1 && k != D) throw ContractError("dual_form: k must be d-1 or d");
    Vec<D, Real> pos[D + 1];
    Real w[D + 1];
    for (int i = 0; i <= k; ++i) {
        pos[i] = pts[i].position;
        w[i] = pts[i].weight;
    }
    // affine independence check at construction scale
    if (k == D) {
        Real scale = 0.0;
        for (int i = 1; i <= k; ++i) scale = std::max(scale, norm2(pos[i] - pos[0]));
        Real vol;
        if constexpr (D == 2)
            vol = (pos[1] - pos[0])[0] * (pos[2] - pos[0])[1] - (pos[1] - pos[0])[1] * (pos[2] - pos[0])[0];
        else
            vol = dot(pos[1] - pos[0], cross(pos[2] - pos[0], pos[3] - pos[0]));
        if (scale == 0.0 || std::fabs(vol) < 1e-14 * std::pow(scale, Real(D) / 2))
            throw DegeneracyError("dual_form: affinely dependent simplex");
        DualForm<D> f;
        f.anchor = dual_point<D, Real>(pos, w);
        return f;
    }
    if constexpr (D == 2) {
        if (norm2(pos[1] - pos[0]) == 0.0) throw DegeneracyError("dual_form: coincident pair");
    } else {
        Vec<3, Real> n = cross(pos[1] - pos[0], pos[2] - pos[0]);
        Real scale = std::max(norm2(pos[1] - pos[0]), norm2(pos[2] - pos[0]));
        if (scale == 0.0 || norm2(n) < 1e-24 * scale * scale)
            throw DegeneracyError("dual_form: collinear triangle");
    }
    return dual_line<D, Real>(pos, w);
}

// ---------------------------------------------------------------------------
// Bounded convex cell as a half-plane intersection, with enough structure
// (vertices, their defining planes, edges) to evaluate distances and to
// replay constructions on the autodiff tape.

template <int D>
struct ConvexCell {
    int generator = -1;
    std::vector<HalfPlane<D>> planes;
    std::vector<PlaneSource> sources;  // parallel to planes

    std::vector<Vec<D, Real>> vertices;
    std::vector<std::array<int, D>> vertex_planes;  // defining plane ids per vertex

    // D == 3: faces as vertex loops per plane, plus the derived edge list
    std::vector<int> face_plane;
    std::vector<std::vector<int>> face_loops;
    std::vector<std::array<int, 2>> edges;

    bool empty() const { return vertices.empty(); }
};

namespace detail {

inline constexpr Real kClipTol = 1e-12;

inline Vec3 perp_any(const Vec3& a) {
    return std::fabs(a[0]) < 0.9 ? normalized(cross(a, Vec3(1, 0, 0))) : normalized(cross(a, Vec3(0, 1, 0)));
}

template <int D>
void rebuild_edges(ConvexCell<D>& cell) {
    if constexpr (D == 3) {
        cell.edges.clear();
        std::vector<std::array<int, 2>> seen;
        for (const auto& loop : cell.face_loops) {
            int n = static_cast<int>(loop.size());
            for (int i = 0; i < n; ++i) {
                int u = loop[i], v = loop[(i + 1) % n];
                std::array<int, 2> e{std::min(u, v), std::max(u, v)};
                seen.push_back(e);
            }
        }
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        cell.edges = std::move(seen);
    }
}

// polygon clip, ring order preserved
inline void clip_cell_2d(ConvexCell<2>& cell, int np) {
    const auto& h = cell.planes[np];
    Real nn = norm(h.normal);
    int n = static_cast<int>(cell.vertices.size());
    if (n == 0) return;
    std::vector<Real> d(n);
    bool any_out = false, any_in = false;
    for (int i = 0; i < n; ++i) {
        d[i] = (h.offset - dot(h.normal, cell.vertices[i])) / nn;
        any_out |= d[i] < -kClipTol;
        any_in |= d[i] > kClipTol;
    }
    if (!any_out) return;
    if (!any_in) {
        cell.vertices.clear();
        cell.vertex_planes.clear();
        return;
    }
    std::vector<Vec2> nv;
    std::vector<std::array<int, 2>> nvp;
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        bool in_i = d[i] >= -kClipTol, in_j = d[j] >= -kClipTol;
        if (in_i) {
            nv.push_back(cell.vertices[i]);
            nvp.push_back(cell.vertex_planes[i]);
        }
        if (in_i != in_j && std::fabs(d[i] - d[j]) > 0.0) {
            Real t = d[i] / (d[i] - d[j]);
            nv.push_back(cell.vertices[i] + (cell.vertices[j] - cell.vertices[i]) * t);
            // the edge from vertex i to i+1 sits on vertex_planes[i][1]; the
            // crossing vertex keeps ring order {edge before, edge after}
            if (in_i)
                nvp.push_back({cell.vertex_planes[i][1], np});
            else
                nvp.push_back({np, cell.vertex_planes[i][1]});
        }
    }
    // drop near-duplicate consecutive vertices from touching cases
    std::vector<Vec2> fv;
    std::vector<std::array<int, 2>> fvp;
    for (std::size_t i = 0; i < nv.size(); ++i) {
        if (!fv.empty() && norm2(nv[i] - fv.back()) < kClipTol * kClipTol) continue;
        fv.push_back(nv[i]);
        fvp.push_back(nvp[i]);
    }
    while (fv.size() > 1 && norm2(fv.front() - fv.back()) < kClipTol * kClipTol) {
        fv.pop_back();
        fvp.pop_back();
    }
    cell.vertices = std::move(fv);
    cell.vertex_planes = std::move(fvp);
    if (cell.vertices.size() < 3) {
        cell.vertices.clear();
        cell.vertex_planes.clear();
    }
}

inline void clip_cell_3d(ConvexCell<3>& cell, int np) {
    const auto& h = cell.planes[np];
    Real nn = norm(h.normal);
    int n = static_cast<int>(cell.vertices.size());
    if (n == 0) return;
    std::vector<Real> d(n);
    bool any_out = false, any_in = false;
    for (int i = 0; i < n; ++i) {
        d[i] = (h.offset - dot(h.normal, cell.vertices[i])) / nn;
        any_out |= d[i] < -kClipTol;
        any_in |= d[i] > kClipTol;
    }
    if (!any_out) return;
    if (!any_in) {
        cell.vertices.clear();
        cell.vertex_planes.clear();
        cell.face_plane.clear();
        cell.face_loops.clear();
        cell.edges.clear();
        return;
    }

    auto inside = [&](int i) { return d[i] >= -kClipTol; };

    std::vector<Vec3> verts = cell.vertices;
    std::vector<std::array<int, 3>> vplanes = cell.vertex_planes;
    // cache crossing vertex per edge so both adjacent faces share it
    std::vector<std::array<int, 3>> cross_edges;  // (u, v, new vertex id)

    auto crossing = [&](int u, int v) -> int {
        int a = std::min(u, v), b = std::max(u, v);
        for (const auto& ce : cross_edges)
            if (ce[0] == a && ce[1] == b) return ce[2];
        Real t = d[u] / (d[u] - d[v]);
        Vec3 x = cell.vertices[u] + (cell.vertices[v] - cell.vertices[u]) * t;
        // shared planes of the edge's endpoints
        std::array<int, 3> pl{np, -1, -1};
        int c = 1;
        for (int pu : cell.vertex_planes[u]) {
            for (int pv : cell.vertex_planes[v])
                if (pu == pv && c < 3) {
                    pl[c++] = pu;
                    break;
                }
        }
        verts.push_back(x);
        vplanes.push_back(pl);
        int id = static_cast<int>(verts.size()) - 1;
        cross_edges.push_back({a, b, id});
        return id;
    };

    std::vector<int> nface_plane;
    std::vector<std::vector<int>> nface_loops;
    std::vector<int> cut_verts;

    for (std::size_t f = 0; f < cell.face_loops.size(); ++f) {
        const auto& loop = cell.face_loops[f];
        int m = static_cast<int>(loop.size());
        std::vector<int> nl;
        for (int i = 0; i < m; ++i) {
            int u = loop[i], v = loop[(i + 1) % m];
            if (inside(u)) nl.push_back(u);
            if (inside(u) != inside(v)) {
                int c = crossing(u, v);
                nl.push_back(c);
                cut_verts.push_back(c);
            }
        }
        // dedup consecutive
        std::vector<int> clean;
        for (int id : nl)
            if (clean.empty() || clean.back() != id) clean.push_back(id);
        while (clean.size() > 1 && clean.front() == clean.back()) clean.pop_back();
        if (clean.size() >= 3) {
            nface_plane.push_back(cell.face_plane[f]);
            nface_loops.push_back(std::move(clean));
        }
    }

    // section face on the new plane: angular order around its centroid
    std::sort(cut_verts.begin(), cut_verts.end());
    cut_verts.erase(std::unique(cut_verts.begin(), cut_verts.end()), cut_verts.end());
    if (cut_verts.size() >= 3) {
        Vec3 c{};
        for (int id : cut_verts) c += verts[id];
        c = c / static_cast<Real>(cut_verts.size());
        Vec3 axis = normalized(h.normal);
        Vec3 ref = verts[cut_verts[0]] - c;
        ref = ref - axis * dot(axis, ref);
        if (norm2(ref) < 1e-24) ref = perp_any(axis);
        ref = normalized(ref);
        Vec3 ref2 = cross(axis, ref);
        std::sort(cut_verts.begin(), cut_verts.end(), [&](int a, int b) {
            Vec3 va = verts[a] - c, vb = verts[b] - c;
            return std::atan2(dot(va, ref2), dot(va, ref)) < std::atan2(dot(vb, ref2), dot(vb, ref));
        });
        nface_plane.push_back(np);
        nface_loops.push_back(cut_verts);
    }

    // compact: keep vertices referenced by some loop
    std::vector<int> remap(verts.size(), -1);
    std::vector<Vec3> fverts;
    std::vector<std::array<int, 3>> fvp;
    for (auto& loop : nface_loops)
        for (int& id : loop) {
            if (remap[id] < 0) {
                remap[id] = static_cast<int>(fverts.size());
                fverts.push_back(verts[id]);
                fvp.push_back(vplanes[id]);
            }
            id = remap[id];
        }
    cell.vertices = std::move(fverts);
    cell.vertex_planes = std::move(fvp);
    cell.face_plane = std::move(nface_plane);
    cell.face_loops = std::move(nface_loops);
    if (cell.face_loops.size() < 4) {  // no volume left
        cell.vertices.clear();
        cell.vertex_planes.clear();
        cell.face_plane.clear();
        cell.face_loops.clear();
    }
    rebuild_edges(cell);
}

}  // namespace detail

// Seed cell covering the whole domain box: 2*D box planes first.
template <int D>
ConvexCell<D> make_box_cell(const Box<D>& box = {}) {
    ConvexCell<D> cell;
    for (int k = 0; k < 2 * D; ++k) {
        cell.planes.push_back(box_plane<D>(k, box));
        PlaneSource s;
        s.box_plane = k;
        cell.sources.push_back(s);
    }
    if constexpr (D == 2) {
        cell.vertices = {Vec2(box.lo[0], box.lo[1]), Vec2(box.hi[0], box.lo[1]),
                         Vec2(box.hi[0], box.hi[1]), Vec2(box.lo[0], box.hi[1])};
        // edge i (v_i -> v_{i+1}) lies on vertex_planes[i][1]
        cell.vertex_planes = {{0, 2}, {2, 1}, {1, 3}, {3, 0}};
    } else {
        auto corner = [&](int i) {
            return Vec3(i & 1 ? box.hi[0] : box.lo[0], i & 2 ? box.hi[1] : box.lo[1],
                        i & 4 ? box.hi[2] : box.lo[2]);
        };
        for (int i = 0; i < 8; ++i) {
            cell.vertices.push_back(corner(i));
            cell.vertex_planes.push_back({(i & 1 ? 1 : 0), (i & 2 ? 3 : 2), (i & 4 ? 5 : 4)});
        }
        // loops oriented arbitrarily; only incidence matters
        cell.face_plane = {0, 1, 2, 3, 4, 5};
        cell.face_loops = {{0, 2, 6, 4}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 5, 7, 6}};
        detail::rebuild_edges(cell);
    }
    return cell;
}

// Adds a plane and clips the cell geometry by it.
template <int D>
void cell_add_plane(ConvexCell<D>& cell, const HalfPlane<D>& h, const PlaneSource& src) {
    cell.planes.push_back(h);
    cell.sources.push_back(src);
    int np = static_cast<int>(cell.planes.size()) - 1;
    if constexpr (D == 2)
        detail::clip_cell_2d(cell, np);
    else
        detail::clip_cell_3d(cell, np);
}

// ---------------------------------------------------------------------------
// Distance queries

// Signed distance to the cell boundary: positive inside (min over planes),
// exact convex projection outside.
template <int D>
Real signed_distance_to_cell(const Vec<D, Real>& x, const ConvexCell<D>& cell) {
    if (cell.empty()) throw EmptyCellError("signed_distance_to_cell: empty cell");
    Real inner = std::numeric_limits<Real>::infinity();
    bool inside = true;
    for (const auto& h : cell.planes) {
        Real d = h.inner_distance(x);
        inner = std::min(inner, d);
        if (d < 0) inside = false;
    }
    if (inside) return inner;

    auto seg_dist = [&](const Vec<D, Real>& a, const Vec<D, Real>& b) {
        Vec<D, Real> ab = b - a;
        Real t = dot(x - a, ab) / std::max(norm2(ab), Real(1e-300));
        t = std::clamp(t, Real(0), Real(1));
        return norm(x - (a + ab * t));
    };

    Real best = std::numeric_limits<Real>::infinity();
    if constexpr (D == 2) {
        int n = static_cast<int>(cell.vertices.size());
        for (int i = 0; i < n; ++i) best = std::min(best, seg_dist(cell.vertices[i], cell.vertices[(i + 1) % n]));
    } else {
        for (std::size_t f = 0; f < cell.face_loops.size(); ++f) {
            const auto& loop = cell.face_loops[f];
            const auto& h = cell.planes[cell.face_plane[f]];
            Vec3 nrm = normalized(h.normal);
            Real pd = dot(nrm, x) - h.offset / norm(h.normal);
            Vec3 proj = x - nrm * pd;
            // inside-loop test via consistent cross-product sign
            bool in = true;
            int m = static_cast<int>(loop.size());
            int sign = 0;
            for (int i = 0; i < m && in; ++i) {
                Vec3 e = cell.vertices[loop[(i + 1) % m]] - cell.vertices[loop[i]];
                Vec3 r = proj - cell.vertices[loop[i]];
                Real s = dot(cross(e, r), nrm);
                if (std::fabs(s) < 1e-16) continue;
                int ss = s > 0 ? 1 : -1;
                if (sign == 0)
                    sign = ss;
                else if (ss != sign)
                    in = false;
            }
            if (in)
                best = std::min(best, std::fabs(pd));
            else
                for (int i = 0; i < m; ++i)
                    best = std::min(best, seg_dist(cell.vertices[loop[i]], cell.vertices[loop[(i + 1) % m]]));
        }
    }
    return -best;
}

// distance from the point x to an infinite line
template <int D, class T>
T point_line_distance(const Vec<D, T>& x, const Vec<D, T>& anchor, const Vec<D, T>& dir) {
    Vec<D, T> r = x - anchor;
    Vec<D, T> off = r - dir * dot(r, dir);
    return norm(off);
}

// line/segment distance; dir must be unit
template <int D, class T>
T line_segment_distance(const Vec<D, T>& anchor, const Vec<D, T>& dir, const Vec<D, T>& a,
                        const Vec<D, T>& b) {
    Vec<D, T> w = b - a;
    T B = dot(dir, w);
    T C = norm2(w);
    T D0 = dot(dir, a - anchor);
    T E = dot(w, a - anchor);
    T denom = C - B * B;
    if (value_of(denom) > 1e-14 * std::max(value_of(C), Real(1e-30))) {
        T s = (B * D0 - E) / denom;
        Real sv = value_of(s);
        if (sv <= 0.0) return point_line_distance<D, T>(a, anchor, dir);
        if (sv >= 1.0) return point_line_distance<D, T>(b, anchor, dir);
        T t = D0 + B * s;
        Vec<D, T> p = a + w * s;
        Vec<D, T> q = anchor + dir * t;
        return norm(p - q);
    }
    return point_line_distance<D, T>(a, anchor, dir);
}

// Minimum distance from a dual line to a disjoint cell: vertices in 2D,
// boundary edges in 3D.
template <int D>
Real line_to_cell_distance(const DualForm<D>& line, const ConvexCell<D>& cell) {
    if (!line.is_line) throw ContractError("line_to_cell_distance: dual form is not a line");
    if (cell.empty()) throw EmptyCellError("line_to_cell_distance: empty cell");
    Real best = std::numeric_limits<Real>::infinity();
    if constexpr (D == 2) {
        for (const auto& v : cell.vertices)
            best = std::min(best, point_line_distance<2, Real>(v, line.anchor, line.direction));
    } else {
        for (const auto& e : cell.edges)
            best = std::min(best, line_segment_distance<3, Real>(line.anchor, line.direction,
                                                                 cell.vertices[e[0]], cell.vertices[e[1]]));
    }
    return best;
}

// Clip a parametric line by a list of half planes. Returns the surviving
// interval, or nothing.
template <int D, class T>
std::optional<std::pair<T, T>> clip_line_by_planes(const Vec<D, T>& anchor, const Vec<D, T>& dir,
                                                   const std::vector<HalfPlane<D, T>>& planes,
                                                   int* lo_plane = nullptr, int* hi_plane = nullptr) {
    T t0 = T(-1e30), t1 = T(1e30);
    int lo = -1, hi = -1;
    for (std::size_t i = 0; i < planes.size(); ++i) {
        T den = dot(planes[i].normal, dir);
        T num = planes[i].offset - dot(planes[i].normal, anchor);
        Real dv = value_of(den);
        Real nscale = std::max(value_of(norm(planes[i].normal)), Real(1e-30));
        if (std::fabs(dv) < 1e-14 * nscale) {
            if (value_of(num) < 0) return std::nullopt;
            continue;
        }
        T t = num / den;
        if (dv > 0) {
            if (value_of(t) < value_of(t1)) {
                t1 = t;
                hi = static_cast<int>(i);
            }
        } else {
            if (value_of(t) > value_of(t0)) {
                t0 = t;
                lo = static_cast<int>(i);
            }
        }
    }
    if (value_of(t0) > value_of(t1)) return std::nullopt;
    if (lo_plane) *lo_plane = lo;
    if (hi_plane) *hi_plane = hi;
    return std::make_pair(t0, t1);
}

template <int D>
std::optional<std::pair<Real, Real>> clip_line_by_cell(const DualForm<D>& line, const ConvexCell<D>& cell) {
    if (!line.is_line) throw ContractError("clip_line_by_cell: dual form is not a line");
    return clip_line_by_planes<D, Real>(line.anchor, line.direction, cell.planes);
}

}  // namespace dmesh
