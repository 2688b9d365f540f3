#pragma once

#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "dmesh/geometry.hpp"
#include "dmesh/predicates.hpp"
#include "dmesh/spatial.hpp"

namespace dmesh {

// ---------------------------------------------------------------------------
// Simplex: canonical (sorted) vertex index tuple, k+1 entries used.

struct Simplex {
    std::array<std::int32_t, 4> idx{-1, -1, -1, -1};
    std::int8_t k = 0;

    Simplex() = default;
    Simplex(std::initializer_list<int> list) {
        k = static_cast<std::int8_t>(list.size() - 1);
        int i = 0;
        for (int v : list) idx[i++] = v;
        std::sort(idx.begin(), idx.begin() + size());
    }
    template <class It>
    Simplex(It begin, It end) {
        k = static_cast<std::int8_t>(std::distance(begin, end) - 1);
        int i = 0;
        for (It it = begin; it != end; ++it) idx[i++] = *it;
        std::sort(idx.begin(), idx.begin() + size());
    }

    int size() const { return k + 1; }
    int operator[](int i) const { return idx[i]; }
    bool contains(int v) const {
        for (int i = 0; i < size(); ++i)
            if (idx[i] == v) return true;
        return false;
    }
    bool operator==(const Simplex& o) const { return k == o.k && idx == o.idx; }
    bool operator<(const Simplex& o) const { return std::tie(k, idx) < std::tie(o.k, o.idx); }
};

struct SimplexHash {
    std::size_t operator()(const Simplex& s) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int i = 0; i < s.size(); ++i) {
            h ^= static_cast<std::uint64_t>(s.idx[i]) + 0x9e3779b9;
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

using SimplexSet = std::unordered_set<Simplex, SimplexHash>;

// ---------------------------------------------------------------------------
// Weighted Delaunay (regular) triangulation complex.

template <int D>
struct WdtComplex {
    int point_count = 0;

    // finite d-cells, each sorted ascending; deterministic order
    std::vector<std::array<int, D + 1>> cells;
    // neighbor across the facet opposite vertex i; -1 on the hull
    std::vector<std::array<int, D + 1>> neighbors;

    // deduplicated (d-1)-faces with up to two incident cells (-1 absent)
    std::vector<Simplex> faces;
    std::vector<std::array<int, 2>> face_cells;

    std::vector<bool> submerged;            // per point
    std::vector<std::vector<int>> rings;    // per point: sorted WDT neighbors

    std::unordered_map<Simplex, int, SimplexHash> face_index;

    bool is_face(const Simplex& s) const { return face_index.count(s) != 0; }
    int face_id(const Simplex& s) const {
        auto it = face_index.find(s);
        return it == face_index.end() ? -1 : it->second;
    }

    // the remaining vertex of each incident cell ("opposite" points)
    std::array<int, 2> opposite_vertices(int fid) const {
        std::array<int, 2> out{-1, -1};
        for (int s = 0; s < 2; ++s) {
            int c = face_cells[fid][s];
            if (c < 0) continue;
            for (int v : cells[c])
                if (!faces[fid].contains(v)) out[s] = v;
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Incremental construction with an infinite vertex (id -1) closing the hull.

namespace detail {

template <int D>
class RegularBuilder {
    static constexpr int INF = -1;

    struct TCell {
        std::array<int, D + 1> v;
        std::array<int, D + 1> n;
        bool dead = false;
        int inf_slot = -1;  // position of INF, -1 if finite
    };

public:
    RegularBuilder(const std::vector<WeightedPoint<D>>& pts) : pts_(pts) {
        gpos_.resize(pts.size());
        gw_.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            gpos_[i] = pts[i].position;
            gw_[i] = pts[i].weight;
        }
    }

    void run() {
        std::vector<int> order = make_order();
        std::size_t boot_end = bootstrap(order);
        for (std::size_t i = boot_end; i < order.size(); ++i) insert(order[i]);
    }

    WdtComplex<D> finalize() {
        WdtComplex<D> out;
        out.point_count = static_cast<int>(pts_.size());

        std::vector<std::array<int, D + 1>> raw;
        for (const auto& c : cells_) {
            if (c.dead || c.inf_slot >= 0) continue;
            std::array<int, D + 1> s = c.v;
            std::sort(s.begin(), s.end());
            raw.push_back(s);
        }
        std::sort(raw.begin(), raw.end());
        out.cells = std::move(raw);

        // adjacency + faces from a facet map
        std::unordered_map<Simplex, std::pair<int, int>, SimplexHash> open;  // facet -> (cell, slot)
        out.neighbors.assign(out.cells.size(), [] {
            std::array<int, D + 1> a;
            a.fill(-1);
            return a;
        }());
        out.submerged.assign(pts_.size(), true);
        for (std::size_t ci = 0; ci < out.cells.size(); ++ci) {
            for (int v : out.cells[ci]) out.submerged[v] = false;
            for (int i = 0; i <= D; ++i) {
                std::array<int, D> f;
                int c = 0;
                for (int j = 0; j <= D; ++j)
                    if (j != i) f[c++] = out.cells[ci][j];
                Simplex key(f.begin(), f.end());
                auto it = open.find(key);
                if (it == open.end()) {
                    open.emplace(key, std::make_pair(static_cast<int>(ci), i));
                } else {
                    out.neighbors[ci][i] = it->second.first;
                    out.neighbors[it->second.first][it->second.second] = static_cast<int>(ci);
                    it->second.second = -1 - it->second.second;  // mark shared, keep cell id
                }
            }
        }

        std::vector<Simplex> faces(open.size());
        std::size_t fi = 0;
        for (auto& [key, rec] : open) faces[fi++] = key;
        std::sort(faces.begin(), faces.end());
        out.faces = std::move(faces);
        out.face_cells.assign(out.faces.size(), {-1, -1});
        out.face_index.reserve(out.faces.size() * 2);
        for (std::size_t i = 0; i < out.faces.size(); ++i) out.face_index.emplace(out.faces[i], static_cast<int>(i));
        for (std::size_t ci = 0; ci < out.cells.size(); ++ci) {
            for (int i = 0; i <= D; ++i) {
                std::array<int, D> f;
                int c = 0;
                for (int j = 0; j <= D; ++j)
                    if (j != i) f[c++] = out.cells[ci][j];
                int fid = out.face_index.at(Simplex(f.begin(), f.end()));
                if (out.face_cells[fid][0] < 0)
                    out.face_cells[fid][0] = static_cast<int>(ci);
                else if (out.face_cells[fid][0] != static_cast<int>(ci))
                    out.face_cells[fid][1] = static_cast<int>(ci);
            }
        }

        // 1-rings
        out.rings.assign(pts_.size(), {});
        for (const auto& cell : out.cells)
            for (int a : cell)
                for (int b : cell)
                    if (a != b) out.rings[a].push_back(b);
        for (auto& r : out.rings) {
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
        }
        return out;
    }

private:
    const std::vector<WeightedPoint<D>>& pts_;
    std::vector<Vec<D, Real>> gpos_;
    std::vector<Real> gw_;
    std::vector<TCell> cells_;
    int last_finite_ = -1;
    std::uint64_t walk_salt_ = 0;

    // --- ordering ---------------------------------------------------------

    std::uint64_t morton(const Vec<D, Real>& p) const {
        std::uint64_t key = 0;
        std::array<std::uint32_t, D> q;
        for (int i = 0; i < D; ++i)
            q[i] = static_cast<std::uint32_t>(std::clamp(p[i], Real(0), Real(1)) * ((1u << 20) - 1));
        for (int bit = 20 - 1; bit >= 0; --bit)
            for (int i = 0; i < D; ++i) key = (key << 1) | ((q[i] >> bit) & 1u);
        return key;
    }

    std::vector<int> make_order() const {
        std::size_t n = pts_.size();
        std::vector<int> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
        std::uint64_t h = hash_bytes(gpos_.data(), n * sizeof(Vec<D, Real>));
        h = hash_bytes(gw_.data(), n * sizeof(Real), h);
        Rng rng(h);
        rng.shuffle(order);
        // BRIO rounds of growing size, Morton-sorted within each round
        std::size_t start = 0, len = 64;
        while (start < n) {
            std::size_t end = std::min(n, start + len);
            std::sort(order.begin() + start, order.begin() + end,
                      [&](int a, int b) { return morton(gpos_[a]) < morton(gpos_[b]); });
            start = end;
            len *= 4;
        }
        return order;
    }

    // --- predicates on cells ------------------------------------------------

    int orient_pts(const std::array<int, D + 1>& v) const {
        Vec<D, Real> p[D + 1];
        for (int i = 0; i <= D; ++i) p[i] = gpos_[v[i]];
        return orient<D>(p);
    }

    bool conflicts(int ci, int q) const {
        const TCell& c = cells_[ci];
        if (c.inf_slot < 0) {
            Vec<D, Real> p[D + 1];
            Real w[D + 1];
            int g[D + 1];
            for (int i = 0; i <= D; ++i) {
                p[i] = gpos_[c.v[i]];
                w[i] = gw_[c.v[i]];
                g[i] = c.v[i];
            }
            return power_test_sos<D>(p, w, g, gpos_[q], gw_[q], q) * power_conflict_sign(D) > 0;
        }
        // infinite cell: strictly outside the hull facet, or on its plane and
        // inside the facet's ortho-disk
        std::array<int, D> f = facet_of_inf(ci);
        int inner = inner_witness(ci);
        Vec<D, Real> fp[D + 1];
        for (int i = 0; i < D; ++i) fp[i] = gpos_[f[i]];
        fp[D] = gpos_[inner];
        int s_in = orient<D>(fp);
        fp[D] = gpos_[q];
        int s_q = orient<D>(fp);
        if (s_q == 0) {
            Real fw[D];
            int fg[D];
            for (int i = 0; i < D; ++i) {
                fw[i] = gw_[f[i]];
                fg[i] = f[i];
            }
            Vec<D, Real> fpos[D];
            for (int i = 0; i < D; ++i) fpos[i] = gpos_[f[i]];
            return facet_power_conflict(fpos, fw, fg, gpos_[q], gw_[q], q) > 0;
        }
        return s_q != s_in;
    }

    std::array<int, D> facet_of_inf(int ci) const {
        const TCell& c = cells_[ci];
        std::array<int, D> f;
        int k = 0;
        for (int i = 0; i <= D; ++i)
            if (i != c.inf_slot) f[k++] = c.v[i];
        return f;
    }

    // a finite vertex on the inner side of an infinite cell's hull facet
    int inner_witness(int ci) const {
        const TCell& c = cells_[ci];
        int nb = c.n[c.inf_slot];
        const TCell& fc = cells_[nb];
        std::array<int, D> f = facet_of_inf(ci);
        for (int v : fc.v) {
            bool in_f = false;
            for (int u : f) in_f |= (u == v);
            if (!in_f && v != INF) return v;
        }
        throw Error("triangulation: broken adjacency at hull");
    }

    // --- location ------------------------------------------------------------

    int locate(int q) {
        int ci = last_finite_ >= 0 ? last_finite_ : first_live();
        const Vec<D, Real>& qp = gpos_[q];
        std::size_t guard = cells_.size() * 4 + 64;
        while (guard--) {
            if (cells_[ci].dead) {
                ci = first_live();
                continue;
            }
            const TCell& c = cells_[ci];
            if (c.inf_slot >= 0) {
                std::array<int, D> f = facet_of_inf(ci);
                int inner = inner_witness(ci);
                Vec<D, Real> fp[D + 1];
                for (int i = 0; i < D; ++i) fp[i] = gpos_[f[i]];
                fp[D] = gpos_[inner];
                int s_in = orient<D>(fp);
                fp[D] = qp;
                int s_q = orient<D>(fp);
                if (s_q == 0 || s_q != s_in) return ci;  // outside or on hull here
                ci = c.n[c.inf_slot];
                continue;
            }
            // finite: step through the first facet that strictly rejects q
            bool moved = false;
            int offset = static_cast<int>(walk_salt_++ % (D + 1));
            for (int k = 0; k <= D && !moved; ++k) {
                int i = (k + offset) % (D + 1);
                Vec<D, Real> p[D + 1];
                for (int j = 0; j <= D; ++j) p[j] = gpos_[c.v[j]];
                p[i] = qp;
                if (orient<D>(p) < 0) {
                    ci = c.n[i];
                    moved = true;
                }
            }
            if (!moved) return ci;
        }
        // exhaustive fallback: scan for any conflicting or containing cell
        for (std::size_t i = 0; i < cells_.size(); ++i)
            if (!cells_[i].dead && conflicts(static_cast<int>(i), q)) return static_cast<int>(i);
        return first_live();
    }

    int first_live() const {
        for (std::size_t i = 0; i < cells_.size(); ++i)
            if (!cells_[i].dead) return static_cast<int>(i);
        throw Error("triangulation: no live cells");
    }

    // --- insertion -------------------------------------------------------------

    void insert(int q) {
        int start = locate(q);
        if (!conflicts(start, q)) {
            // the walk may stop one cell short when q sits exactly on a
            // boundary; scan a small neighborhood before declaring it hidden
            int found = -1;
            std::unordered_set<int> seen{start};
            std::vector<int> frontier{start};
            for (int depth = 0; depth < 2 && found < 0 && !frontier.empty(); ++depth) {
                std::vector<int> next;
                for (int ci : frontier) {
                    for (int nb : cells_[ci].n) {
                        if (nb < 0 || cells_[nb].dead || seen.count(nb)) continue;
                        seen.insert(nb);
                        if (conflicts(nb, q)) {
                            found = nb;
                            break;
                        }
                        next.push_back(nb);
                    }
                    if (found >= 0) break;
                }
                frontier = std::move(next);
            }
            if (found < 0) return;  // submerged on arrival
            start = found;
        }

        // grow the conflict region
        std::vector<int> conflict;
        std::vector<int> stack{start};
        std::unordered_set<int> in_conflict{start};
        while (!stack.empty()) {
            int ci = stack.back();
            stack.pop_back();
            conflict.push_back(ci);
            for (int nb : cells_[ci].n) {
                if (nb < 0 || in_conflict.count(nb)) continue;
                if (conflicts(nb, q)) {
                    in_conflict.insert(nb);
                    stack.push_back(nb);
                }
            }
        }

        // boundary facets and new cells
        struct Boundary {
            std::array<int, D> facet;
            int outside;  // surviving neighbor cell
        };
        std::vector<Boundary> boundary;
        for (int ci : conflict) {
            const TCell& c = cells_[ci];
            for (int i = 0; i <= D; ++i) {
                int nb = c.n[i];
                if (nb >= 0 && in_conflict.count(nb)) continue;
                Boundary b;
                int k = 0;
                for (int j = 0; j <= D; ++j)
                    if (j != i) b.facet[k++] = c.v[j];
                b.outside = nb;
                boundary.push_back(b);
            }
        }

        std::vector<int> fresh;
        fresh.reserve(boundary.size());
        for (const auto& b : boundary) {
            TCell nc;
            for (int i = 0; i < D; ++i) nc.v[i] = b.facet[i];
            nc.v[D] = q;
            nc.n.fill(-1);
            nc.inf_slot = -1;
            for (int i = 0; i <= D; ++i)
                if (nc.v[i] == INF) nc.inf_slot = i;
            if (nc.inf_slot < 0) {
                int s = orient_pts(nc.v);
                if (s == 0) throw DegeneracyError("triangulation: flat cell");
                if (s < 0) std::swap(nc.v[0], nc.v[1]);
            }
            cells_.push_back(nc);
            fresh.push_back(static_cast<int>(cells_.size()) - 1);
            if (nc.inf_slot < 0) last_finite_ = fresh.back();
        }

        // wire new cell <-> outside survivor across the boundary facet
        for (std::size_t bi = 0; bi < boundary.size(); ++bi) {
            int nc = fresh[bi];
            int out = boundary[bi].outside;
            int slot_q = -1;
            for (int i = 0; i <= D; ++i)
                if (cells_[nc].v[i] == q) slot_q = i;
            cells_[nc].n[slot_q] = out;
            if (out >= 0) {
                TCell& oc = cells_[out];
                for (int i = 0; i <= D; ++i)
                    if (oc.n[i] >= 0 && in_conflict.count(oc.n[i])) {
                        // the slot facing the cavity with this exact facet
                        std::array<int, D> f;
                        int k = 0;
                        for (int j = 0; j <= D; ++j)
                            if (j != i) f[k++] = oc.v[j];
                        if (same_facet(f, boundary[bi].facet)) {
                            oc.n[i] = nc;
                            break;
                        }
                    }
            }
        }

        // wire new-to-new across facets containing q
        std::unordered_map<Simplex, std::pair<int, int>, SimplexHash> half;
        for (int nc : fresh) {
            const TCell& c = cells_[nc];
            for (int i = 0; i <= D; ++i) {
                if (c.v[i] == q) continue;
                std::array<int, D> f;
                int k = 0;
                for (int j = 0; j <= D; ++j)
                    if (j != i) f[k++] = c.v[j];
                Simplex key(f.begin(), f.end());
                auto it = half.find(key);
                if (it == half.end()) {
                    half.emplace(key, std::make_pair(nc, i));
                } else {
                    cells_[nc].n[i] = it->second.first;
                    cells_[it->second.first].n[it->second.second] = nc;
                }
            }
        }

        for (int ci : conflict) cells_[ci].dead = true;
    }

    static bool same_facet(std::array<int, D> a, std::array<int, D> b) {
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    }

    // --- bootstrap -------------------------------------------------------------

    std::size_t bootstrap(std::vector<int>& order) {
        std::size_t n = order.size();
        if (n < D + 1) throw DegeneracyError("triangulation: not enough points");

        // greedily pick d+1 affinely independent points, move them up front
        std::array<int, D + 1> first{};
        std::size_t cursor = 0;
        auto pick = [&](auto&& accept) {
            for (std::size_t i = cursor; i < n; ++i) {
                if (accept(order[i])) {
                    std::swap(order[cursor], order[i]);
                    ++cursor;
                    return order[cursor - 1];
                }
            }
            return -1;
        };
        first[0] = pick([](int) { return true; });
        first[1] = pick([&](int p) { return !(gpos_[p] == gpos_[first[0]]); });
        if (first[1] < 0) throw DegeneracyError("triangulation: all positions coincide");
        if constexpr (D == 2) {
            first[2] = pick([&](int p) { return orient2d(gpos_[first[0]], gpos_[first[1]], gpos_[p]) != 0; });
            if (first[2] < 0) throw DegeneracyError("triangulation: all points collinear");
        } else {
            first[2] = pick([&](int p) {
                Vec3 c = cross(gpos_[first[1]] - gpos_[first[0]], gpos_[p] - gpos_[first[0]]);
                return norm2(c) != 0.0;
            });
            if (first[2] < 0) throw DegeneracyError("triangulation: all points collinear");
            first[3] = pick([&](int p) {
                return orient3d(gpos_[first[0]], gpos_[first[1]], gpos_[first[2]], gpos_[p]) != 0;
            });
            if (first[3] < 0) throw DegeneracyError("triangulation: all points coplanar");
        }

        TCell c0;
        c0.v = first;
        c0.n.fill(-1);
        c0.inf_slot = -1;
        if (orient_pts(c0.v) < 0) std::swap(c0.v[0], c0.v[1]);
        cells_.push_back(c0);
        last_finite_ = 0;

        // one infinite cell per facet
        std::array<int, D + 1> inf_ids{};
        for (int i = 0; i <= D; ++i) {
            TCell ic;
            int k = 0;
            for (int j = 0; j <= D; ++j)
                if (j != i) ic.v[k++] = cells_[0].v[j];
            ic.v[D] = INF;
            ic.inf_slot = D;
            ic.n.fill(-1);
            ic.n[D] = 0;
            cells_.push_back(ic);
            inf_ids[i] = static_cast<int>(cells_.size()) - 1;
            cells_[0].n[i] = inf_ids[i];
        }
        // infinite-to-infinite adjacency: facet opposite finite vertex u of
        // inf_i is shared with the infinite cell opposite u's slot in c0
        for (int i = 0; i <= D; ++i) {
            TCell& ic = cells_[inf_ids[i]];
            for (int s = 0; s < D; ++s) {
                int u = ic.v[s];
                for (int j = 0; j <= D; ++j)
                    if (cells_[0].v[j] == u) ic.n[s] = inf_ids[j];
            }
        }
        return cursor;
    }
};

}  // namespace detail

// Builds the regular triangulation. Submerged points appear in no cell but
// stay in the point list.
template <int D>
WdtComplex<D> build_wdt(const std::vector<WeightedPoint<D>>& points) {
    if (static_cast<int>(points.size()) < D + 1)
        throw DegeneracyError("build_wdt: need at least d+1 points");
    detail::RegularBuilder<D> builder(points);
    builder.run();
    return builder.finalize();
}

template <int D>
std::vector<Simplex> enumerate_faces(const WdtComplex<D>& wdt) {
    return wdt.faces;
}

// All-pairs pseudo-complex for point sets too small to triangulate: no cells
// or faces, but rings connect everything so a power diagram can be built.
template <int D>
WdtComplex<D> make_allpairs_complex(const std::vector<WeightedPoint<D>>& points) {
    WdtComplex<D> out;
    out.point_count = static_cast<int>(points.size());
    out.submerged.assign(points.size(), false);
    out.rings.assign(points.size(), {});
    for (int a = 0; a < out.point_count; ++a)
        for (int b = 0; b < out.point_count; ++b)
            if (a != b) out.rings[a].push_back(b);
    return out;
}

// Candidate faces from k-nearest-neighbor combinations: each point combined
// with d-1 of its k nearest neighbors.
template <int D>
std::vector<Simplex> knn_candidate_faces(const std::vector<WeightedPoint<D>>& points, int k) {
    if (k < 2) throw ContractError("knn_candidate_faces: k must be >= 2");
    std::size_t n = points.size();
    k = std::min<int>(k, static_cast<int>(n) - 1);
    std::vector<Vec<D, Real>> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = points[i].position;
    UniformGrid<D> grid(pos);
    SimplexSet seen;
    std::vector<int> nbrs;
    for (std::size_t p = 0; p < n; ++p) {
        grid.knn(pos[p], k, static_cast<int>(p), nbrs);
        int m = static_cast<int>(nbrs.size());
        if constexpr (D == 2) {
            for (int i = 0; i < m; ++i) seen.insert(Simplex{static_cast<int>(p), nbrs[i]});
        } else {
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j)
                    seen.insert(Simplex{static_cast<int>(p), nbrs[i], nbrs[j]});
        }
    }
    std::vector<Simplex> out(seen.begin(), seen.end());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Power diagram. Cells are bounded half-plane intersections (1-ring bisectors
// plus the box); edges are the dual segments of the (d-1)-faces.

template <int D>
struct PowerDiagram {
    struct Edge {
        int face = -1;
        Vec<D, Real> a, b;
        Real length = 0;
    };

    Box<D> box;
    std::vector<ConvexCell<D>> cells;
    std::vector<Edge> edges;
};

// Dual segment of a WDT face: the face's dual line clipped by the power cell
// of one of its vertices. Returns false if the segment is empty. The binding
// plane sources let gradient code replay the clip.
template <int D>
struct DualEdgeInfo {
    DualForm<D> line;
    Real t0 = 0, t1 = 0;
    PlaneSource lo, hi;  // binding constraints at t0 / t1 (box or bisector)
    bool valid = false;
};

template <int D>
DualEdgeInfo<D> dual_edge_interval(const Simplex& face, const WdtComplex<D>& wdt,
                                   const std::vector<WeightedPoint<D>>& points, const Box<D>& box = {}) {
    DualEdgeInfo<D> out;
    Vec<D, Real> pos[D];
    Real w[D];
    for (int i = 0; i < D; ++i) {
        pos[i] = points[face[i]].position;
        w[i] = points[face[i]].weight;
    }
    out.line = dual_line<D, Real>(pos, w);

    int p = face[0];
    std::vector<HalfPlane<D>> planes;
    std::vector<PlaneSource> sources;
    planes.reserve(wdt.rings[p].size() + 2 * D);
    for (int k = 0; k < 2 * D; ++k) {
        planes.push_back(box_plane<D>(k, box));
        PlaneSource s;
        s.box_plane = k;
        sources.push_back(s);
    }
    for (int q : wdt.rings[p]) {
        if (face.contains(q)) continue;
        planes.push_back(bisector_plane<D, Real>(points[p].position, points[p].weight,
                                                 points[q].position, points[q].weight));
        sources.push_back(PlaneSource{p, q, -1});
    }
    int lo = -1, hi = -1;
    auto iv = clip_line_by_planes<D, Real>(out.line.anchor, out.line.direction, planes, &lo, &hi);
    if (!iv || iv->second <= iv->first) return out;
    out.t0 = iv->first;
    out.t1 = iv->second;
    out.lo = lo >= 0 ? sources[lo] : PlaneSource{};
    out.hi = hi >= 0 ? sources[hi] : PlaneSource{};
    out.valid = true;
    return out;
}

template <int D>
PowerDiagram<D> build_power_diagram(const WdtComplex<D>& wdt, const std::vector<WeightedPoint<D>>& points,
                                    const Box<D>& box = {}) {
    PowerDiagram<D> pd;
    pd.box = box;
    pd.cells.resize(points.size());
    parallel_for(points.size(), [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t p = b; p < e; ++p) {
            ConvexCell<D>& cell = pd.cells[p];
            cell.generator = static_cast<int>(p);
            if (wdt.submerged[p]) continue;
            cell = make_box_cell<D>(box);
            cell.generator = static_cast<int>(p);
            for (int q : wdt.rings[p]) {
                auto h = bisector_plane<D, Real>(points[p].position, points[p].weight, points[q].position,
                                                 points[q].weight);
                cell_add_plane(cell, h, PlaneSource{static_cast<int>(p), q, -1});
                if (cell.empty()) break;
            }
        }
    });

    pd.edges.resize(wdt.faces.size());
    parallel_for(wdt.faces.size(), [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t f = b; f < e; ++f) {
            auto info = dual_edge_interval<D>(wdt.faces[f], wdt, points, box);
            auto& edge = pd.edges[f];
            edge.face = static_cast<int>(f);
            if (!info.valid) continue;
            edge.a = info.line.anchor + info.line.direction * info.t0;
            edge.b = info.line.anchor + info.line.direction * info.t1;
            edge.length = info.t1 - info.t0;
        }
    });
    return pd;
}

}  // namespace dmesh
