#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>

#include "dmesh/core.hpp"

// Geometric predicates with staged evaluation: double with a conservative
// permanent-based error bound, then long double, then exact rational
// arithmetic. Ties of the power test are broken by symbolic perturbation of
// the lifted coordinate, ordered by global point index, so co-spherical
// configurations still yield a unique simplicial complex.

namespace dmesh {

using BigQ = boost::multiprecision::cpp_rational;

namespace detail {

template <class T>
T det2x2(const T m[2][2]) {
    return m[0][0] * m[1][1] - m[0][1] * m[1][0];
}

template <class T>
T perm2x2(const T m[2][2]) {
    using std::fabs;
    return fabs(m[0][0] * m[1][1]) + fabs(m[0][1] * m[1][0]);
}

template <class T>
T det3x3(const T m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

template <class T>
T perm3x3(const T m[3][3]) {
    using std::fabs;
    return fabs(m[0][0]) * (fabs(m[1][1] * m[2][2]) + fabs(m[1][2] * m[2][1])) +
           fabs(m[0][1]) * (fabs(m[1][0] * m[2][2]) + fabs(m[1][2] * m[2][0])) +
           fabs(m[0][2]) * (fabs(m[1][0] * m[2][1]) + fabs(m[1][1] * m[2][0]));
}

template <class T>
T det4x4(const T m[4][4]) {
    T r = T(0);
    for (int c = 0; c < 4; ++c) {
        T minor[3][3];
        for (int i = 1; i < 4; ++i) {
            int cc = 0;
            for (int j = 0; j < 4; ++j) {
                if (j == c) continue;
                minor[i - 1][cc++] = m[i][j];
            }
        }
        T term = m[0][c] * det3x3(minor);
        if (c % 2 == 0)
            r = r + term;
        else
            r = r - term;
    }
    return r;
}

template <class T>
T perm4x4(const T m[4][4]) {
    using std::fabs;
    T r = T(0);
    for (int c = 0; c < 4; ++c) {
        T minor[3][3];
        for (int i = 1; i < 4; ++i) {
            int cc = 0;
            for (int j = 0; j < 4; ++j) {
                if (j == c) continue;
                minor[i - 1][cc++] = m[i][j];
            }
        }
        r = r + fabs(m[0][c]) * perm3x3(minor);
    }
    return r;
}

inline int sign_of(const BigQ& q) {
    if (q > 0) return 1;
    if (q < 0) return -1;
    return 0;
}

// returns +1/-1 when conclusive, 2 otherwise
template <class T>
int sign_with_threshold(T det, T thresh) {
    if (det > thresh) return 1;
    if (det < -thresh) return -1;
    return 2;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Orientation

// sign of det[b-a; c-a]; +1 = counterclockwise
inline int orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    {
        double m[2][2] = {{b[0] - a[0], b[1] - a[1]}, {c[0] - a[0], c[1] - a[1]}};
        if (int s = detail::sign_with_threshold(detail::det2x2(m), 1e-14 * detail::perm2x2(m)); s != 2)
            return s;
    }
    {
        long double m[2][2] = {{(long double)b[0] - a[0], (long double)b[1] - a[1]},
                               {(long double)c[0] - a[0], (long double)c[1] - a[1]}};
        if (int s = detail::sign_with_threshold(detail::det2x2(m), (long double)1e-18 * detail::perm2x2(m));
            s != 2)
            return s;
    }
    BigQ m[2][2] = {{BigQ(b[0]) - BigQ(a[0]), BigQ(b[1]) - BigQ(a[1])},
                    {BigQ(c[0]) - BigQ(a[0]), BigQ(c[1]) - BigQ(a[1])}};
    return detail::sign_of(detail::det2x2(m));
}

// sign of det[b-a; c-a; d-a]; +1 = positively oriented
inline int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3* pts[3] = {&b, &c, &d};
    {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = (*pts[i])[j] - a[j];
        if (int s = detail::sign_with_threshold(detail::det3x3(m), 1e-13 * detail::perm3x3(m)); s != 2)
            return s;
    }
    {
        long double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = (long double)(*pts[i])[j] - a[j];
        if (int s = detail::sign_with_threshold(detail::det3x3(m), (long double)1e-17 * detail::perm3x3(m));
            s != 2)
            return s;
    }
    BigQ m[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = BigQ((*pts[i])[j]) - BigQ(a[j]);
    return detail::sign_of(detail::det3x3(m));
}

template <int D>
int orient(const Vec<D, Real>* simplex);

template <>
inline int orient<2>(const Vec2* s) {
    return orient2d(s[0], s[1], s[2]);
}

template <>
inline int orient<3>(const Vec3* s) {
    return orient3d(s[0], s[1], s[2], s[3]);
}

// ---------------------------------------------------------------------------
// In-orthosphere ("power") test for the regular triangulation.
//
// Row i of the (D+1)x(D+1) matrix is [pos[i] - q, lift_i - lift_q] with
// lift = |p|^2 - w. For a positively oriented simplex, q inside the
// orthoball makes the determinant positive in even dimension and negative in
// odd dimension; callers multiply by power_conflict_sign(D).

constexpr int power_conflict_sign(int d) { return d % 2 == 0 ? 1 : -1; }

namespace detail {

// raw sign with staged filters; 0 only when exactly degenerate
template <int D>
int power_det_sign(const Vec<D, Real>* pos, const Real* w, const Vec<D, Real>& q, Real wq) {
    constexpr int N = D + 1;
    {
        double m[N][N], p[N][N];
        double lq = dot(q, q) - wq;
        double alq = std::fabs(dot(q, q)) + std::fabs(wq);
        for (int i = 0; i < N; ++i) {
            double li = dot(pos[i], pos[i]) - w[i];
            for (int j = 0; j < D; ++j) {
                m[i][j] = pos[i][j] - q[j];
                p[i][j] = std::fabs(pos[i][j]) + std::fabs(q[j]);
            }
            m[i][D] = li - lq;
            p[i][D] = std::fabs(dot(pos[i], pos[i])) + std::fabs(w[i]) + alq;
        }
        int s;
        if constexpr (D == 1)
            s = sign_with_threshold(det2x2(m), 1e-14 * perm2x2(p));
        else if constexpr (D == 2)
            s = sign_with_threshold(det3x3(m), 1e-13 * perm3x3(p));
        else
            s = sign_with_threshold(det4x4(m), 3e-13 * perm4x4(p));
        if (s != 2) return s;
    }
    {
        long double m[N][N], p[N][N];
        long double qq = 0, aq = 0;
        for (int j = 0; j < D; ++j) {
            qq += (long double)q[j] * q[j];
            aq += (long double)q[j] * q[j];
        }
        long double lq = qq - (long double)wq;
        long double alq = aq + fabsl((long double)wq);
        for (int i = 0; i < N; ++i) {
            long double ii = 0;
            for (int j = 0; j < D; ++j) ii += (long double)pos[i][j] * pos[i][j];
            for (int j = 0; j < D; ++j) {
                m[i][j] = (long double)pos[i][j] - q[j];
                p[i][j] = fabsl((long double)pos[i][j]) + fabsl((long double)q[j]);
            }
            m[i][D] = ii - (long double)w[i] - lq;
            p[i][D] = ii + fabsl((long double)w[i]) + alq;
        }
        int s;
        if constexpr (D == 1)
            s = sign_with_threshold(det2x2(m), (long double)1e-18 * perm2x2(p));
        else if constexpr (D == 2)
            s = sign_with_threshold(det3x3(m), (long double)1e-17 * perm3x3(p));
        else
            s = sign_with_threshold(det4x4(m), (long double)3e-17 * perm4x4(p));
        if (s != 2) return s;
    }
    BigQ m[N][N];
    BigQ lq(0);
    for (int j = 0; j < D; ++j) lq += BigQ(q[j]) * BigQ(q[j]);
    lq -= BigQ(wq);
    for (int i = 0; i < N; ++i) {
        BigQ li(0);
        for (int j = 0; j < D; ++j) li += BigQ(pos[i][j]) * BigQ(pos[i][j]);
        li -= BigQ(w[i]);
        for (int j = 0; j < D; ++j) m[i][j] = BigQ(pos[i][j]) - BigQ(q[j]);
        m[i][D] = li - lq;
    }
    if constexpr (D == 1)
        return sign_of(det2x2(m));
    else if constexpr (D == 2)
        return sign_of(det3x3(m));
    else
        return sign_of(det4x4(m));
}

// exact cofactor of the lift entry in row `row`: (-1)^(row+D) * det of the
// coordinate minor over the other rows
template <int D>
int power_lift_cofactor_sign(const Vec<D, Real>* pos, const Vec<D, Real>& q, int row) {
    BigQ minor[D][D];
    int r = 0;
    for (int i = 0; i <= D; ++i) {
        if (i == row) continue;
        for (int j = 0; j < D; ++j) minor[r][j] = BigQ(pos[i][j]) - BigQ(q[j]);
        ++r;
    }
    int s;
    if constexpr (D == 1)
        s = sign_of(minor[0][0]);
    else if constexpr (D == 2)
        s = sign_of(det2x2(minor));
    else
        s = sign_of(det3x3(minor));
    return ((row + D) % 2 == 0) ? s : -s;
}

// exact orientation of the D+1 simplex rows (sum of all lift cofactors)
template <int D>
int power_orient_sign(const Vec<D, Real>* pos) {
    BigQ m[D][D];
    for (int i = 1; i <= D; ++i)
        for (int j = 0; j < D; ++j) m[i - 1][j] = BigQ(pos[i][j]) - BigQ(pos[0][j]);
    if constexpr (D == 1)
        return sign_of(m[0][0]);
    else if constexpr (D == 2)
        return sign_of(det2x2(m));
    else
        return sign_of(det3x3(m));
}

}  // namespace detail

// Raw determinant sign: +1 conflict, -1 no conflict, 0 degenerate tie.
template <int D>
int power_test_raw(const Vec<D, Real>* pos, const Real* w, const Vec<D, Real>& q, Real wq) {
    return detail::power_det_sign<D>(pos, w, q, wq);
}

// SoS-resolved power test. gid are global indices of the simplex vertices,
// gq the query's. The perturbation lowers lift_i by eps^(gid+1); smaller
// global index dominates. Never returns 0 for a non-degenerate simplex.
template <int D>
int power_test_sos(const Vec<D, Real>* pos, const Real* w, const int* gid, const Vec<D, Real>& q,
                   Real wq, int gq) {
    int s = detail::power_det_sign<D>(pos, w, q, wq);
    if (s != 0) return s;

    // order participants by global index; first nonzero perturbation term wins
    std::array<std::pair<int, int>, D + 2> order;  // (gid, row) with row=-1 for query
    for (int i = 0; i <= D; ++i) order[i] = {gid[i], i};
    order[D + 1] = {gq, -1};
    std::sort(order.begin(), order.end());

    for (const auto& [g, row] : order) {
        int c;
        if (row >= 0) {
            // lift_row -= eps: term sign = -cofactor
            c = -detail::power_lift_cofactor_sign<D>(pos, q, row);
        } else {
            // lift_q -= eps adds +eps to every row's last entry: sum of cofactors
            c = detail::power_orient_sign<D>(pos);
        }
        if (c != 0) return c;
    }
    throw DegeneracyError("power_test_sos: fully degenerate configuration");
}

// ---------------------------------------------------------------------------
// Facet power test for queries exactly on a hull facet's hyperplane. The
// facet (D points) and the query are projected onto the dominant axis plane;
// multiplying the projected power determinant by the projected orientation
// cancels the distortion factor, so the product's sign is projection-free.
// Called only on exact coplanarity, so it goes straight to exact arithmetic.
//
// Returns +1 if q conflicts the facet's ortho-disk, -1 otherwise.

namespace detail {

template <int K>
int subspace_power_conflict(const Vec<K, Real>* pos, const Real* w, const int* gid,
                            const Vec<K, Real>& q, Real wq, int gq) {
    int cs = power_conflict_sign(K);
    int ps = power_det_sign<K>(pos, w, q, wq);
    int os = power_orient_sign<K>(pos);
    if (os == 0) throw DegeneracyError("facet power test: degenerate facet");
    if (ps != 0) return ps * os * cs > 0 ? 1 : -1;

    std::array<std::pair<int, int>, K + 2> order;
    for (int i = 0; i <= K; ++i) order[i] = {gid[i], i};
    order[K + 1] = {gq, -1};
    std::sort(order.begin(), order.end());
    for (const auto& [g, row] : order) {
        int c = (row >= 0) ? -power_lift_cofactor_sign<K>(pos, q, row) : os;
        if (c != 0) return c * os * cs > 0 ? 1 : -1;
    }
    throw DegeneracyError("facet power test: fully degenerate configuration");
}

}  // namespace detail

inline int facet_power_conflict(const Vec2* pos, const Real* w, const int* gid, const Vec2& q,
                                Real wq, int gq) {
    // project edge + collinear query to the dominant axis
    Vec2 d = pos[1] - pos[0];
    int axis = std::fabs(d[0]) >= std::fabs(d[1]) ? 0 : 1;
    Vec<1, Real> p1[2] = {{}, {}};
    p1[0][0] = pos[0][axis];
    p1[1][0] = pos[1][axis];
    Vec<1, Real> q1;
    q1[0] = q[axis];
    return detail::subspace_power_conflict<1>(p1, w, gid, q1, wq, gq);
}

inline int facet_power_conflict(const Vec3* pos, const Real* w, const int* gid, const Vec3& q,
                                Real wq, int gq) {
    Vec3 n = cross(pos[1] - pos[0], pos[2] - pos[0]);
    int axis = 0;
    for (int j = 1; j < 3; ++j)
        if (std::fabs(n[j]) > std::fabs(n[axis])) axis = j;
    Vec2 p2[3];
    Vec2 q2;
    int a = (axis + 1) % 3, b = (axis + 2) % 3;
    for (int i = 0; i < 3; ++i) p2[i] = Vec2(pos[i][a], pos[i][b]);
    q2 = Vec2(q[a], q[b]);
    return detail::subspace_power_conflict<2>(p2, w, gid, q2, wq, gq);
}

}  // namespace dmesh
