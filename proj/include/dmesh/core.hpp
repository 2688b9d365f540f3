#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dmesh {

using Real = double;

// Equality tolerance for geometric identities (bisector membership, dual
// form residuals). Predicates that decide combinatorics do not use it.
inline constexpr Real kTolEq = 1e-9;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (dimension mismatch, overlapping
// face sets, intersecting inputs on the disjoint-only path, ...).
struct ContractError : Error {
    using Error::Error;
};

// Geometrically degenerate input: coincident pair, affinely dependent
// simplex, all-collinear point set, flat cell.
struct DegeneracyError : Error {
    using Error::Error;
};

struct EmptyCellError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small fixed-size vector, generic over the scalar so the same geometric
// formulas run on plain doubles and on autodiff variables.

template <int D, class T = Real>
struct Vec {
    std::array<T, D> v{};

    Vec() = default;
    Vec(T x, T y) requires(D == 2) : v{x, y} {}
    Vec(T x, T y, T z) requires(D == 3) : v{x, y, z} {}

    T& operator[](int i) { return v[i]; }
    const T& operator[](int i) const { return v[i]; }

    Vec operator+(const Vec& o) const {
        Vec r;
        for (int i = 0; i < D; ++i) r.v[i] = v[i] + o.v[i];
        return r;
    }
    Vec operator-(const Vec& o) const {
        Vec r;
        for (int i = 0; i < D; ++i) r.v[i] = v[i] - o.v[i];
        return r;
    }
    Vec operator*(const T& s) const {
        Vec r;
        for (int i = 0; i < D; ++i) r.v[i] = v[i] * s;
        return r;
    }
    Vec operator/(const T& s) const {
        Vec r;
        for (int i = 0; i < D; ++i) r.v[i] = v[i] / s;
        return r;
    }
    Vec operator-() const {
        Vec r;
        for (int i = 0; i < D; ++i) r.v[i] = -v[i];
        return r;
    }
    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < D; ++i) v[i] += o.v[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < D; ++i) v[i] -= o.v[i];
        return *this;
    }
    Vec& operator*=(const T& s) {
        for (int i = 0; i < D; ++i) v[i] *= s;
        return *this;
    }

    friend Vec operator*(const T& s, const Vec& a) { return a * s; }

    bool operator==(const Vec& o) const requires std::equality_comparable<T> { return v == o.v; }
};

template <int D, class T>
T dot(const Vec<D, T>& a, const Vec<D, T>& b) {
    T s = a.v[0] * b.v[0];
    for (int i = 1; i < D; ++i) s = s + a.v[i] * b.v[i];
    return s;
}

template <int D, class T>
T norm2(const Vec<D, T>& a) {
    return dot(a, a);
}

template <int D, class T>
T norm(const Vec<D, T>& a) {
    using std::sqrt;
    return sqrt(norm2(a));
}

template <class T>
Vec<3, T> cross(const Vec<3, T>& a, const Vec<3, T>& b) {
    return Vec<3, T>(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]);
}

// 90-degree rotation; in 2D the counterpart of a line direction from a normal.
template <class T>
Vec<2, T> perp(const Vec<2, T>& a) {
    return Vec<2, T>(-a[1], a[0]);
}

template <int D, class T>
Vec<D, T> normalized(const Vec<D, T>& a) {
    return a / norm(a);
}

using Vec2 = Vec<2, Real>;
using Vec3 = Vec<3, Real>;

template <int D>
Vec<D, Real> vec_fill(Real s) {
    Vec<D, Real> r;
    for (int i = 0; i < D; ++i) r[i] = s;
    return r;
}

// ---------------------------------------------------------------------------
// Domain box. Everything lives in [0,1]^D; power cells are clipped by the
// 2*D box planes so they stay bounded.

template <int D>
struct Box {
    Vec<D, Real> lo = vec_fill<D>(0.0);
    Vec<D, Real> hi = vec_fill<D>(1.0);

    bool contains(const Vec<D, Real>& p, Real slack = 0.0) const {
        for (int i = 0; i < D; ++i)
            if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
        return true;
    }
    Vec<D, Real> clamp(const Vec<D, Real>& p) const {
        Vec<D, Real> r = p;
        for (int i = 0; i < D; ++i) r[i] = std::min(hi[i], std::max(lo[i], r[i]));
        return r;
    }
    Real diagonal() const { return norm(hi - lo); }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. std:: distributions are implementation-defined, so all
// sampling that must be reproducible byte-for-byte goes through this.

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL) {
        state_ = seed;
        // decorrelate trivially related seeds
        (void)splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

    // uniform in [0, 1)
    Real uniform() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

    Real uniform(Real a, Real b) { return a + (b - a) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    // Box-Muller; one value per call keeps replay simple
    Real normal(Real mean = 0.0, Real stddev = 1.0) {
        Real u1 = uniform();
        Real u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        Real z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        return mean + stddev * z;
    }

    template <class T>
    void shuffle(std::vector<T>& a) {
        for (std::size_t i = a.size(); i > 1; --i) std::swap(a[i - 1], a[below(i)]);
    }

private:
    std::uint64_t state_;
};

// FNV-1a over raw bytes; used to derive deterministic seeds from inputs.
inline std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Chunked parallel_for over [0, n). Each worker owns a disjoint index range;
// callers that accumulate merge per-thread buffers in thread-index order so
// results do not depend on scheduling.

inline unsigned hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n ? n : 1;
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, unsigned)>& body,
                         unsigned max_threads = 0) {
    unsigned nt = max_threads ? std::min(max_threads, hardware_threads()) : hardware_threads();
    if (n == 0) return;
    if (nt <= 1 || n < 256) {
        body(0, n, 0);
        return;
    }
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, n));
    std::vector<std::thread> workers;
    workers.reserve(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t b = static_cast<std::size_t>(t) * chunk;
        std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        workers.emplace_back([&body, b, e, t] { body(b, e, t); });
    }
    for (auto& w : workers) w.join();
}

}  // namespace dmesh
