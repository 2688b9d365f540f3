#pragma once

#include <cassert>
#include <cmath>
#include <vector>

#include "dmesh/core.hpp"

namespace dmesh {

// Reverse-mode scalar tape for the small per-face / per-edge gradient graphs.
// The combinatorial choices (which plane binds, which neighbor is nearest)
// are made on plain doubles first; the tape then records only the selected
// smooth expression, so graphs stay at a few dozen nodes. At kinks this
// yields the one-sided subgradient of the selected branch.
class Tape {
public:
    struct Node {
        std::int32_t a, b;  // parent ids, -1 = none
        Real da, db;        // local partials
    };

    void clear() {
        vals_.clear();
        nodes_.clear();
        adj_.clear();
    }

    std::size_t size() const { return vals_.size(); }

    int leaf(Real v) {
        vals_.push_back(v);
        nodes_.push_back({-1, -1, 0.0, 0.0});
        return static_cast<int>(vals_.size()) - 1;
    }

    int unary(int a, Real v, Real da) {
        vals_.push_back(v);
        nodes_.push_back({static_cast<std::int32_t>(a), -1, da, 0.0});
        return static_cast<int>(vals_.size()) - 1;
    }

    int binary(int a, int b, Real v, Real da, Real db) {
        vals_.push_back(v);
        nodes_.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b), da, db});
        return static_cast<int>(vals_.size()) - 1;
    }

    Real value(int i) const { return vals_[i]; }

    // Accumulates d(root)/d(node i) for every node into the adjoint buffer.
    void backward(int root) {
        adj_.assign(vals_.size(), 0.0);
        if (root < 0) return;
        adj_[root] = 1.0;
        for (int i = static_cast<int>(vals_.size()) - 1; i >= 0; --i) {
            Real g = adj_[i];
            if (g == 0.0) continue;
            const Node& n = nodes_[i];
            if (n.a >= 0) adj_[n.a] += n.da * g;
            if (n.b >= 0) adj_[n.b] += n.db * g;
        }
    }

    Real adjoint(int i) const { return i >= 0 ? adj_[i] : 0.0; }

private:
    std::vector<Real> vals_;
    std::vector<Node> nodes_;
    std::vector<Real> adj_;
};

// Tape-backed scalar. id < 0 means a constant that no gradient flows through.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
    Real v = 0.0;

    Var() = default;
    Var(Real c) : v(c) {}  // implicit: constants mix freely with variables
    Var(Tape* t, int i, Real val) : tape(t), id(i), v(val) {}

    explicit operator Real() const { return v; }
};

inline Var make_var(Tape& t, Real v) { return Var(&t, t.leaf(v), v); }

namespace detail {
inline Tape* tape_of(const Var& a, const Var& b) { return a.tape ? a.tape : b.tape; }
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    Real v = a.v + b.v;
    if (!t || (a.id < 0 && b.id < 0)) return Var(v);
    return Var(t, t->binary(a.id, b.id, v, 1.0, 1.0), v);
}

inline Var operator-(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    Real v = a.v - b.v;
    if (!t || (a.id < 0 && b.id < 0)) return Var(v);
    return Var(t, t->binary(a.id, b.id, v, 1.0, -1.0), v);
}

inline Var operator*(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    Real v = a.v * b.v;
    if (!t || (a.id < 0 && b.id < 0)) return Var(v);
    return Var(t, t->binary(a.id, b.id, v, b.v, a.v), v);
}

inline Var operator/(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    Real v = a.v / b.v;
    if (!t || (a.id < 0 && b.id < 0)) return Var(v);
    return Var(t, t->binary(a.id, b.id, v, 1.0 / b.v, -a.v / (b.v * b.v)), v);
}

inline Var operator-(const Var& a) {
    if (!a.tape || a.id < 0) return Var(-a.v);
    return Var(a.tape, a.tape->unary(a.id, -a.v, -1.0), -a.v);
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }

inline Var sqrt(const Var& a) {
    Real v = std::sqrt(a.v);
    if (!a.tape || a.id < 0) return Var(v);
    return Var(a.tape, a.tape->unary(a.id, v, 0.5 / v), v);
}

inline Var exp(const Var& a) {
    Real v = std::exp(a.v);
    if (!a.tape || a.id < 0) return Var(v);
    return Var(a.tape, a.tape->unary(a.id, v, v), v);
}

inline Var log(const Var& a) {
    Real v = std::log(a.v);
    if (!a.tape || a.id < 0) return Var(v);
    return Var(a.tape, a.tape->unary(a.id, v, 1.0 / a.v), v);
}

inline Var abs(const Var& a) {
    Real s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
    if (!a.tape || a.id < 0) return Var(std::fabs(a.v));
    return Var(a.tape, a.tape->unary(a.id, std::fabs(a.v), s), std::fabs(a.v));
}

inline Var fabs(const Var& a) { return abs(a); }

// value-driven select: no node, exact one-sided subgradient
inline Var min(const Var& a, const Var& b) { return a.v <= b.v ? a : b; }
inline Var max(const Var& a, const Var& b) { return a.v >= b.v ? a : b; }

inline Var sigmoid(const Var& a) {
    // stable in both tails
    Real v = a.v >= 0.0 ? 1.0 / (1.0 + std::exp(-a.v)) : std::exp(a.v) / (1.0 + std::exp(a.v));
    if (!a.tape || a.id < 0) return Var(v);
    return Var(a.tape, a.tape->unary(a.id, v, v * (1.0 - v)), v);
}

inline Real sigmoid(Real x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline Real value_of(Real x) { return x; }
inline Real value_of(const Var& x) { return x.v; }

}  // namespace dmesh
