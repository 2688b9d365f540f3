#pragma once

#include <algorithm>
#include <vector>

#include "dmesh/core.hpp"

namespace dmesh {

// Uniform bucket grid over the unit box for nearest-neighbor queries.
// Points slightly outside the box are clamped into the border cells.
template <int D>
class UniformGrid {
public:
    UniformGrid() = default;

    explicit UniformGrid(const std::vector<Vec<D, Real>>& pts, int resolution = 0) { build(pts, resolution); }

    void build(const std::vector<Vec<D, Real>>& pts, int resolution = 0) {
        pts_ = &pts;
        std::size_t n = pts.size();
        if (resolution <= 0) {
            resolution = static_cast<int>(std::ceil(std::pow(static_cast<Real>(std::max<std::size_t>(n, 1)), 1.0 / D) / 2.0));
        }
        res_ = std::clamp(resolution, 1, 256);
        std::size_t ncells = 1;
        for (int i = 0; i < D; ++i) ncells *= static_cast<std::size_t>(res_);
        cell_start_.assign(ncells + 1, 0);
        order_.resize(n);
        std::vector<int> key(n);
        for (std::size_t i = 0; i < n; ++i) {
            key[i] = cell_key(pts[i]);
            cell_start_[key[i] + 1]++;
        }
        for (std::size_t c = 1; c < cell_start_.size(); ++c) cell_start_[c] += cell_start_[c - 1];
        std::vector<int> cursor(cell_start_.begin(), cell_start_.end() - 1);
        for (std::size_t i = 0; i < n; ++i) order_[cursor[key[i]]++] = static_cast<int>(i);
    }

    // k nearest neighbors of q by Euclidean distance, excluding `exclude`;
    // results sorted nearest-first
    void knn(const Vec<D, Real>& q, int k, int exclude, std::vector<int>& out) const {
        out.clear();
        if (!pts_ || pts_->empty() || k <= 0) return;
        const auto& pts = *pts_;
        // (dist2, idx) max-heap of current best
        std::vector<std::pair<Real, int>> best;
        best.reserve(k + 1);
        auto push = [&](int i) {
            if (i == exclude) return;
            Real d2 = norm2(pts[i] - q);
            if (static_cast<int>(best.size()) < k) {
                best.emplace_back(d2, i);
                std::push_heap(best.begin(), best.end());
            } else if (d2 < best.front().first) {
                std::pop_heap(best.begin(), best.end());
                best.back() = {d2, i};
                std::push_heap(best.begin(), best.end());
            }
        };
        std::array<int, D> c = cell_coords(q);
        Real cell_w = 1.0 / res_;
        for (int ring = 0; ring < res_ + 1; ++ring) {
            visit_ring(c, ring, [&](std::size_t key) {
                for (int j = cell_start_[key]; j < cell_start_[key + 1]; ++j) push(order_[j]);
            });
            if (static_cast<int>(best.size()) == k) {
                Real safe = static_cast<Real>(ring) * cell_w;  // covered L-inf radius
                if (best.front().first <= safe * safe) break;
            }
        }
        std::sort(best.begin(), best.end());
        out.reserve(best.size());
        for (auto& [d2, i] : best) out.push_back(i);
    }

    int nearest(const Vec<D, Real>& q, int exclude = -1) const {
        std::vector<int> tmp;
        knn(q, 1, exclude, tmp);
        return tmp.empty() ? -1 : tmp[0];
    }

private:
    const std::vector<Vec<D, Real>>* pts_ = nullptr;
    int res_ = 1;
    std::vector<int> cell_start_;
    std::vector<int> order_;

    std::array<int, D> cell_coords(const Vec<D, Real>& p) const {
        std::array<int, D> c;
        for (int i = 0; i < D; ++i)
            c[i] = std::clamp(static_cast<int>(p[i] * res_), 0, res_ - 1);
        return c;
    }

    int cell_key(const Vec<D, Real>& p) const {
        auto c = cell_coords(p);
        int key = 0;
        for (int i = 0; i < D; ++i) key = key * res_ + c[i];
        return key;
    }

    template <class F>
    void visit_ring(const std::array<int, D>& c, int ring, F&& f) const {
        // cells at L-inf distance exactly `ring`
        std::array<int, D> lo, hi;
        for (int i = 0; i < D; ++i) {
            lo[i] = c[i] - ring;
            hi[i] = c[i] + ring;
        }
        std::array<int, D> it = lo;
        while (true) {
            bool on_shell = false;
            bool valid = true;
            for (int i = 0; i < D; ++i) {
                if (it[i] == lo[i] || it[i] == hi[i]) on_shell = true;
                if (it[i] < 0 || it[i] >= res_) valid = false;
            }
            if ((ring == 0 || on_shell) && valid) {
                int key = 0;
                for (int i = 0; i < D; ++i) key = key * res_ + it[i];
                f(static_cast<std::size_t>(key));
            }
            int axis = D - 1;
            while (axis >= 0) {
                if (++it[axis] <= hi[axis]) break;
                it[axis] = lo[axis];
                --axis;
            }
            if (axis < 0) break;
        }
    }
};

}  // namespace dmesh
