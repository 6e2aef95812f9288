#include "dpre/lattice.hpp"

#include <algorithm>

#include "dpre/errors.hpp"

namespace dpre {

Box::Box(int d, const Point& lo, const Point& hi) : d_(d), lo_(lo), hi_(hi) {
    if (d < 1 || d > kMaxDim) throw ValidationError("dimension must be in [1, 6]");
    finish();
}

Box Box::cube(int d, int radius) {
    Point lo{}, hi{};
    for (int i = 0; i < d; ++i) {
        lo[i] = -radius;
        hi[i] = radius;
    }
    return Box(d, lo, hi);
}

Box Box::point(int d) { return cube(d, 0); }

void Box::finish() {
    size_ = 1;
    for (int i = d_ - 1; i >= 0; --i) {
        stride_[i] = static_cast<std::int64_t>(size_);
        if (hi_[i] < lo_[i]) {
            size_ = 0;
            return;
        }
        size_ *= static_cast<std::size_t>(hi_[i] - lo_[i] + 1);
    }
}

bool Box::contains(const int* x) const {
    if (size_ == 0) return false;
    for (int i = 0; i < d_; ++i)
        if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    return true;
}

std::size_t Box::index(const int* x) const {
    std::int64_t idx = 0;
    for (int i = 0; i < d_; ++i) idx += (x[i] - lo_[i]) * stride_[i];
    return static_cast<std::size_t>(idx);
}

void Box::coords(std::size_t idx, int* x) const {
    auto r = static_cast<std::int64_t>(idx);
    for (int i = 0; i < d_; ++i) {
        x[i] = lo_[i] + static_cast<int>(r / stride_[i]);
        r %= stride_[i];
    }
}

Box Box::dilate(const Box& other) const {
    Point lo{}, hi{};
    for (int i = 0; i < d_; ++i) {
        lo[i] = lo_[i] + other.lo_[i];
        hi[i] = hi_[i] + other.hi_[i];
    }
    return Box(d_, lo, hi);
}

Box Box::intersect(const Box& other) const {
    Point lo{}, hi{};
    for (int i = 0; i < d_; ++i) {
        lo[i] = std::max(lo_[i], other.lo_[i]);
        hi[i] = std::min(hi_[i], other.hi_[i]);
    }
    return Box(d_, lo, hi);
}

bool Box::operator==(const Box& other) const {
    if (d_ != other.d_) return false;
    for (int i = 0; i < d_; ++i)
        if (lo_[i] != other.lo_[i] || hi_[i] != other.hi_[i]) return false;
    return true;
}

BoxCursor::BoxCursor(const Box& box) : box_(&box), x_(box.lo()), valid_(!box.empty()) {}

void BoxCursor::next() {
    ++index_;
    for (int i = box_->dim() - 1; i >= 0; --i) {
        if (++x_[i] <= box_->hi()[i]) return;
        x_[i] = box_->lo()[i];
    }
    valid_ = false;
}

double Grid::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

double Grid::sum_squares() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
}

double Grid::max() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

}  // namespace dpre
