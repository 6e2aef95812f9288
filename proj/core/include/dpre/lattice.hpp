#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dpre {

inline constexpr int kMaxDim = 6;

using Point = std::array<int, kMaxDim>;

// Axis-aligned integer box [lo_i, hi_i] in Z^d, row-major with the last axis
// fastest.
class Box {
public:
    Box() = default;
    Box(int d, const Point& lo, const Point& hi);

    static Box cube(int d, int radius);
    static Box point(int d);

    int dim() const { return d_; }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }
    int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }
    std::size_t size() const { return size_; }
    std::int64_t stride(int axis) const { return stride_[axis]; }
    bool empty() const { return size_ == 0; }

    bool contains(const int* x) const;
    std::size_t index(const int* x) const;
    void coords(std::size_t idx, int* x) const;

    // Minkowski sum with another box, i.e. every y + z.
    Box dilate(const Box& other) const;
    Box intersect(const Box& other) const;

    bool operator==(const Box& other) const;

private:
    void finish();

    int d_ = 0;
    Point lo_{};
    Point hi_{};
    std::array<std::int64_t, kMaxDim> stride_{};
    std::size_t size_ = 0;
};

// Visits every cell of a box in row-major order, keeping coordinates current.
class BoxCursor {
public:
    explicit BoxCursor(const Box& box);
    bool valid() const { return valid_; }
    std::size_t index() const { return index_; }
    const int* coords() const { return x_.data(); }
    void next();

private:
    const Box* box_;
    Point x_{};
    std::size_t index_ = 0;
    bool valid_ = false;
};

// Dense real-valued array over a box.
struct Grid {
    Box box;
    std::vector<double> values;

    Grid() = default;
    Grid(const Box& b, double fill) : box(b), values(b.size(), fill) {}

    double at(const int* x) const { return box.contains(x) ? values[box.index(x)] : 0.0; }
    double sum() const;
    double sum_squares() const;
    double max() const;
};

}  // namespace dpre
