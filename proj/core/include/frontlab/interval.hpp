#pragma once

#include <algorithm>
#include <cmath>

namespace frontlab {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool valid() const { return lo < hi; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    bool contains(const Interval& other) const { return other.lo >= lo && other.hi <= hi; }
    bool empty() const { return hi < lo; }

    static Interval hull(const Interval& a, const Interval& b) {
        return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    }
};

}
