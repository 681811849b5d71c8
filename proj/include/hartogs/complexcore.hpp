#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "hartogs/errors.hpp"

namespace hartogs {

using Complex = std::complex<double>;

inline bool is_finite(Complex z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// A point of C^n, immutable after construction. Coordinates are kept finite;
// NaN/Inf never enter downstream computations.
class ComplexPoint {
  public:
    ComplexPoint() = default;

    explicit ComplexPoint(std::vector<Complex> coords) : coords_(std::move(coords)) {
        if (coords_.empty())
            throw Error("ComplexPoint requires at least one coordinate");
        for (const Complex& c : coords_)
            if (!is_finite(c))
                throw Error("ComplexPoint coordinates must be finite");
    }

    ComplexPoint(std::initializer_list<Complex> coords)
        : ComplexPoint(std::vector<Complex>(coords)) {}

    static ComplexPoint zero(int n) {
        return ComplexPoint(std::vector<Complex>(static_cast<std::size_t>(n)));
    }

    int dim() const { return static_cast<int>(coords_.size()); }

    // 0-based component access; the 1-based slot convention lives in the
    // projection operations below.
    Complex operator[](int idx) const { return coords_[static_cast<std::size_t>(idx)]; }

    const std::vector<Complex>& coords() const { return coords_; }

    bool operator==(const ComplexPoint& other) const = default;

  private:
    std::vector<Complex> coords_;
};

inline void check_slot(int slot, int n) {
    if (slot < 1 || slot > n)
        throw Error("coordinate index " + std::to_string(slot) + " out of range 1.." +
                    std::to_string(n));
}

// pi_i: the i-th coordinate, slots counted from 1.
inline Complex project_component(int slot, const ComplexPoint& z) {
    check_slot(slot, z.dim());
    return z[slot - 1];
}

// pi^i: drop the i-th coordinate, order preserved. Requires n >= 2.
inline ComplexPoint project_skip(int slot, const ComplexPoint& z) {
    if (z.dim() < 2)
        throw Error("project_skip requires dimension >= 2");
    check_slot(slot, z.dim());
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(z.dim() - 1));
    for (int k = 0; k < z.dim(); ++k)
        if (k != slot - 1) out.push_back(z[k]);
    return ComplexPoint(std::move(out));
}

// Inverse of project_skip: insert w so that it becomes the slot-th coordinate.
inline ComplexPoint insert_at(const ComplexPoint& zp, int slot, Complex w) {
    check_slot(slot, zp.dim() + 1);
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(zp.dim() + 1));
    for (int k = 0; k < slot - 1; ++k) out.push_back(zp[k]);
    out.push_back(w);
    for (int k = slot - 1; k < zp.dim(); ++k) out.push_back(zp[k]);
    return ComplexPoint(std::move(out));
}

inline double sup_norm(const ComplexPoint& z) {
    double m = 0.0;
    for (const Complex& c : z.coords()) m = std::max(m, std::abs(c));
    return m;
}

inline double sup_distance(const ComplexPoint& a, const ComplexPoint& b) {
    if (a.dim() != b.dim())
        throw Error("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
    double m = 0.0;
    for (int k = 0; k < a.dim(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

// Open polydisc: sup-norm ball of strictly positive radius.
struct Polydisc {
    ComplexPoint center;
    double radius;

    Polydisc(ComplexPoint c, double r) : center(std::move(c)), radius(r) {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw Error("polydisc radius must be strictly positive");
    }

    int dim() const { return center.dim(); }

    // Strict inequality; boundary points are outside.
    bool contains(const ComplexPoint& z) const { return sup_distance(z, center) < radius; }

    // Closure, for sets given as closed polydiscs.
    bool contains_closed(const ComplexPoint& z) const {
        return sup_distance(z, center) <= radius;
    }
};

inline bool polydisc_contains(const Polydisc& d, const ComplexPoint& z) {
    return d.contains(z);
}

std::string format_complex(Complex z);
std::string format_point(const ComplexPoint& z);

}  // namespace hartogs
