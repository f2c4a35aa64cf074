#pragma once

#include <cmath>
#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

namespace koblab {

using cplx = std::complex<double>;
using CSpan = std::span<const cplx>;

/// A point of C^n stored as n complex coordinates.
struct ComplexPoint {
    std::vector<cplx> coords;

    ComplexPoint() = default;
    explicit ComplexPoint(std::vector<cplx> c) : coords(std::move(c)) {}
    ComplexPoint(std::initializer_list<cplx> c) : coords(c) {}
    explicit ComplexPoint(CSpan c) : coords(c.begin(), c.end()) {}

    std::size_t dim() const noexcept { return coords.size(); }
    const cplx& operator[](std::size_t i) const { return coords[i]; }
    cplx& operator[](std::size_t i) { return coords[i]; }
    operator CSpan() const noexcept { return coords; }

    bool finite() const noexcept {
        for (const auto& c : coords)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
        return !coords.empty();
    }

    friend bool operator==(const ComplexPoint&, const ComplexPoint&) = default;
};

/// Tangent vector (z; v) with v a nonzero direction at z.
struct TangentVector {
    ComplexPoint base;
    ComplexPoint dir;
};

inline double norm2(CSpan z) {
    double s = 0.0;
    for (const auto& c : z) s += std::norm(c);
    return s;
}

inline double norm(CSpan z) { return std::sqrt(norm2(z)); }

inline double distance(CSpan a, CSpan b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

/// Hermitian product <a, b> = sum a_j conj(b_j).
inline cplx inner(CSpan a, CSpan b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

inline ComplexPoint operator+(const ComplexPoint& a, const ComplexPoint& b) {
    ComplexPoint r = a;
    for (std::size_t i = 0; i < r.dim(); ++i) r[i] += b[i];
    return r;
}

inline ComplexPoint operator-(const ComplexPoint& a, const ComplexPoint& b) {
    ComplexPoint r = a;
    for (std::size_t i = 0; i < r.dim(); ++i) r[i] -= b[i];
    return r;
}

inline ComplexPoint operator*(cplx s, const ComplexPoint& a) {
    ComplexPoint r = a;
    for (auto& c : r.coords) c *= s;
    return r;
}

inline bool all_zero(CSpan v) {
    for (const auto& c : v)
        if (c != cplx(0.0)) return false;
    return true;
}

}  // namespace koblab
