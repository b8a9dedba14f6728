#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace pvd {

/// Branch-free exp for the sigmoid hot path. Cephes-style rational
/// approximation plus exponent assembly, accurate to a couple of ulps and
/// fully deterministic (plain arithmetic, no libm dispatch). Arguments are
/// clamped to [-708, 709]; outside that range a sigmoid is 0 or 1 to double
/// precision anyway, so the clamp is invisible to callers.
inline double fast_exp(double x) {
    x = x > 709.0 ? 709.0 : (x < -708.0 ? -708.0 : x);
    const double n = std::floor(x * 1.4426950408889634 + 0.5);  // round(x / ln 2)
    double r = x - n * 0.693145751953125;        // ln2 high part
    r -= n * 1.42860682030941723212e-6;          // ln2 low part
    const double rr = r * r;
    // e^r = 1 + 2 r P(r^2) / (Q(r^2) - r P(r^2)) on [-ln2/2, ln2/2]
    const double p =
        r * ((1.26177193074810590878e-4 * rr + 3.02994407707441961300e-2) * rr +
             9.99999999999999999910e-1);
    const double q = ((3.00198505138664455042e-6 * rr + 2.52448340349684104192e-3) * rr +
                      2.27265548208155028766e-1) *
                         rr +
                     2.0;
    const double e_r = 1.0 + 2.0 * p / (q - p);
    // Scale by 2^n via direct exponent assembly; n is in [-1022, 1023].
    const std::int64_t bits = (static_cast<std::int64_t>(n) + 1023) << 52;
    double scale;
    std::memcpy(&scale, &bits, 8);
    return e_r * scale;
}

/// Logistic function evaluated through fast_exp; stable on both tails.
inline double fast_sigmoid(double z) {
    const double e = fast_exp(z >= 0.0 ? -z : z);
    const double t = e / (1.0 + e);
    return z >= 0.0 ? 1.0 - t : t;
}

}  // namespace pvd
