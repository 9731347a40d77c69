#include "vpwave/specfun.hpp"

#include "vpwave/errors.hpp"

#include <array>
#include <cmath>
#include <mutex>

namespace vpwave {

namespace {

// Hankel asymptotic expansion J0(x) ~ sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)],
// P and Q in powers of 1/x^2 with coefficients (-1)^k a_{2k} and (-1)^k a_{2k+1},
// a_m = (-1)^m ((2m-1)!!)^2 / (m! 8^m). Thirteen terms each: the first omitted
// term at x = 12 is ~6e-12, decaying as x^-26 beyond, so the branch agrees with
// the series branch to well under 1e-11 at the seam.
constexpr std::array<long double, 13> kAsymP = {
    1.0L,
    -0.0703125L,
    0.112152099609375L,
    -0.5725014209747314453125L,
    6.074042001273483037948608L,
    -110.0171402692467381712049L,
    3038.090510922384268610585L,
    -118838.4262567832531237721L,
    6252951.493434797002466522L,
    -425939216.5047669051886949L,
    36468400807.06555853463219L,
    -3833534661393.944467161431L,
    485401468685290.0599840974L,
};
constexpr std::array<long double, 13> kAsymQ = {
    -0.125L,
    0.0732421875L,
    -0.227108001708984375L,
    1.727727502584457397460938L,
    -24.38052969955606386065483L,
    551.3358961220205856079701L,
    -18257.75547429317469116938L,
    832859.3040162892989757698L,
    -50069589.53198892599769149L,
    3836255180.230433507916601L,
    -364901081884.9833565280757L,
    42189715702840.96492392336L,
    -5827244631566907.170109089L,
};

constexpr long double kSeam = 12.0L;
constexpr long double kPi = 3.141592653589793238462643383279502884L;

long double j0_series(long double x) {
    const long double q = x * x / 4.0L;
    long double term = 1.0L, sum = 1.0L;
    for (int k = 1; k <= 120; ++k) {
        term *= -q / (static_cast<long double>(k) * k);
        sum += term;
        if (std::fabs(term) < 1e-24L * std::fabs(sum) + 1e-30L) break;
    }
    return sum;
}

// Series in quad precision. The terms alternate with peak magnitude near
// e^x scale, so the cancellation noise is ~eps * I0(x); long double leaves
// ~1e-15 at x = 12, which an h = 1e-4 second-difference stencil would blow
// up to 1e-6. Quad keeps the pointwise noise below 1e-26 up to x = 20.
constexpr long double kSeamExt = 20.0L;

long double j0_series_quad(long double x) {
    const __float128 q = static_cast<__float128>(x) * x / 4;
    __float128 term = 1, sum = 1;
    for (int k = 1; k <= 160; ++k) {
        term *= -q / (static_cast<__float128>(k) * k);
        sum += term;
        const long double t = static_cast<long double>(term);
        if (std::fabs(t) < 1e-40L) break;
    }
    return static_cast<long double>(sum);
}

long double j0_asymptotic(long double x) {
    const long double ix2 = 1.0L / (x * x);
    long double p = 0.0L, q = 0.0L;
    for (int k = 12; k >= 0; --k) p = p * ix2 + kAsymP[static_cast<std::size_t>(k)];
    for (int k = 12; k >= 0; --k) q = q * ix2 + kAsymQ[static_cast<std::size_t>(k)];
    q /= x;
    const long double chi = x - kPi / 4.0L;
    return std::sqrt(2.0L / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

long double bessel_j0_ext(long double x) {
    // seam at 20: the 13-term asymptotic truncation is ~(12/x)^26 of its
    // ~6e-12 value at 12, i.e. ~1e-18 there, below long double resolution
    x = std::fabs(x);
    return x <= kSeamExt ? j0_series_quad(x) : j0_asymptotic(x);
}

double bessel_j0(double x) {
    if (!std::isfinite(x)) throw NonFiniteInput();
    const long double ax = std::fabs(static_cast<long double>(x));
    return static_cast<double>(ax <= kSeam ? j0_series(ax) : j0_asymptotic(ax));
}

double pochhammer(double a, unsigned k) {
    double r = 1.0;
    for (unsigned i = 0; i < k; ++i) r *= a + static_cast<double>(i);
    return r;
}

KummerPolynomial KummerPolynomial::make(int m) {
    using boost::multiprecision::cpp_rational;
    KummerPolynomial poly;
    poly.order = m;
    poly.coefficients.reserve(static_cast<std::size_t>(m) + 1);
    cpp_rational c = 1;
    poly.coefficients.push_back(c);
    for (int k = 1; k <= m; ++k) {
        // c_k = c_{k-1} * (-(m - k + 1)) / k^2, i.e. (-m)_k / (k! (1)_k)
        c *= cpp_rational(-(m - k + 1), static_cast<long long>(k) * k);
        poly.coefficients.push_back(c);
    }
    poly.horner_.reserve(poly.coefficients.size());
    poly.horner_q_.reserve(poly.coefficients.size());
    for (const auto& r : poly.coefficients) {
        const long double hi = static_cast<long double>(r);
        const long double lo = static_cast<long double>(r - cpp_rational(hi));
        poly.horner_.push_back(hi);
        poly.horner_q_.push_back(static_cast<__float128>(hi) + static_cast<__float128>(lo));
    }
    return poly;
}

const KummerPolynomial& KummerPolynomial::get(int m) {
    if (m < 0 || m > kKummerOrderCap) throw OrderTooLarge(m);
    static std::array<KummerPolynomial, kKummerOrderCap + 1> cache;
    static std::once_flag once;
    std::call_once(once, [] {
        for (int i = 0; i <= kKummerOrderCap; ++i) cache[static_cast<std::size_t>(i)] = make(i);
    });
    return cache[static_cast<std::size_t>(m)];
}

// Above this order the alternating terms cancel past what long double can
// absorb (condition ~1e16 by m = 64), so Horner runs in quad. The fit ladder
// only ever evaluates m <= 3, which stays on the fast path.
constexpr int kQuadHornerMin = 4;

long double KummerPolynomial::eval(long double x) const {
    if (order >= kQuadHornerMin) {
        const __float128 xq = x;
        __float128 v = 0;
        for (auto it = horner_q_.rbegin(); it != horner_q_.rend(); ++it) v = v * xq + *it;
        return static_cast<long double>(v);
    }
    long double v = 0.0L;
    for (auto it = horner_.rbegin(); it != horner_.rend(); ++it) v = v * x + *it;
    return v;
}

long double KummerPolynomial::eval_deriv(long double x) const {
    if (order >= kQuadHornerMin) {
        const __float128 xq = x;
        __float128 v = 0;
        for (std::size_t k = horner_q_.size(); k-- > 1;)
            v = v * xq + static_cast<__float128>(static_cast<long double>(k)) * horner_q_[k];
        return static_cast<long double>(v);
    }
    long double v = 0.0L;
    for (std::size_t k = horner_.size(); k-- > 1;)
        v = v * x + static_cast<long double>(k) * horner_[k];
    return v;
}

double kummer(int m, double x) {
    return static_cast<double>(KummerPolynomial::get(m).eval(static_cast<long double>(x)));
}

}  // namespace vpwave
