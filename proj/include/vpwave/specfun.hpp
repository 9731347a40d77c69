#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <vector>

namespace vpwave {

// First zero of J0, frozen from a high-precision series bisection.
inline constexpr double kJ0FirstZero = 2.404825557695773;

// Zero-order Bessel function of the first kind. Absolute error <= 1e-10 for
// |x| <= 1e4; even in x. Throws NonFiniteInput on NaN/inf.
double bessel_j0(double x);

// Extended-precision core used by the ODE oracle, where finite differencing
// divides by h^2 and double rounding in the function values would dominate.
long double bessel_j0_ext(long double x);

// Rising factorial a(a+1)...(a+k-1); 1 for k = 0.
double pochhammer(double a, unsigned k);

// F(-m, 1, x) truncates to a degree-m polynomial with coefficient
// (-m)_k / (k! * (1)_k). Coefficients are kept as exact rationals and the
// polynomial is evaluated by Horner's rule in long double.
struct KummerPolynomial {
    int order = 0;
    std::vector<boost::multiprecision::cpp_rational> coefficients;

    static const KummerPolynomial& get(int m);  // cached; throws OrderTooLarge
    long double eval(long double x) const;
    long double eval_deriv(long double x) const;

  private:
    std::vector<long double> horner_;     // coefficients rounded once for evaluation
    std::vector<__float128> horner_q_;    // quad copies; high orders are too
                                          // ill-conditioned for long double
    static KummerPolynomial make(int m);
};

inline constexpr int kKummerOrderCap = 64;

// F(-m, 1, x) for m in [0, 64]. Throws OrderTooLarge beyond the cap.
double kummer(int m, double x);

}  // namespace vpwave
