#pragma once

#include <string>

namespace vpwave {

// Dimensioned scalar over the (currency, share, time) basis. Addition requires
// matching exponents, multiplication adds them, so dimensional mistakes in the
// transaction-dynamics formulas fail to compile instead of producing numbers.
template <int Cur, int Sh, int Tm>
struct Quantity {
    double value{};

    constexpr Quantity() = default;
    constexpr explicit Quantity(double v) : value(v) {}

    constexpr Quantity operator+(Quantity o) const { return Quantity{value + o.value}; }
    constexpr Quantity operator-(Quantity o) const { return Quantity{value - o.value}; }
    constexpr Quantity operator-() const { return Quantity{-value}; }

    constexpr Quantity operator*(double s) const { return Quantity{value * s}; }
    constexpr Quantity operator/(double s) const { return Quantity{value / s}; }

    template <int C2, int S2, int T2>
    constexpr Quantity<Cur + C2, Sh + S2, Tm + T2> operator*(Quantity<C2, S2, T2> o) const {
        return Quantity<Cur + C2, Sh + S2, Tm + T2>{value * o.value};
    }
    template <int C2, int S2, int T2>
    constexpr Quantity<Cur - C2, Sh - S2, Tm - T2> operator/(Quantity<C2, S2, T2> o) const {
        return Quantity<Cur - C2, Sh - S2, Tm - T2>{value / o.value};
    }

    static std::string unit_label() {
        auto append = [](std::string& s, const char* name, int e) {
            if (e == 0) return;
            if (!s.empty()) s += "*";
            s += name;
            if (e != 1) s += "^" + std::to_string(e);
        };
        std::string s;
        append(s, "currency", Cur);
        append(s, "share", Sh);
        append(s, "s", Tm);
        return s.empty() ? "1" : s;
    }
};

template <int C, int S, int T>
constexpr Quantity<C, S, T> operator*(double s, Quantity<C, S, T> q) {
    return q * s;
}

using Dimensionless = Quantity<0, 0, 0>;
using PriceQ = Quantity<1, -1, 0>;              // currency per share
using SharesQ = Quantity<0, 1, 0>;
using SecondsQ = Quantity<0, 0, 1>;
using VolumeLiquidityQ = Quantity<0, 1, -1>;    // v_t = v/t
using VolumeAccelerationQ = Quantity<0, 1, -2>; // v_tt = v/t^2
using AmountLiquidityQ = Quantity<1, 0, -1>;    // m_t = p*v_t
using EnergyQ = Quantity<1, 0, -2>;             // E = p*v_tt; potential W shares this dimension
using ForceQ = Quantity<0, 1, -2>;              // F_R, F_T

}  // namespace vpwave
