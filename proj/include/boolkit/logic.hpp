#ifndef BOOLKIT_LOGIC_HPP
#define BOOLKIT_LOGIC_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

// Mixed three-valued logic over {TRUE, ZERO, FALSE} and its interaction with
// real values. Boolean weights embed as TRUE -> +1, FALSE -> -1; a real value
// carries its sign as a logic value and its absolute value as a magnitude.
// All functions here are pure and safe to call concurrently.

namespace boolkit {

enum class Trilean : std::int8_t { False = -1, Zero = 0, True = 1 };

enum class BoolWeight : std::uint8_t { False = 0, True = 1 };

inline Trilean negate(Trilean t) {
    return static_cast<Trilean>(-static_cast<std::int8_t>(t));
}

inline BoolWeight negate(BoolWeight w) {
    return w == BoolWeight::True ? BoolWeight::False : BoolWeight::True;
}

inline int magnitude(Trilean t) { return t == Trilean::Zero ? 0 : 1; }

/// Embedding e(w): TRUE -> +1, FALSE -> -1.
inline double embed(BoolWeight w) { return w == BoolWeight::True ? 1.0 : -1.0; }

inline Trilean to_trilean(BoolWeight w) {
    return w == BoolWeight::True ? Trilean::True : Trilean::False;
}

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

/// Logic projector p(x): sign of x as a logic value. Exact zero (including
/// -0.0) maps to ZERO.
inline Trilean project(double x) {
    require_finite(x, "project");
    if (x > 0.0) return Trilean::True;
    if (x < 0.0) return Trilean::False;
    return Trilean::Zero;
}

/// xnor over the three-valued domain.
inline Trilean xnor(Trilean a, Trilean b) {
    return static_cast<Trilean>(static_cast<std::int8_t>(a) * static_cast<std::int8_t>(b));
}

/// Mixed xnor between a Boolean weight and a real: keeps the magnitude of x
/// and combines the logic values, which collapses to e(w) * x.
inline double xnor_mixed(BoolWeight w, double x) {
    require_finite(x, "xnor_mixed");
    return w == BoolWeight::True ? x : -x;
}

inline double xor_mixed(BoolWeight w, double x) {
    require_finite(x, "xor_mixed");
    return -xnor_mixed(w, x);
}

/// Weight-update test: a weight flips when the update signal and the weight
/// share the same logic value, i.e. xnor(p(q), w) = TRUE. A zero signal never
/// flips.
inline bool flip_decision(double q_signal, BoolWeight w) {
    require_finite(q_signal, "flip_decision");
    return project(q_signal) == to_trilean(w);
}

}  // namespace boolkit

#endif
