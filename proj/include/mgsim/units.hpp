#pragma once

#include <numbers>

// Config files use engineering units; everything past the loader is SI.
namespace mgsim::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double kw_to_w(double kw) { return kw * 1e3; }
constexpr double kvar_to_var(double kvar) { return kvar * 1e3; }
constexpr double kva_to_va(double kva) { return kva * 1e3; }
constexpr double hz_to_rad_s(double hz) { return two_pi * hz; }

// Hz/kW -> (rad/s)/W
constexpr double hz_per_kw_to_rad_s_per_w(double v) { return two_pi * v / 1e3; }
// V/kVAr -> V/var
constexpr double v_per_kvar_to_v_per_var(double v) { return v / 1e3; }

} // namespace mgsim::units
