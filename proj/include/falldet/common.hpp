#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace falldet {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical quantity (loss, logit, gradient) stops being finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Per-window / per-sample class. BKG is the default and absorbing class.
enum class ActivityClass : int { Bkg = 0, Alert = 1, Fall = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr double kSampleRateHz = 200.0;

inline constexpr std::array<ActivityClass, kNumClasses> kAllClasses{
    ActivityClass::Bkg, ActivityClass::Alert, ActivityClass::Fall};

constexpr std::size_t index_of(ActivityClass c) { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(ActivityClass c) {
  switch (c) {
    case ActivityClass::Bkg:
      return "BKG";
    case ActivityClass::Alert:
      return "ALERT";
    case ActivityClass::Fall:
      return "FALL";
  }
  return "?";
}

/// Parses "BKG", "ALERT" or "FALL". Throws Error on anything else.
inline ActivityClass class_from_string(std::string_view name) {
  for (auto c : kAllClasses) {
    if (to_string(c) == name) return c;
  }
  throw Error("unknown class name '" + std::string(name) + "'");
}

using Vec3 = std::array<double, 3>;

}  // namespace falldet
