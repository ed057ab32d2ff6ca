#ifndef FWPERF_UNITS_HPP
#define FWPERF_UNITS_HPP

// Internal unit system: miles, hours, mph. Minutes are used for the
// time grid step and kernel widths; seconds appear only in vendor
// travel-time records and the simulator step.

namespace fwperf {

inline constexpr double kFeetPerMile = 5280.0;
inline constexpr double kKmPerMile = 1.609344;
inline constexpr double kMinPerHour = 60.0;
inline constexpr double kSecPerHour = 3600.0;
inline constexpr double kSecPerMin = 60.0;

inline constexpr double feet_to_miles(double ft) { return ft / kFeetPerMile; }
inline constexpr double miles_to_feet(double mi) { return mi * kFeetPerMile; }
inline constexpr double km_to_miles(double km) { return km / kKmPerMile; }
inline constexpr double meters_to_feet(double m) { return m / 0.3048; }
inline constexpr double kmph_to_mph(double kmph) { return kmph / kKmPerMile; }
inline constexpr double minutes_to_hours(double min) { return min / kMinPerHour; }
inline constexpr double hours_to_minutes(double hr) { return hr * kMinPerHour; }
inline constexpr double seconds_to_hours(double s) { return s / kSecPerHour; }
inline constexpr double hours_to_seconds(double hr) { return hr * kSecPerHour; }

}  // namespace fwperf

#endif
