#pragma once

#include <cmath>

// Conversions between logarithmic and SI quantities. Everything inside the
// library is SI; these are only used at file and command-line boundaries.

namespace ctrlpower {

inline double db_to_linear(double value_db) { return std::pow(10.0, value_db / 10.0); }

inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

inline double dbw_to_watts(double value_dbw) { return db_to_linear(value_dbw); }

inline double watts_to_dbw(double watts) { return linear_to_db(watts); }

inline double dbm_to_watts(double value_dbm) { return db_to_linear(value_dbm - 30.0); }

inline double watts_to_dbm(double watts) { return linear_to_db(watts) + 30.0; }

}  // namespace ctrlpower
