#pragma once

#include <string>

namespace ttn {

// Scientific notation with 17 significant digits; '.' decimal point
// regardless of locale. Round-trips any finite 64-bit real.
std::string csv_real(double v);

}  // namespace ttn
