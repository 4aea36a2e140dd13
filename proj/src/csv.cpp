#include "ttn/csv.hpp"

#include <cstdio>

namespace ttn {

std::string csv_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

}  // namespace ttn
