#pragma once

#include <cstdio>
#include <string>

namespace koblab {

/// Fixed 9-significant-digit rendering used in every report.
inline std::string fmt_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

}  // namespace koblab
