#pragma once

#include <cstdio>
#include <string>

namespace nsalab {

/// Round-trippable decimal form (17 significant digits).
inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace nsalab
