#pragma once

#define MATZOH_VERSION_MAJOR 0
#define MATZOH_VERSION_MINOR 1
#define MATZOH_VERSION_PATCH 0
#define MATZOH_VERSION_STRING "0.1.0"

namespace matzoh {

/// Library version as "major.minor.patch".
inline const char* version() { return MATZOH_VERSION_STRING; }

}  // namespace matzoh
