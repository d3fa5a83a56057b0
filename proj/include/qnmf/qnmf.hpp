#pragma once

// Umbrella header for the numerical library. The file-format, config and
// command layers (io.hpp, config.hpp, harness.hpp) are included separately
// because they pull in OpenSSL and nlohmann_json.

#include "qnmf/align.hpp"
#include "qnmf/errors.hpp"
#include "qnmf/qals.hpp"
#include "qnmf/quaternion.hpp"
#include "qnmf/stokes.hpp"
#include "qnmf/synth.hpp"
#include "qnmf/uniqueness.hpp"
#include "qnmf/version.hpp"
