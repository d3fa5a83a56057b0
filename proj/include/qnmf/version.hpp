#pragma once

#ifndef QNMF_VERSION
#define QNMF_VERSION "0.1.0"
#endif

namespace qnmf {

inline constexpr const char* kVersion = QNMF_VERSION;

}  // namespace qnmf
