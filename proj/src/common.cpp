#include "smk/common.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

namespace smk {

std::string to_string(const Shape3& s) {
  return "(" + std::to_string(s.nz) + "," + std::to_string(s.ny) + "," + std::to_string(s.nx) + ")";
}

double round_half_even(double v) { return std::nearbyint(v); }

int resolve_threads(int requested) {
  if (const char* env = std::getenv("SMK_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 0) throw ConfigError(std::string("SMK_THREADS must be a non-negative integer, got '") + env + "'");
    requested = static_cast<int>(n);
  }
  if (requested <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return requested;
}

}  // namespace smk
