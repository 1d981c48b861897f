#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace blastlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

// Entry point of the blastlab command-line tool; returns the exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

struct BenchResult {
  long moves = 0;
  double seconds = 0.0;
  double movesPerSecond = 0.0;
};

// Random valid taps on a fresh board of the given size, reshuffling or
// redealing when the board dies. Timing covers action selection too.
BenchResult bench_engine(int width, int height, int colors, long moves, uint64_t seed);

}  // namespace blastlab::cli
