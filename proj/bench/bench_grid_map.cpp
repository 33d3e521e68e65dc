// Times the serial and OpenMP stability-map kernels on the same grid and
// checks that they agree cell for cell.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include <omp.h>

#include "pidrl/stability_map.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  pidrl::GridSpec grid;
  grid.case1_tie = !(argc > 1 && std::string(argv[1]) == "--full");
  if (argc > 2) grid.interval = std::atof(argv[2]);

  const pidrl::DiscretePlant plant = pidrl::discretize_zoh(pidrl::reference_sopdt());
  pidrl::EpisodeConfig cfg;
  cfg.supervisor = false;

  std::vector<pidrl::StabilityVerdict> serial, parallel;
  const double ts = seconds([&] { serial = pidrl::grid_map_serial(plant, grid, cfg, pidrl::kStabilityThreshold); });
  const double tp = seconds([&] { parallel = pidrl::grid_map(plant, grid, cfg, pidrl::kStabilityThreshold); });

  std::cout << "grid points   " << serial.size() << (grid.case1_tie ? " (tied)" : " (full)") << '\n'
            << "threads       " << omp_get_max_threads() << '\n'
            << "serial   [s]  " << ts << '\n'
            << "parallel [s]  " << tp << '\n'
            << "speedup       " << ts / tp << '\n';
  if (serial != parallel) {
    std::cerr << "mismatch between serial and parallel maps\n";
    return 1;
  }
  std::cout << "outputs identical\n";
  return 0;
}
