#pragma once

#include <cstdint>
#include <vector>

#include "num.hpp"

namespace sml {

// Index-addressable Sobol sequence (Joe-Kuo direction numbers, up to 16 dims).
// point(i) is a pure function of i, so sampling loops can be chunked and
// parallelized without changing any reported number.
class Sobol {
  public:
    explicit Sobol(int dim);

    int dim() const { return dim_; }

    // i-th point of the sequence in [0,1)^dim. Index 0 is the origin.
    std::vector<double> point(std::uint64_t index) const;
    void point(std::uint64_t index, double* out) const;

    // Map the i-th point into a centered box [-half,half]^dim.
    std::vector<double> point_in_box(std::uint64_t index, const std::vector<double>& half) const;

  private:
    int dim_;
    std::vector<std::uint32_t> dirs_;  // dim_ x 32, row-major
};

}  // namespace sml
