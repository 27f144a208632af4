#pragma once

// Static SVG scatter plots: one circle per point, a reference layer and a
// sample layer, axes and a legend. No interactivity.

#include <cstddef>
#include <string>

namespace somix::plot {

// samples / reference are row-major n x 2. Either set may be empty; the axes
// are always drawn.
std::string scatter_svg(const double* samples, std::size_t n_samples, const double* reference,
                        std::size_t n_reference);

void emit_scatter_svg(const std::string& path, const double* samples, std::size_t n_samples,
                      const double* reference, std::size_t n_reference);

}  // namespace somix::plot
