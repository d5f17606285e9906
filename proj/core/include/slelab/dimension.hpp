#pragma once

#include <vector>

#include "slelab/loewner.hpp"
#include "slelab/stats.hpp"

namespace slelab {

/**
 * Box-counting estimate of the trace dimension: slope of log N(s) versus
 * log(1/s), N(s) = number of grid boxes of side s met by the polyline.
 * Boxes are found by exact cell traversal of every segment on a grid
 * anchored at the lower-left corner of the points, which makes the count
 * translation invariant and dilation equivariant. The first tenth of the
 * trace (in time) is dropped so the estimate reflects the curve away from
 * its endpoint on the boundary.
 *
 * Needs at least 4 scales spanning at least 1.5 decades; the trace must
 * resolve the smallest scale (max segment length <= 2 s_min), else a domain
 * error. A slope near 1 + kappa/8 at desk scale carries pilot-calibrated
 * tolerance: the underlying statement is asymptotic and exact agreement is
 * not reproducible at finite resolution.
 */
ScalingFit box_count_dimension(const Trace& tr, const std::vector<double>& scales);

struct VariationReport {
  std::vector<double> p_grid;
  std::vector<double> slopes;  ///< fitted log sum_k |increment|^p vs log n
  std::vector<std::size_t> n_values;
  double estimate = 0.0;  ///< p at the divergence-to-zero transition
};

/**
 * p-variation transition estimate: partial sums sum |gamma(k/n)-gamma((k-1)/n)|^p
 * grow with n below the dimension and vanish above it; the estimate is the
 * zero crossing (by linear interpolation) of the fitted growth slope over
 * p_grid. Partitions are dyadic refinements of the full point grid; the
 * point count must permit at least 4 halvings with >= 16 pieces, else a
 * domain error. Throws when every slope has one sign (grid too narrow).
 */
VariationReport variation_scan(const Trace& tr, const std::vector<double>& p_grid);

double variation_dimension(const Trace& tr, const std::vector<double>& p_grid);

struct HolderReport {
  std::vector<double> gaps;     ///< time gaps, dyadic multiples of the grid
  std::vector<double> sup_inc;  ///< sup_k |gamma(t_k + gap) - gamma(t_k)|
  ScalingFit fit;               ///< log sup-increment vs log gap
  double exponent = 0.0;        ///< fitted slope
};

/// Fitted sup-increment exponent over dyadic gaps; diagnostic only: the
/// trace must start strictly after time 0 (slice it first), since no
/// modulus of continuity holds uniformly down to the boundary point.
HolderReport holder_report(const Trace& tr);

}  // namespace slelab
