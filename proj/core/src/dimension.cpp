#include "slelab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>

namespace slelab {

namespace {

// Cells of side s (grid anchored at origin_x/y) crossed by segment p -> q,
// by boundary-to-boundary traversal; visits the 4-connected chain of cells.
void mark_segment_cells(cplx p, cplx q, double origin_x, double origin_y, double s,
                        std::unordered_set<std::uint64_t>& cells) {
  const auto cell_of = [&](double v, double o) {
    return static_cast<std::int64_t>(std::floor((v - o) / s));
  };
  std::int64_t ix = cell_of(p.real(), origin_x);
  std::int64_t iy = cell_of(p.imag(), origin_y);
  const std::int64_t jx = cell_of(q.real(), origin_x);
  const std::int64_t jy = cell_of(q.imag(), origin_y);
  const auto key = [](std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(y));
  };
  cells.insert(key(ix, iy));
  const double dx = q.real() - p.real();
  const double dy = q.imag() - p.imag();
  const std::int64_t step_x = dx > 0.0 ? 1 : -1;
  const std::int64_t step_y = dy > 0.0 ? 1 : -1;
  // Parameter values where the segment crosses the next x/y cell boundary.
  const auto boundary = [&](std::int64_t i, double o, double v0, double dv,
                            std::int64_t stp) {
    const double edge = o + (static_cast<double>(i) + (stp > 0 ? 1.0 : 0.0)) * s;
    return dv == 0.0 ? 2.0 : (edge - v0) / dv;
  };
  double tx = boundary(ix, origin_x, p.real(), dx, step_x);
  double ty = boundary(iy, origin_y, p.imag(), dy, step_y);
  const double ddx = dx == 0.0 ? 2.0 : std::abs(s / dx);
  const double ddy = dy == 0.0 ? 2.0 : std::abs(s / dy);
  while (ix != jx || iy != jy) {
    if (tx <= ty) {
      ix += step_x;
      tx += ddx;
    } else {
      iy += step_y;
      ty += ddy;
    }
    cells.insert(key(ix, iy));
    if (tx > 1.0 && ty > 1.0 && (ix != jx || iy != jy)) {
      // Endpoint cell disagreement from rounding at a shared boundary.
      cells.insert(key(jx, jy));
      break;
    }
  }
}

}  // namespace

ScalingFit box_count_dimension(const Trace& tr, const std::vector<double>& scales) {
  if (scales.size() < 4) {
    throw std::invalid_argument("box_count_dimension: need at least 4 scales");
  }
  double s_min = scales[0], s_max = scales[0];
  for (double s : scales) {
    if (!(s > 0.0)) throw std::invalid_argument("box_count_dimension: scale <= 0");
    s_min = std::min(s_min, s);
    s_max = std::max(s_max, s);
  }
  if (s_max / s_min < 31.6) {
    throw std::invalid_argument("box_count_dimension: scales must span 1.5 decades");
  }
  const std::size_t first = tr.points.size() / 10;
  if (tr.points.size() < 2 || tr.points.size() - first < 2) {
    throw std::domain_error("box_count_dimension: trace too short");
  }
  double origin_x = tr.points[first].real();
  double origin_y = tr.points[first].imag();
  std::vector<double> gaps;
  gaps.reserve(tr.points.size() - first);
  for (std::size_t k = first; k < tr.points.size(); ++k) {
    origin_x = std::min(origin_x, tr.points[k].real());
    origin_y = std::min(origin_y, tr.points[k].imag());
    if (k > first) gaps.push_back(std::abs(tr.points[k] - tr.points[k - 1]));
  }
  // Segments are rasterized, so an isolated long hop only bridges linearly;
  // the smallest scale becomes meaningless once the typical point spacing
  // exceeds it.
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  if (gaps[gaps.size() / 2] > s_min) {
    throw std::domain_error("box_count_dimension: trace too short for smallest scale");
  }

  ScalingFit fit;
  std::vector<double> xs, ys;
  for (double s : scales) {
    std::unordered_set<std::uint64_t> cells;
    for (std::size_t k = first + 1; k < tr.points.size(); ++k) {
      mark_segment_cells(tr.points[k - 1], tr.points[k], origin_x, origin_y, s, cells);
    }
    xs.push_back(std::log(1.0 / s));
    ys.push_back(std::log(static_cast<double>(cells.size())));
  }
  return fit_line(xs, ys);
}

VariationReport variation_scan(const Trace& tr, const std::vector<double>& p_grid) {
  if (p_grid.size() < 2) {
    throw std::invalid_argument("variation_scan: need at least 2 exponents");
  }
  for (std::size_t i = 1; i < p_grid.size(); ++i) {
    if (!(p_grid[i] > p_grid[i - 1])) {
      throw std::invalid_argument("variation_scan: p_grid must increase");
    }
  }
  if (tr.points.size() < 2) throw std::domain_error("variation_scan: empty trace");
  const std::size_t segments = tr.points.size() - 1;
  std::vector<std::size_t> n_values;
  std::size_t stride = 1;
  while (segments % (2 * stride) == 0 && segments / stride >= 16) {
    n_values.push_back(segments / stride);
    stride *= 2;
  }
  if (segments / stride >= 16) n_values.push_back(segments / stride);
  if (n_values.size() < 4) {
    throw std::domain_error("variation_scan: trace does not support dyadic refinement");
  }

  VariationReport rep;
  rep.p_grid = p_grid;
  rep.n_values = n_values;
  std::vector<double> log_n;
  for (std::size_t n : n_values) log_n.push_back(std::log(static_cast<double>(n)));
  for (double p : p_grid) {
    std::vector<double> log_v;
    for (std::size_t n : n_values) {
      const std::size_t str = segments / n;
      double v = 0.0;
      for (std::size_t k = str; k < tr.points.size(); k += str) {
        v += std::pow(std::abs(tr.points[k] - tr.points[k - str]), p);
      }
      log_v.push_back(std::log(std::max(v, 1e-300)));
    }
    rep.slopes.push_back(fit_line(log_n, log_v).slope);
  }
  for (std::size_t i = 1; i < rep.slopes.size(); ++i) {
    if (rep.slopes[i - 1] >= 0.0 && rep.slopes[i] < 0.0) {
      const double w = rep.slopes[i - 1] / (rep.slopes[i - 1] - rep.slopes[i]);
      rep.estimate = p_grid[i - 1] + w * (p_grid[i] - p_grid[i - 1]);
      return rep;
    }
  }
  throw std::domain_error("variation_scan: no divergence-to-zero transition in p_grid");
}

double variation_dimension(const Trace& tr, const std::vector<double>& p_grid) {
  return variation_scan(tr, p_grid).estimate;
}

HolderReport holder_report(const Trace& tr) {
  if (tr.points.size() < 8) throw std::domain_error("holder_report: trace too short");
  if (!(tr.times.front() > 0.0)) {
    throw std::domain_error("holder_report: trace must start after time 0");
  }
  HolderReport rep;
  std::vector<double> xs, ys;
  const std::size_t max_gap = (tr.points.size() - 1) / 4;
  for (std::size_t g = 1; g <= max_gap; g *= 2) {
    double sup = 0.0;
    for (std::size_t k = 0; k + g < tr.points.size(); ++k) {
      sup = std::max(sup, std::abs(tr.points[k + g] - tr.points[k]));
    }
    rep.gaps.push_back(static_cast<double>(g) * tr.dt);
    rep.sup_inc.push_back(sup);
    xs.push_back(std::log(static_cast<double>(g) * tr.dt));
    ys.push_back(std::log(std::max(sup, 1e-300)));
  }
  rep.fit = fit_line(xs, ys);
  rep.exponent = rep.fit.slope;
  return rep;
}

}  // namespace slelab
