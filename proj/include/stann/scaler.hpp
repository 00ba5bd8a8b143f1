#pragma once

#include <cstddef>
#include <vector>

#include "stann/errors.hpp"

namespace stann::train {

// Per-series interquartile-range normalizer: (x - median) / IQR with
// type-7 (linear interpolation) quartiles. Constant series are rejected.
struct IqrScaler {
  std::vector<double> median;
  std::vector<double> iqr;

  std::size_t series_count() const { return median.size(); }

  // columns[t][i] layout: T rows, n series
  static IqrScaler fit(const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>* names = nullptr);

  std::vector<std::vector<double>> normalize(const std::vector<std::vector<double>>& rows) const;
  std::vector<std::vector<double>> denormalize(const std::vector<std::vector<double>>& rows) const;
  double normalize_one(double v, std::size_t i) const { return (v - median[i]) / iqr[i]; }
  double denormalize_one(double v, std::size_t i) const { return v * iqr[i] + median[i]; }
};

// Type-7 quantile (the linear-interpolation convention).
double quantile_type7(std::vector<double> sorted_copy, double q);

}  // namespace stann::train
