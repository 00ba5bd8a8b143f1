#include "stann/scaler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stann::train {

double quantile_type7(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

IqrScaler IqrScaler::fit(const std::vector<std::vector<double>>& rows,
                         const std::vector<std::string>* names) {
  if (rows.empty()) throw DataError("IqrScaler: empty input");
  const std::size_t n = rows[0].size();
  IqrScaler s;
  s.median.resize(n);
  s.iqr.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) col[t] = rows[t][i];
    s.median[i] = quantile_type7(col, 0.5);
    s.iqr[i] = quantile_type7(col, 0.75) - quantile_type7(col, 0.25);
    if (!(s.iqr[i] > 0.0)) {
      const std::string name =
          names && i < names->size() ? (*names)[i] : ("#" + std::to_string(i));
      throw DataError("IqrScaler: series " + name + " has zero interquartile range");
    }
  }
  return s;
}

std::vector<std::vector<double>> IqrScaler::normalize(
    const std::vector<std::vector<double>>& rows) const {
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(median.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < median.size(); ++i) out[t][i] = normalize_one(rows[t][i], i);
  return out;
}

std::vector<std::vector<double>> IqrScaler::denormalize(
    const std::vector<std::vector<double>>& rows) const {
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(median.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < median.size(); ++i) out[t][i] = denormalize_one(rows[t][i], i);
  return out;
}

}  // namespace stann::train
