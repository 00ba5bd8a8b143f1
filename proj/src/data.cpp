#include "stann/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stann/rng.hpp"

namespace stann::data {

MissingPolicy missing_policy_from_string(const std::string& name) {
  if (name == "reject") return MissingPolicy::kReject;
  if (name == "forward-fill" || name == "forward_fill") return MissingPolicy::kForwardFill;
  throw UsageError("unknown missing policy: " + name);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

PriceFrame ingest_text(const std::string& csv_text, MissingPolicy policy) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "date") {
    throw DataError("CSV header must be: date,<ticker1>,...");
  }

  PriceFrame frame;
  frame.tickers.assign(header.begin() + 1, header.end());
  const std::size_t n = frame.tickers.size();

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != n + 1) {
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(n + 1) +
                      " cells, got " + std::to_string(cells.size()));
    }
    const std::string& date = cells[0];
    if (!valid_iso_date(date)) {
      throw DataError("line " + std::to_string(lineno) + ": bad ISO-8601 date '" + date + "'");
    }
    if (!frame.dates.empty()) {
      if (date == frame.dates.back()) throw DataError("duplicate date " + date);
      if (date < frame.dates.back()) {
        throw DataError("dates not increasing at " + date);
      }
    }
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& cell = cells[i + 1];
      if (cell.empty()) {
        if (frame.values.empty()) {
          throw DataError("leading gap for " + frame.tickers[i] + " at " + date);
        }
        if (policy == MissingPolicy::kReject) {
          throw DataError("missing value for " + frame.tickers[i] + " at " + date);
        }
        row[i] = frame.values.back()[i];
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw DataError("bad number '" + cell + "' at " + date);
      }
      if (!(v > 0.0)) {
        throw DataError("non-positive price for " + frame.tickers[i] + " at " + date);
      }
      row[i] = v;
    }
    frame.dates.push_back(date);
    frame.values.push_back(std::move(row));
  }
  if (frame.values.empty()) throw DataError("CSV has a header but no rows");
  return frame;
}

PriceFrame ingest(const std::string& csv_path, MissingPolicy policy) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open data file: " + csv_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_text(buf.str(), policy);
}

void write_frame_csv(const std::string& path, const PriceFrame& frame) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write: " + path);
  os << "date";
  for (const auto& t : frame.tickers) os << ',' << t;
  os << '\n';
  char buf[40];
  for (std::size_t t = 0; t < frame.rows(); ++t) {
    os << frame.dates[t];
    for (double v : frame.values[t]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

namespace {

// Synthetic calendars just count days from a fixed epoch; weekends are not
// modeled.
std::string synthetic_date(std::size_t index) {
  std::size_t days = index;
  std::size_t year = 2000 + days / 360;
  days %= 360;
  std::size_t month = 1 + days / 30;
  std::size_t day = 1 + days % 30;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu-%02zu-%02zu", year, month, day);
  return buf;
}

PriceFrame frame_from_returns(const std::vector<std::vector<double>>& returns, double base_price,
                              const std::string& ticker_prefix) {
  PriceFrame frame;
  const std::size_t T = returns.size();
  const std::size_t n = returns[0].size();
  for (std::size_t i = 0; i < n; ++i) frame.tickers.push_back(ticker_prefix + std::to_string(i));
  std::vector<double> price(n, base_price);
  for (std::size_t t = 0; t < T; ++t) {
    frame.dates.push_back(synthetic_date(t));
    for (std::size_t i = 0; i < n; ++i) {
      price[i] *= 1.0 + returns[t][i];
      if (!(price[i] > 0.0)) price[i] = 1e-6;  // returns are small; guard anyway
    }
    frame.values.push_back(price);
  }
  return frame;
}

}  // namespace

PriceFrame synth_ar1_panel(const Ar1PanelParams& p, std::uint64_t seed) {
  if (p.rows < 2 || p.series < 1) throw UsageError("ar1_panel: bad dimensions");
  if (std::abs(p.phi) >= 1.0) throw UsageError("ar1_panel: |phi| must be < 1");
  std::vector<std::vector<double>> returns(p.rows, std::vector<double>(p.series));
  for (std::size_t i = 0; i < p.series; ++i) {
    Rng rng(derive_seed(seed, i));
    double r = 0.0;
    for (std::size_t t = 0; t < p.rows; ++t) {
      r = p.phi * r + p.noise * rng.normal();
      returns[t][i] = r;
    }
  }
  return frame_from_returns(returns, p.base_price, "AR");
}

PriceFrame synth_regime_switch(const RegimeSwitchParams& p, std::uint64_t seed) {
  if (p.rows < 2 || p.series < 1 || p.segment_len < 4) {
    throw UsageError("regime_switch: bad dimensions");
  }
  if (p.ar2_phi1 + p.ar2_phi2 >= 1.0 || p.ar2_phi2 - p.ar2_phi1 >= 1.0 ||
      std::abs(p.ar2_phi2) >= 1.0 || std::abs(p.ar1_phi) >= 1.0) {
    throw UsageError("regime_switch: AR coefficients outside the stationary region");
  }
  std::vector<std::vector<double>> returns(p.rows, std::vector<double>(p.series));
  for (std::size_t i = 0; i < p.series; ++i) {
    Rng rng(derive_seed(seed, i));
    double r1 = 0.0, r2 = 0.0;
    for (std::size_t t = 0; t < p.rows; ++t) {
      const bool ar2_regime = (t / p.segment_len) % 2 == 1;
      const double mean = ar2_regime ? p.ar2_phi1 * r1 + p.ar2_phi2 * r2 : p.ar1_phi * r1;
      const double r = mean + p.noise * rng.normal();
      returns[t][i] = r;
      r2 = r1;
      r1 = r;
    }
  }
  return frame_from_returns(returns, p.base_price, "RS");
}

PriceFrame synth_dominant_asset(const DominantAssetParams& p, std::uint64_t seed) {
  if (p.rows < 2 || p.series < 2) throw UsageError("dominant_asset: need >= 2 series");
  if (!(p.dominant_drift > 0.0) || !(p.laggard_drift < 0.0)) {
    throw UsageError("dominant_asset: drifts must be positive/negative");
  }
  std::vector<std::vector<double>> returns(p.rows, std::vector<double>(p.series));
  for (std::size_t i = 0; i < p.series; ++i) {
    Rng rng(derive_seed(seed, i));
    for (std::size_t t = 0; t < p.rows; ++t) {
      const double jitter = p.jitter * std::abs(rng.normal());
      // Strictly monotone per series: up for asset 0, down for the rest.
      returns[t][i] = i == 0 ? p.dominant_drift + jitter : p.laggard_drift - jitter;
    }
  }
  return frame_from_returns(returns, p.base_price, "DA");
}

PriceFrame synth(const std::string& kind, std::size_t rows, std::size_t series,
                 std::uint64_t seed) {
  if (kind == "ar1_panel") {
    Ar1PanelParams p;
    if (rows) p.rows = rows;
    if (series) p.series = series;
    return synth_ar1_panel(p, seed);
  }
  if (kind == "regime_switch") {
    RegimeSwitchParams p;
    if (rows) p.rows = rows;
    if (series) p.series = series;
    return synth_regime_switch(p, seed);
  }
  if (kind == "dominant_asset") {
    DominantAssetParams p;
    if (rows) p.rows = rows;
    if (series) p.series = series;
    return synth_dominant_asset(p, seed);
  }
  throw UsageError("unknown synthetic kind: " + kind);
}

}  // namespace stann::data
