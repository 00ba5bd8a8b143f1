#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stann/errors.hpp"

namespace stann::data {

// Validated daily panel: strictly increasing ISO dates, positive adjusted
// closes, no missing cells after the ingestion policy ran.
struct PriceFrame {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  std::vector<std::vector<double>> values;  // T rows x n series

  std::size_t rows() const { return values.size(); }
  std::size_t series() const { return tickers.size(); }
};

enum class MissingPolicy { kReject, kForwardFill };

MissingPolicy missing_policy_from_string(const std::string& name);

// CSV with header `date,<ticker1>,...`; empty cells are missing values.
// forward_fill copies the previous value over interior gaps; leading gaps
// always reject.
PriceFrame ingest(const std::string& csv_path, MissingPolicy policy);
PriceFrame ingest_text(const std::string& csv_text, MissingPolicy policy);

void write_frame_csv(const std::string& path, const PriceFrame& frame);

// --- synthetic panels ----------------------------------------------------------

struct Ar1PanelParams {
  std::size_t rows = 1000;
  std::size_t series = 5;
  double phi = 0.9;          // return autocorrelation
  double noise = 0.002;      // innovation scale
  double base_price = 100.0;
};

struct RegimeSwitchParams {
  std::size_t rows = 1500;
  std::size_t series = 4;
  std::size_t segment_len = 125;  // alternating AR(1)/AR(2) spans
  double ar1_phi = 0.7;
  double ar2_phi1 = 0.2;
  double ar2_phi2 = 0.65;
  double noise = 0.004;
  double base_price = 100.0;
};

struct DominantAssetParams {
  std::size_t rows = 300;
  std::size_t series = 4;
  double dominant_drift = 0.004;   // asset 0, strictly increasing
  double laggard_drift = -0.002;   // the rest, strictly decreasing
  double jitter = 0.0005;
  double base_price = 100.0;
};

PriceFrame synth_ar1_panel(const Ar1PanelParams& p, std::uint64_t seed);
PriceFrame synth_regime_switch(const RegimeSwitchParams& p, std::uint64_t seed);
PriceFrame synth_dominant_asset(const DominantAssetParams& p, std::uint64_t seed);

// Dispatch by kind name ("ar1_panel", "regime_switch", "dominant_asset")
// with default parameters, sized by rows/series when positive.
PriceFrame synth(const std::string& kind, std::size_t rows, std::size_t series,
                 std::uint64_t seed);

}  // namespace stann::data
