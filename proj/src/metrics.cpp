#include "stann/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace stann::metrics {

void validate(const EvalFrame& frame) {
  if (frame.actual.empty()) throw std::invalid_argument("metrics: empty horizon");
  if (frame.actual.size() != frame.forecast.size()) {
    throw std::invalid_argument("metrics: actual/forecast length mismatch");
  }
  if (frame.seasonality < 1) throw std::invalid_argument("metrics: seasonality must be >= 1");
  if (frame.insample.size() <= frame.seasonality) {
    throw std::invalid_argument("metrics: in-sample slice shorter than seasonality");
  }
}

namespace {

double insample_naive_mae(const EvalFrame& frame) {
  const std::size_t s = frame.seasonality;
  double acc = 0.0;
  for (std::size_t j = s; j < frame.insample.size(); ++j) {
    acc += std::abs(frame.insample[j] - frame.insample[j - s]);
  }
  return acc / static_cast<double>(frame.insample.size() - s);
}

}  // namespace

std::vector<double> ipf(const EvalFrame& frame) {
  validate(frame);
  const double denom = insample_naive_mae(frame);
  if (!(denom > 0.0)) {
    throw NumericError("scaled error undefined: constant in-sample slice");
  }
  std::vector<double> out(frame.actual.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::abs(frame.actual[i] - frame.forecast[i]) / denom;
  }
  return out;
}

double mase(const EvalFrame& frame) { return mean_of(ipf(frame)); }

double theil_u(const EvalFrame& frame) {
  validate(frame);
  const double last = frame.insample.back();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < frame.actual.size(); ++i) {
    const double e = frame.actual[i] - frame.forecast[i];
    const double p = frame.actual[i] - last;
    num += e * e;
    den += p * p;
  }
  if (!(den > 0.0)) {
    throw NumericError("theil_u undefined: actuals equal the persistence forecast");
  }
  return std::sqrt(num / static_cast<double>(frame.actual.size())) /
         std::sqrt(den / static_cast<double>(frame.actual.size()));
}

namespace {
int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }
}  // namespace

double mda(const EvalFrame& frame) {
  validate(frame);
  const double last = frame.insample.back();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < frame.actual.size(); ++i) {
    if (sign_of(frame.forecast[i] - last) == sign_of(frame.actual[i] - last)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(frame.actual.size());
}

RelativeReport relative_report(const std::vector<ScoreRow>& model,
                               const std::vector<ScoreRow>& naive) {
  if (naive.empty()) throw std::invalid_argument("relative_report: missing naive run");
  if (model.size() != naive.size()) {
    throw std::invalid_argument("relative_report: model/naive run counts differ");
  }
  std::vector<double> rel_mase, rel_theil, mdas;
  rel_mase.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!(naive[i].mase > 0.0) || !(naive[i].theil_u > 0.0)) {
      throw NumericError("relative_report: naive score must be positive");
    }
    rel_mase.push_back(model[i].mase / naive[i].mase);
    rel_theil.push_back(model[i].theil_u / naive[i].theil_u);
    mdas.push_back(model[i].mda);
  }
  RelativeReport rep;
  rep.runs = model.size();
  rep.mase_mean = mean_of(rel_mase);
  rep.mase_std = sample_std(rel_mase);
  rep.theil_mean = mean_of(rel_theil);
  rep.theil_std = sample_std(rel_theil);
  rep.mda_mean = mean_of(mdas);
  rep.mda_std = sample_std(mdas);
  return rep;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty vector");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace stann::metrics
