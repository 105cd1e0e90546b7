// SPDX-License-Identifier: Apache-2.0
#include "gcnm/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "gcnm/error.hpp"

namespace gcnm {

using nlohmann::json;

MetricValues masked_metrics(std::span<const double> pred, std::span<const double> target,
                            std::span<const double> mask, bool zero_masking) {
  if (pred.size() != target.size() || pred.size() != mask.size())
    throw std::invalid_argument("masked_metrics: length mismatch");
  double abs = 0.0, sq = 0.0, pct = 0.0;
  std::size_t n = 0, n_pct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i] == 0.0) continue;
    if (zero_masking && target[i] == 0.0) continue;
    const double e = pred[i] - target[i];
    abs += std::abs(e);
    sq += e * e;
    ++n;
    if (target[i] != 0.0) {
      pct += std::abs(e / target[i]);
      ++n_pct;
    }
  }
  MetricValues v;
  v.n = n;
  v.n_mape = n_pct;
  if (n > 0) {
    v.mae = abs / static_cast<double>(n);
    v.rmse = std::sqrt(sq / static_cast<double>(n));
  }
  if (n_pct > 0) v.mape = pct / static_cast<double>(n_pct);
  return v;
}

MetricAccumulator::MetricAccumulator(std::size_t horizon, bool zero_masking)
    : horizon_(horizon), zero_masking_(zero_masking), per_h_(horizon) {}

void MetricAccumulator::add(std::span<const double> pred, std::span<const double> target,
                            std::span<const double> mask) {
  if (pred.size() != target.size() || pred.size() != mask.size() || pred.size() % horizon_ != 0)
    throw std::invalid_argument("MetricAccumulator: shape mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i] == 0.0) continue;
    if (zero_masking_ && target[i] == 0.0) continue;
    const double e = pred[i] - target[i];
    for (Sums* s : {&per_h_[i % horizon_], &total_}) {
      s->abs += std::abs(e);
      s->sq += e * e;
      ++s->n;
      if (target[i] != 0.0) {
        s->pct += std::abs(e / target[i]);
        ++s->n_pct;
      }
    }
  }
}

MetricValues MetricAccumulator::finish(const Sums& s) {
  MetricValues v;
  v.n = s.n;
  v.n_mape = s.n_pct;
  if (s.n > 0) {
    v.mae = s.abs / static_cast<double>(s.n);
    v.rmse = std::sqrt(s.sq / static_cast<double>(s.n));
  }
  if (s.n_pct > 0) v.mape = s.pct / static_cast<double>(s.n_pct);
  return v;
}

MetricValues MetricAccumulator::at(std::size_t horizon) const {
  if (horizon == 0) return finish(total_);
  if (horizon > horizon_) throw std::out_of_range("horizon beyond accumulator range");
  return finish(per_h_[horizon - 1]);
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

// Numeric horizons serialize as integers, the average as "avg".
json horizon_json(const std::string& h) {
  if (!h.empty() && h.find_first_not_of("0123456789") == std::string::npos) return std::stoi(h);
  return h;
}

}  // namespace

json MetricReport::to_json() const {
  json records_json = json::array();
  for (const auto& r : records) {
    records_json.push_back({{"model", r.model},
                            {"scenario", r.scenario},
                            {"rate", r.rate},
                            {"horizon", horizon_json(r.horizon)},
                            {"mae", optional_json(r.values.mae)},
                            {"rmse", optional_json(r.values.rmse)},
                            {"mape", optional_json(r.values.mape)},
                            {"n", r.values.n}});
  }
  return json{{"records", records_json}};
}

MetricReport MetricReport::from_json(const json& j) {
  MetricReport report;
  try {
    for (const auto& r : j.at("records")) {
      MetricRecord rec;
      rec.model = r.at("model").get<std::string>();
      rec.scenario = r.at("scenario").get<std::string>();
      rec.rate = r.at("rate").get<double>();
      rec.horizon = r.at("horizon").is_string() ? r.at("horizon").get<std::string>()
                                                : std::to_string(r.at("horizon").get<int>());
      rec.values.mae = optional_from(r, "mae");
      rec.values.rmse = optional_from(r, "rmse");
      rec.values.mape = optional_from(r, "mape");
      rec.values.n = r.at("n").get<std::size_t>();
      report.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed metric report: ") + e.what());
  }
  return report;
}

MetricReport make_report(const std::string& model, const std::string& scenario, double rate,
                         const MetricAccumulator& acc) {
  MetricReport report;
  for (std::size_t h = 1; h <= acc.horizon(); ++h)
    report.records.push_back({model, scenario, rate, std::to_string(h), acc.at(h)});
  report.records.push_back({model, scenario, rate, "avg", acc.at(0)});
  return report;
}

}  // namespace gcnm
