#pragma once

// Primary/secondary transmitter selection from per-vessel trajectory summaries.

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aiskg/error.hpp"
#include "aiskg/gmm.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/text.hpp"

namespace aiskg {

using FeatureVector = Eigen::Vector3d;

struct VesselFeatures {
  VesselId vessel_id = 0;
  FeatureVector x = FeatureVector::Zero();  // log10 of (displacement km, time span min, messages)
};

inline FeatureVector log_features(double displacement_km, double time_span_min, double num_messages) {
  auto lg = [](double v) { return std::log10(std::max(v, 1e-12)); };
  return {lg(displacement_km), lg(time_span_min), lg(num_messages)};
}

inline FeatureVector log_features(const TrajectorySummary& s) {
  return log_features(s.displacement_km, s.time_span_minutes, static_cast<double>(s.num_messages));
}

/// Per-vessel arithmetic mean of each summary field, then log10. Ascending vessel id.
inline std::vector<VesselFeatures> build_features(std::span<const SubTrajectory> trajectories) {
  struct Sums {
    double disp = 0, span = 0, msgs = 0;
    std::size_t n = 0;
  };
  std::map<VesselId, Sums> by_vessel;
  for (const auto& t : trajectories) {
    auto& s = by_vessel[t.vessel_id];
    s.disp += t.summary.displacement_km;
    s.span += t.summary.time_span_minutes;
    s.msgs += static_cast<double>(t.summary.num_messages);
    ++s.n;
  }
  std::vector<VesselFeatures> out;
  out.reserve(by_vessel.size());
  for (const auto& [id, s] : by_vessel) {
    const double n = static_cast<double>(s.n);
    out.push_back({id, log_features(s.disp / n, s.span / n, s.msgs / n)});
  }
  return out;
}

enum class TransmitterKind : std::uint8_t { Primary, Secondary };

inline std::string_view to_string(TransmitterKind k) { return k == TransmitterKind::Primary ? "primary" : "secondary"; }

struct TransmitterLabel {
  VesselId vessel_id = 0;
  TransmitterKind label = TransmitterKind::Secondary;
  double posterior = 0.0;  // probability of the primary component
};

// Vessel: one point per vessel (mean summaries). SubTrajectory: one point per
// sub-trajectory, vessels labelled by majority vote.
enum class FitUnit : std::uint8_t { Vessel, SubTrajectory };

struct TransmitterModel {
  GaussianMixture<3> gmm;
  std::size_t primary_component = 0;
  FitUnit unit = FitUnit::Vessel;

  double primary_posterior(const FeatureVector& x) const { return gmm.responsibilities(x)[primary_component]; }
};

// Primary transmitters report long consistent hauls: largest displacement mean.
inline std::size_t pick_primary_component(const GaussianMixture<3>& gmm) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < gmm.components.size(); ++k) {
    if (gmm.components[k].mean(0) > gmm.components[best].mean(0)) best = k;
  }
  return best;
}

inline TransmitterModel fit_transmitter_model(std::span<const FeatureVector> points, const GmmOptions& opt,
                                              FitUnit unit = FitUnit::Vessel) {
  TransmitterModel m;
  m.gmm = fit_gmm<3>(points, opt);
  m.primary_component = pick_primary_component(m.gmm);
  m.unit = unit;
  return m;
}

inline TransmitterModel fit_transmitter_model(std::span<const SubTrajectory> training, const GmmOptions& opt,
                                              FitUnit unit = FitUnit::Vessel) {
  std::vector<FeatureVector> points;
  if (unit == FitUnit::Vessel) {
    for (const auto& f : build_features(training)) points.push_back(f.x);
  } else {
    for (const auto& t : training) points.push_back(log_features(t.summary));
  }
  return fit_transmitter_model(points, opt, unit);
}

inline std::vector<TransmitterLabel> classify_vessels(const TransmitterModel& model,
                                                      std::span<const VesselFeatures> features) {
  std::vector<TransmitterLabel> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    const double p = model.primary_posterior(f.x);
    out.push_back({f.vessel_id, p > 0.5 ? TransmitterKind::Primary : TransmitterKind::Secondary, p});
  }
  return out;
}

/// Labels the vessels behind `trajectories` with frozen model parameters,
/// honouring the model's fit unit.
inline std::vector<TransmitterLabel> classify_vessels(const TransmitterModel& model,
                                                      std::span<const SubTrajectory> trajectories) {
  if (model.unit == FitUnit::Vessel) {
    const auto features = build_features(trajectories);
    return classify_vessels(model, std::span<const VesselFeatures>(features));
  }
  struct Votes {
    std::size_t primary = 0, total = 0;
    double posterior_sum = 0.0;
  };
  std::map<VesselId, Votes> votes;
  for (const auto& t : trajectories) {
    const double p = model.primary_posterior(log_features(t.summary));
    auto& v = votes[t.vessel_id];
    v.primary += p > 0.5 ? 1 : 0;
    ++v.total;
    v.posterior_sum += p;
  }
  std::vector<TransmitterLabel> out;
  for (const auto& [id, v] : votes) {
    const bool primary = 2 * v.primary > v.total;  // ties go to secondary
    out.push_back({id, primary ? TransmitterKind::Primary : TransmitterKind::Secondary,
                   v.posterior_sum / static_cast<double>(v.total)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: small versioned text record.

inline constexpr int kTransmitterModelVersion = 1;

inline void save_model(std::ostream& os, const TransmitterModel& m) {
  os << "aiskg-transmitter-model " << kTransmitterModelVersion << '\n';
  os << "unit " << (m.unit == FitUnit::Vessel ? "vessel" : "subtrajectory") << '\n';
  os << "seed " << m.gmm.seed << '\n';
  os << "iterations " << m.gmm.iterations << '\n';
  os << "converged " << (m.gmm.converged ? 1 : 0) << '\n';
  os << "primary " << m.primary_component << '\n';
  os << "components " << m.gmm.components.size() << '\n';
  for (const auto& c : m.gmm.components) {
    os << "component " << text::fmt(c.weight);
    for (int i = 0; i < 3; ++i) os << ' ' << text::fmt(c.mean(i));
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) os << ' ' << text::fmt(c.cov(r, col));
    os << '\n';
  }
  os << "trace";
  for (double v : m.gmm.log_likelihood_trace) os << ' ' << text::fmt(v);
  os << '\n';
}

inline TransmitterModel load_model(std::istream& is) {
  TransmitterModel m;
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "aiskg-transmitter-model") throw CorruptFile("not a transmitter model");
  if (version != kTransmitterModelVersion) {
    throw VersionMismatch("transmitter model version " + std::to_string(version) + ", expected " +
                          std::to_string(kTransmitterModelVersion));
  }
  auto expect = [&](const char* key) {
    if (!(is >> tag) || tag != key) throw CorruptFile(std::string("expected '") + key + "'");
  };
  std::string unit;
  std::size_t ncomp = 0;
  int converged = 0;
  expect("unit");
  is >> unit;
  m.unit = unit == "subtrajectory" ? FitUnit::SubTrajectory : FitUnit::Vessel;
  expect("seed");
  is >> m.gmm.seed;
  expect("iterations");
  is >> m.gmm.iterations;
  expect("converged");
  is >> converged;
  m.gmm.converged = converged != 0;
  expect("primary");
  is >> m.primary_component;
  expect("components");
  is >> ncomp;
  if (!is || ncomp == 0 || m.primary_component >= ncomp) throw CorruptFile("bad transmitter model header");
  for (std::size_t k = 0; k < ncomp; ++k) {
    expect("component");
    GaussianComponent<3> c;
    is >> c.weight;
    for (int i = 0; i < 3; ++i) is >> c.mean(i);
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) is >> c.cov(r, col);
    if (!is) throw CorruptFile("truncated component");
    m.gmm.components.push_back(c);
  }
  expect("trace");
  std::string rest;
  std::getline(is, rest);
  std::istringstream ts(rest);
  double v = 0.0;
  while (ts >> v) m.gmm.log_likelihood_trace.push_back(v);
  return m;
}

inline void write_labels(std::ostream& os, std::span<const TransmitterLabel> labels) {
  os << "vessel_id,label,posterior\n";
  for (const auto& l : labels) os << l.vessel_id << ',' << to_string(l.label) << ',' << text::fmt(l.posterior) << '\n';
}

inline std::vector<TransmitterLabel> read_labels(std::istream& is) {
  std::vector<TransmitterLabel> out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (header) {
      header = false;
      if (line.rfind("vessel_id", 0) == 0) continue;
    }
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 3) throw CorruptFile("bad label line: " + line);
    auto id = text::to_int<VesselId>(f[0]);
    auto p = text::to_double(f[2]);
    const auto kind = text::trim(f[1]);
    if (!id || !p || (kind != "primary" && kind != "secondary")) throw CorruptFile("bad label line: " + line);
    out.push_back({*id, kind == "primary" ? TransmitterKind::Primary : TransmitterKind::Secondary, *p});
  }
  return out;
}

}  // namespace aiskg
