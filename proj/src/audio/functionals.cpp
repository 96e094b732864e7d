#include "polyfuse/audio/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "polyfuse/core/error.hpp"

namespace polyfuse::audio {

const std::vector<std::string>& functional_names() {
  static const std::vector<std::string> names = {"mean",     "quadratic_mean", "std", "flatness", "skewness",
                                                 "kurtosis", "q1",             "q2",  "q3"};
  return names;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

constexpr double kZeroVariance = 1e-12;

}  // namespace

std::vector<double> track_functionals(std::vector<double> track) {
  const auto n = static_cast<double>(track.size());
  double sum = 0.0, sq = 0.0, abs_sum = 0.0, log_abs = 0.0;
  bool any_zero = false;
  for (double v : track) {
    sum += v;
    sq += v * v;
    abs_sum += std::abs(v);
    if (v == 0.0)
      any_zero = true;
    else
      log_abs += std::log(std::abs(v));
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : track) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double sd = std::sqrt(m2);
  const double arith_abs = abs_sum / n;
  const double flatness = any_zero || arith_abs == 0.0 ? 0.0 : std::exp(log_abs / n) / arith_abs;
  const bool flat = sd <= kZeroVariance * std::max(1.0, std::abs(mean));
  std::sort(track.begin(), track.end());
  return {mean,
          std::sqrt(sq / n),
          flat ? 0.0 : sd,
          flatness,
          flat ? 0.0 : m3 / (sd * sd * sd),
          flat ? 0.0 : m4 / (m2 * m2),
          quantile_sorted(track, 0.25),
          quantile_sorted(track, 0.5),
          quantile_sorted(track, 0.75)};
}

FunctionalVector apply_functionals(const LldMatrix& llds, const FunctionalOptions& options) {
  std::vector<Eigen::Index> rows;
  const Eigen::Index voicing = options.voiced_gate ? llds.column("voicing") : -1;
  for (Eigen::Index r = 0; r < llds.values.rows(); ++r)
    if (!options.voiced_gate || llds.values(r, voicing) > options.voicing_threshold) rows.push_back(r);
  if (rows.empty())
    throw Error(options.voiced_gate ? ErrorCode::EmptyAfterGating : ErrorCode::TooShort,
                options.voiced_gate ? "no frame exceeds the voicing threshold " + std::to_string(options.voicing_threshold)
                                    : "no frames");

  FunctionalVector out;
  const auto& fnames = functional_names();
  for (Eigen::Index c = 0; c < llds.values.cols(); ++c) {
    std::vector<double> track;
    track.reserve(rows.size());
    for (Eigen::Index r : rows) track.push_back(llds.values(r, c));
    const std::string& name = llds.names[static_cast<std::size_t>(c)];
    if (options.mean_only) {
      double s = 0.0;
      for (double v : track) s += v;
      out.values.push_back(s / static_cast<double>(track.size()));
      out.layout.push_back(name + ".mean");
      continue;
    }
    const std::vector<double> f = track_functionals(std::move(track));
    for (std::size_t k = 0; k < f.size(); ++k) {
      out.values.push_back(f[k]);
      out.layout.push_back(name + "." + fnames[k]);
    }
  }
  return out;
}

nlohmann::json SpeakerStatistics::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [speaker, m] : speakers) j[speaker] = {{"mean", m.mean}, {"std", m.std}};
  return j;
}

SpeakerStatistics SpeakerStatistics::from_json(const nlohmann::json& j) {
  SpeakerStatistics s;
  for (const auto& [speaker, m] : j.items())
    s.speakers[speaker] = {m.at("mean").get<std::vector<double>>(), m.at("std").get<std::vector<double>>()};
  return s;
}

SpeakerStatistics fit_speaker_statistics(const VectorMap& vectors, const SpeakerMap& speakers) {
  std::map<std::string, std::vector<const std::vector<double>*>> groups;
  for (const auto& [utt, v] : vectors) {
    auto it = speakers.find(utt);
    if (it == speakers.end()) throw Error(ErrorCode::ValidationError, "no speaker for utterance " + utt, utt);
    groups[it->second].push_back(&v);
  }
  SpeakerStatistics stats;
  for (const auto& [speaker, members] : groups) {
    const std::size_t dim = members.front()->size();
    SpeakerStatistics::Moments m{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    for (const auto* v : members) {
      if (v->size() != dim) throw Error(ErrorCode::DimMismatch, "speaker " + speaker + " has vectors of mixed length");
      for (std::size_t d = 0; d < dim; ++d) m.mean[d] += (*v)[d];
    }
    for (double& x : m.mean) x /= static_cast<double>(members.size());
    for (const auto* v : members)
      for (std::size_t d = 0; d < dim; ++d) m.std[d] += ((*v)[d] - m.mean[d]) * ((*v)[d] - m.mean[d]);
    for (double& x : m.std) x = std::sqrt(x / static_cast<double>(members.size()));
    stats.speakers.emplace(speaker, std::move(m));
  }
  return stats;
}

VectorMap apply_speaker_statistics(const SpeakerStatistics& stats, const VectorMap& vectors, const SpeakerMap& speakers) {
  VectorMap out;
  for (const auto& [utt, v] : vectors) {
    auto sp = speakers.find(utt);
    if (sp == speakers.end()) throw Error(ErrorCode::ValidationError, "no speaker for utterance " + utt, utt);
    auto it = stats.speakers.find(sp->second);
    if (it == stats.speakers.end())
      throw Error(ErrorCode::ValidationError, "no normalization statistics for speaker " + sp->second, utt);
    const auto& m = it->second;
    if (m.mean.size() != v.size()) throw Error(ErrorCode::DimMismatch, "vector length differs from statistics", utt);
    std::vector<double> z(v.size());
    for (std::size_t d = 0; d < v.size(); ++d) {
      const double scale = std::max(1.0, std::abs(m.mean[d]));
      z[d] = m.std[d] > kZeroVariance * scale ? (v[d] - m.mean[d]) / m.std[d] : 0.0;
    }
    out.emplace(utt, std::move(z));
  }
  return out;
}

VectorMap speaker_zstandardize(const VectorMap& vectors, const SpeakerMap& speakers) {
  return apply_speaker_statistics(fit_speaker_statistics(vectors, speakers), vectors, speakers);
}

}  // namespace polyfuse::audio
