#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "neolus/log.hpp"
#include "neolus/phantom.hpp"

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "neolus-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

/// Captures warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = neolus::set_log_sink([this](neolus::LogLevel l, const std::string& m) {
      if (l == neolus::LogLevel::Warning) warnings.push_back(m);
    });
  }
  ~WarningCapture() { neolus::set_log_sink(previous_); }
  std::vector<std::string> warnings;

 private:
  neolus::LogSink previous_;
};

inline neolus::PhantomSpec small_phantom(int patients = 8, int frames = 4, std::uint64_t seed = 7) {
  neolus::PhantomSpec spec;
  spec.n_patients = patients;
  spec.frames_per_video = frames;
  spec.videos_per_session = 1;
  spec.seed = seed;
  return spec;
}

/// Sort-based ranks with explicit tie groups, 1-based.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double u : v) {
      if (u < v[i]) less += 1;
      if (u == v[i]) equal += 1;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  return ranks;
}

inline double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i], sy += y[i], sxx += x[i] * x[i], syy += y[i] * y[i], sxy += x[i] * y[i];
  }
  const double cov = sxy - sx * sy / n;
  return cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

inline double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

inline double oracle_mape(const std::vector<double>& p, const std::vector<double>& t) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - t[i]) / t[i];
  return s / static_cast<double>(p.size());
}

/// Kolmogorov-Smirnov statistic of a sample against uniform(lo, hi).
inline double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace testing
