#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "beliefaudit/info.hpp"

namespace testsupport {

// Independent draw helpers; deliberately not the library's RNG utilities.
inline std::vector<double> random_simplex(std::mt19937& gen, std::size_t n, double min_mass = 0.0) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = g(gen) + min_mass;
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

inline std::vector<double> random_likelihood(std::mt19937& gen, std::size_t n, double lo = 0.01) {
  std::uniform_real_distribution<double> u(lo, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// Sum of a_i ln(a_i / b_i) in long double, zero terms skipped.
inline long double kl_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    s += static_cast<long double>(a[i]) * std::log(static_cast<long double>(a[i]) / b[i]);
  }
  return s;
}

inline std::vector<double> bayes_oracle(const std::vector<double>& prior, const std::vector<double>& lik) {
  long double z = 0.0L;
  for (std::size_t i = 0; i < prior.size(); ++i) z += static_cast<long double>(prior[i]) * lik[i];
  std::vector<double> out(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) out[i] = static_cast<double>(prior[i] * lik[i] / z);
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = info ? std::string(info->test_suite_name()) + "_" + info->name() : "beliefaudit";
    for (auto& c : name) {
      if (c == '/') c = '_';
    }
    static std::atomic<int> serial{0};
    path_ = std::filesystem::temp_directory_path() /
            ("beliefaudit_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(serial++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string fixed_clock() { return "2025-01-01T00:00:00Z"; }

}  // namespace testsupport
