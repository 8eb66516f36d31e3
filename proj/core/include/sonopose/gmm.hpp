#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sonopose {

/// Scalar Gaussian mixture fitted to attacked-sensor samples.
struct GmmModel {
  struct Component {
    double weight = 1.0;
    double mean = 0.0;
    double std = 1.0;
  };
  std::vector<Component> components;
  /// Set when the input collapsed (all samples identical with K > 1) and a
  /// single floored-variance component was returned instead.
  bool degenerate = false;
  /// Log-likelihood after every EM iteration (non-decreasing by construction;
  /// asserted in tests). Empty for degenerate fits.
  std::vector<double> ll_history;

  std::string to_json_string() const;
  static GmmModel from_json_string(const std::string& text);
};

/// Minimum component standard deviation; EM floors variances here to avoid
/// collapse onto a single sample.
inline constexpr double kGmmStdFloor = 1e-4;

/// Expectation-maximization fit of a K-component mixture, initialized with
/// k-means++ seeding. Converges when the log-likelihood improves by less
/// than 1e-8 or after 500 iterations. Deterministic given the seed.
/// Requires samples.size() >= 10*K.
GmmModel fit_gmm(const std::vector<double>& samples, int k, std::uint64_t seed);

/// Fits K = 1..k_max and returns the model with the lowest Bayesian
/// information criterion.
GmmModel fit_gmm_bic(const std::vector<double>& samples, int k_max,
                     std::uint64_t seed);

/// n i.i.d. draws from the mixture; deterministic given the seed.
std::vector<double> sample_gmm(const GmmModel& model, std::size_t n,
                               std::uint64_t seed);

}  // namespace sonopose
