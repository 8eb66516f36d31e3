#include "sonopose/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sonopose/rng.hpp"

namespace sonopose {

namespace {

double log_normal_pdf(double x, double mean, double std) {
  const double z = (x - mean) / std;
  return -0.5 * z * z - std::log(std) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

double log_likelihood(const std::vector<double>& xs, const GmmModel& m) {
  double ll = 0.0;
  for (double x : xs) {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(m.components.size());
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      const auto& c = m.components[j];
      terms[j] = std::log(c.weight) + log_normal_pdf(x, c.mean, c.std);
      max_term = std::max(max_term, terms[j]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - max_term);
    ll += max_term + std::log(sum);
  }
  return ll;
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to squared distance from the nearest center.
std::vector<double> kmeanspp_centers(const std::vector<double>& xs, int k,
                                     Rng& rng) {
  std::vector<double> centers;
  centers.push_back(xs[rng.index(xs.size())]);
  std::vector<double> d2(xs.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (xs[i] - c) * (xs[i] - c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(xs[rng.index(xs.size())]);
      continue;
    }
    double u = rng.uniform(0.0, total);
    std::size_t pick = xs.size() - 1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      u -= d2[i];
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(xs[pick]);
  }
  return centers;
}

}  // namespace

GmmModel fit_gmm(const std::vector<double>& samples, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("fit_gmm: k must be >= 1");
  if (samples.size() < static_cast<std::size_t>(10 * k))
    throw std::invalid_argument("fit_gmm: need at least 10*k samples");

  const double lo = *std::min_element(samples.begin(), samples.end());
  const double hi = *std::max_element(samples.begin(), samples.end());
  if (lo == hi && k > 1) {
    GmmModel m;
    m.components = {{1.0, lo, kGmmStdFloor}};
    m.degenerate = true;
    return m;
  }

  const std::size_t n = samples.size();
  double mean0 = 0.0;
  for (double x : samples) mean0 += x;
  mean0 /= static_cast<double>(n);
  double var0 = 0.0;
  for (double x : samples) var0 += (x - mean0) * (x - mean0);
  var0 /= static_cast<double>(n);
  const double std0 = std::max(std::sqrt(var0), kGmmStdFloor);

  Rng rng(seed);
  GmmModel model;
  for (double c : kmeanspp_centers(samples, k, rng))
    model.components.push_back({1.0 / k, c, std0});

  double ll_prev = log_likelihood(samples, model);
  model.ll_history.push_back(ll_prev);
  std::vector<double> resp(static_cast<std::size_t>(k));

  for (int iter = 0; iter < 500; ++iter) {
    GmmModel next = model;
    std::vector<double> w_sum(k, 0.0), x_sum(k, 0.0), xx_sum(k, 0.0);
    for (double x : samples) {
      double max_term = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const auto& c = model.components[j];
        resp[j] = std::log(c.weight) + log_normal_pdf(x, c.mean, c.std);
        max_term = std::max(max_term, resp[j]);
      }
      double denom = 0.0;
      for (int j = 0; j < k; ++j) {
        resp[j] = std::exp(resp[j] - max_term);
        denom += resp[j];
      }
      for (int j = 0; j < k; ++j) {
        const double r = resp[j] / denom;
        w_sum[j] += r;
        x_sum[j] += r * x;
        xx_sum[j] += r * x * x;
      }
    }
    for (int j = 0; j < k; ++j) {
      if (w_sum[j] < 1e-12) continue;  // starved component: keep parameters
      const double mu = x_sum[j] / w_sum[j];
      const double var = std::max(xx_sum[j] / w_sum[j] - mu * mu,
                                  kGmmStdFloor * kGmmStdFloor);
      next.components[j].weight = w_sum[j] / static_cast<double>(n);
      next.components[j].mean = mu;
      next.components[j].std = std::sqrt(var);
    }
    double total_w = 0.0;
    for (const auto& c : next.components) total_w += c.weight;
    for (auto& c : next.components) c.weight /= total_w;

    const double ll = log_likelihood(samples, next);
    // The variance floor can (rarely) force a downhill step; stop before
    // recording it so the reported history stays monotone — callers assert it.
    if (ll < ll_prev - 1e-12) break;
    model = std::move(next);
    model.ll_history.push_back(ll);
    if (ll - ll_prev < 1e-8) { ll_prev = ll; break; }
    ll_prev = ll;
  }
  return model;
}

GmmModel fit_gmm_bic(const std::vector<double>& samples, int k_max,
                     std::uint64_t seed) {
  if (k_max < 1) throw std::invalid_argument("fit_gmm_bic: k_max must be >= 1");
  GmmModel best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    if (samples.size() < static_cast<std::size_t>(10 * k)) break;
    GmmModel m = fit_gmm(samples, k, derive_seed(seed, static_cast<std::uint64_t>(k)));
    const double ll = m.ll_history.empty() ? log_likelihood(samples, m)
                                           : m.ll_history.back();
    const double params = 3.0 * k - 1.0;
    const double bic = -2.0 * ll + params * std::log(static_cast<double>(samples.size()));
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(m);
    }
  }
  return best;
}

std::vector<double> sample_gmm(const GmmModel& model, std::size_t n,
                               std::uint64_t seed) {
  if (model.components.empty())
    throw std::invalid_argument("sample_gmm: empty model");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, 1.0);
    std::size_t j = 0;
    for (; j + 1 < model.components.size(); ++j) {
      u -= model.components[j].weight;
      if (u <= 0.0) break;
    }
    const auto& c = model.components[j];
    out.push_back(rng.normal(c.mean, c.std));
  }
  return out;
}

std::string GmmModel::to_json_string() const {
  nlohmann::json j;
  j["components"] = nlohmann::json::array();
  for (const auto& c : components)
    j["components"].push_back(
        {{"weight", c.weight}, {"mean", c.mean}, {"std", c.std}});
  j["degenerate"] = degenerate;
  return j.dump(2);
}

GmmModel GmmModel::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GmmModel m;
  for (const auto& [key, value] : j.items()) {
    if (key != "components" && key != "degenerate")
      throw std::invalid_argument("mixture model: unknown key '" + key + "'");
    (void)value;
  }
  for (const auto& cj : j.at("components")) {
    for (const auto& [key, value] : cj.items()) {
      if (key != "weight" && key != "mean" && key != "std")
        throw std::invalid_argument("mixture component: unknown key '" + key + "'");
      (void)value;
    }
    GmmModel::Component c;
    c.weight = cj.at("weight").get<double>();
    c.mean = cj.at("mean").get<double>();
    c.std = cj.at("std").get<double>();
    if (!(c.weight > 0.0))
      throw std::invalid_argument("mixture component: weight must be positive");
    if (c.std < kGmmStdFloor)
      throw std::invalid_argument("mixture component: std below floor");
    m.components.push_back(c);
  }
  if (m.components.empty())
    throw std::invalid_argument("mixture model: no components");
  double total = 0.0;
  for (const auto& c : m.components) total += c.weight;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("mixture model: weights must sum to 1");
  m.degenerate = j.value("degenerate", false);
  return m;
}

}  // namespace sonopose
