#include "spotvol/sages.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spotvol {

double sages_kernel(double u) {
  if (!(u >= 0.0)) throw std::invalid_argument("sages_kernel: u must be >= 0");
  const double inner = std::max(u - 1.0 / 6.0, 0.0);
  return std::max(1.0 - inner, 0.0);
}

double sages_divergence(double s2, double s2_tilde) {
  if (!(s2 > 0.0) || !(s2_tilde > 0.0))
    throw std::invalid_argument("sages_divergence: variances must be > 0");
  const double r = s2 / s2_tilde;
  return -0.5 * (std::log(r) + 1.0 - r);
}

void SagesConfig::validate() const {
  if (lambdas.size() < 2) throw std::invalid_argument("SagesConfig: need at least two scales");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0 && lambdas[k] < 1.0))
      throw std::invalid_argument("SagesConfig: step sizes must be in (0,1)");
    if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
      throw std::invalid_argument("SagesConfig: step sizes must be strictly decreasing");
  }
  if (kappas.size() + 1 != lambdas.size())
    throw std::invalid_argument("SagesConfig: need exactly K-1 critical values");
  for (double kp : kappas)
    if (!(kp > 0.0)) throw std::invalid_argument("SagesConfig: critical values must be > 0");
}

std::uint64_t SagesConfig::config_hash(double sigma_null, int n_particles) const {
  std::ostringstream os;
  os << "sages.v1;K=" << lambdas.size() << ";N=" << n_particles << ";sigma_null=";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", sigma_null);
  os << buf;
  for (double l : lambdas) {
    std::snprintf(buf, sizeof buf, ";%.17g", l);
    os << buf;
  }
  return fnv1a64(os.str());
}

double sages_combine(std::span<const double> sigma2_by_scale, const SagesConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(sigma2_by_scale.size()) != cfg.K())
    throw std::invalid_argument("sages_combine: expected one variance per scale");
  double agg = sigma2_by_scale[0];
  if (!(agg > 0.0)) throw std::invalid_argument("sages_combine: variances must be > 0");
  for (int k = 1; k < cfg.K(); ++k) {
    const double s2 = sigma2_by_scale[static_cast<std::size_t>(k)];
    if (!(s2 > 0.0)) throw std::invalid_argument("sages_combine: variances must be > 0");
    const double u = sages_divergence(s2, agg) /
                     (cfg.kappas[static_cast<std::size_t>(k - 1)] *
                      cfg.lambdas[static_cast<std::size_t>(k)]);
    const double gamma = sages_kernel(u);
    agg = 1.0 / (gamma / s2 + (1.0 - gamma) / agg);
  }
  return agg;
}

SagesState::SagesState(const SagesConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  estimators_.reserve(cfg_.lambdas.size());
  for (double l : cfg_.lambdas) estimators_.emplace_back(1, FixedStep{l});
}

bool SagesState::initialized() const { return estimators_.front().initialized(); }

void SagesState::seed(double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("SagesState::seed: variance must be > 0");
  Mat s(1, 1);
  s(0, 0) = sigma2;
  for (auto& est : estimators_) est.seed(s);
  aggregate_ = sigma2;
}

void SagesState::update(double breve) {
  Mat b(1, 1);
  b(0, 0) = breve;
  for (auto& est : estimators_) est.update(b);
  std::vector<double> s2(estimators_.size());
  for (std::size_t k = 0; k < estimators_.size(); ++k) s2[k] = estimators_[k].sigma()(0, 0);
  aggregate_ = sages_combine(s2, cfg_);
}

double SagesState::aggregate() const {
  if (!initialized()) throw std::logic_error("SagesState: no update absorbed yet");
  return aggregate_;
}

double SagesState::scale_estimate(int k) const {
  if (k < 0 || k >= cfg_.K()) throw std::out_of_range("SagesState::scale_estimate");
  return estimators_[static_cast<std::size_t>(k)].sigma()(0, 0);
}

void write_kappa_file(std::ostream& os, const SagesConfig& cfg, std::uint64_t config_hash) {
  cfg.validate();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# spotvol-kappa v1 hash=" << buf << "\n";
  for (double kp : cfg.kappas) {
    std::snprintf(buf, sizeof buf, "%.17g", kp);
    os << buf << "\n";
  }
}

std::vector<double> read_kappa_file(std::istream& is, std::uint64_t expected_hash) {
  std::string header;
  if (!std::getline(is, header))
    throw std::runtime_error("kappa file: empty file");
  const std::string prefix = "# spotvol-kappa v1 hash=";
  if (header.rfind(prefix, 0) != 0)
    throw std::runtime_error("kappa file: unrecognized header");
  const std::string hex = header.substr(prefix.size());
  char* endp = nullptr;
  const std::uint64_t got = std::strtoull(hex.c_str(), &endp, 16);
  if (endp == hex.c_str())
    throw std::runtime_error("kappa file: malformed hash");
  if (got != expected_hash)
    throw std::runtime_error(
        "kappa file: config hash mismatch; recalibrate for the current settings");
  std::vector<double> kappas;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    kappas.push_back(std::stod(line));
  }
  if (kappas.empty()) throw std::runtime_error("kappa file: no critical values");
  return kappas;
}

std::vector<double> sages_default_grid(int K, double hi, double lo) {
  if (K < 2) throw std::invalid_argument("sages_default_grid: need K >= 2");
  if (!(lo > 0.0 && hi > lo && hi < 1.0))
    throw std::invalid_argument("sages_default_grid: need 0 < lo < hi < 1");
  std::vector<double> grid(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    grid[static_cast<std::size_t>(k)] = hi - (hi - lo) * k / (K - 1);
  return grid;
}

}  // namespace spotvol
