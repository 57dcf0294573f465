#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace spotvol {

// Cross-sectional dimension is capped at 4, so vectors and matrices live on
// the stack. Most production paths run with dim() == 1.
constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

enum class TimeMode { TransactionTime, ClockTime };

// One cleaned market event. `price` is the traded price; quotes and book
// levels are optional context consumed by the matching noise models.
struct TickObservation {
  double time = 0.0;  // seconds since midnight
  double price = 0.0;
  std::optional<double> bid;
  std::optional<double> ask;
  std::vector<double> book_levels;  // ascending grid of quotable prices
  std::string exchange;
  std::string condition;
};

}  // namespace spotvol
