#pragma once
// Dense reference filters for one scalar dimension, written in information
// form with Eigen so they share no arithmetic with the covariance-form code
// under test.

#include <Eigen/Dense>

#include <vector>

namespace oracle {

struct Gauss2 {
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
};

// Random-walk state w_t = w_{t-1} + N(0, qI), observation g_t = (mu_t, 1) w_t
// + N(0, r), prior N(0, p0 I). Returns the filtering posterior after the
// last observation.
inline Gauss2 information_filter(double p0, double q, double r,
                                 const std::vector<double>& mus,
                                 const std::vector<double>& gs) {
  Gauss2 s;
  s.P = p0 * Eigen::Matrix2d::Identity();
  for (std::size_t t = 0; t < mus.size(); ++t) {
    const Eigen::Matrix2d prior = s.P + q * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d prior_info = prior.inverse();
    const Eigen::Vector2d h(mus[t], 1.0);
    const Eigen::Matrix2d info = prior_info + h * h.transpose() / r;
    const Eigen::Vector2d eta = prior_info * s.m + h * gs[t] / r;
    s.P = info.inverse();
    s.m = s.P * eta;
  }
  return s;
}

// q = 0: the posterior over w given all observations at once.
inline Gauss2 batch_posterior(double p0, double r,
                              const std::vector<double>& mus,
                              const std::vector<double>& gs) {
  Eigen::Matrix2d info = Eigen::Matrix2d::Identity() / p0;
  Eigen::Vector2d eta = Eigen::Vector2d::Zero();
  for (std::size_t t = 0; t < mus.size(); ++t) {
    const Eigen::Vector2d h(mus[t], 1.0);
    info += h * h.transpose() / r;
    eta += h * gs[t] / r;
  }
  Gauss2 s;
  s.P = info.inverse();
  s.m = s.P * eta;
  return s;
}

}  // namespace oracle
