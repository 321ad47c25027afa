#pragma once

// Dormand-Prince 5(4) with FSAL reuse and a max-norm error controller.
// Operates on flat complex vectors; the right-hand side is any callable
// `void(double t, const ComplexVector& y, ComplexVector& dydt)`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

#include "hofsim/errors.hpp"
#include "hofsim/numerics.hpp"

namespace hofsim::dynamics {

struct StepControl {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 0.0;  // seconds, must be positive
  double min_step = 0.0;  // 0 means max_step * 1e-10
};

template <class Rhs>
class DormandPrince {
 public:
  DormandPrince(Rhs rhs, std::size_t dim, StepControl control)
      : rhs_(std::move(rhs)), control_(control), k1_(dim), k2_(dim), k3_(dim), k4_(dim), k5_(dim), k6_(dim),
        k7_(dim), tmp_(dim), y5_(dim) {
    if (!(control_.max_step > 0.0)) throw InvalidInput("integrator: max_step must be positive");
    if (control_.min_step <= 0.0) control_.min_step = control_.max_step * 1e-10;
    h_ = control_.max_step;
  }

  /// Forget the cached derivative (call after modifying y outside the integrator).
  void reset() { fsal_valid_ = false; }

  /// Advances y from t to exactly t_end with adaptive steps. `after_step`
  /// is invoked as after_step(t, y) after every accepted step.
  template <class Hook>
  void advance(double& t, ComplexVector& y, double t_end, Hook&& after_step) {
    while (t < t_end) {
      const double remaining = t_end - t;
      double h = std::min({h_, control_.max_step, remaining});
      const bool last = h >= remaining * (1.0 - 1e-12);
      if (last) h = remaining;
      const double err = attempt(t, y, h, tmp_);
      if (err <= 1.0) {
        t = last ? t_end : t + h;
        y.swap(tmp_);
        accept(t);
        h_ = std::max(control_.min_step, next_step(h, err));
        after_step(t, y);
      } else {
        h_ = next_step(h, err);
        if (h_ < control_.min_step) throw IntegrationError("step-size underflow", t);
      }
    }
  }

  void advance(double& t, ComplexVector& y, double t_end) {
    advance(t, y, t_end, [](double, const ComplexVector&) {});
  }

  /// One trial step of size h from (t, y) into y_out; returns the scaled error
  /// (<= 1 means acceptable). Does not commit anything; call accept() to reuse
  /// the final stage as the next first stage.
  double attempt(double t, const ComplexVector& y, double h, ComplexVector& y_out) {
    const std::size_t n = y.size();
    if (!fsal_valid_ || fsal_t_ != t) {
      rhs_(t, y, k1_);
    }
    stage(y, h, {a21}, {&k1_});
    rhs_(t + c2 * h, y5_, k2_);
    stage(y, h, {a31, a32}, {&k1_, &k2_});
    rhs_(t + c3 * h, y5_, k3_);
    stage(y, h, {a41, a42, a43}, {&k1_, &k2_, &k3_});
    rhs_(t + c4 * h, y5_, k4_);
    stage(y, h, {a51, a52, a53, a54}, {&k1_, &k2_, &k3_, &k4_});
    rhs_(t + c5 * h, y5_, k5_);
    stage(y, h, {a61, a62, a63, a64, a65}, {&k1_, &k2_, &k3_, &k4_, &k5_});
    rhs_(t + h, y5_, k6_);

    y_out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_out[i] = y[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
    }
    rhs_(t + h, y_out, k7_);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Complex e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double scale = control_.atol + control_.rtol * std::max(std::abs(y[i]), std::abs(y_out[i]));
      err = std::max(err, std::abs(e) / scale);
    }
    // The first stage at t stays valid for a retry with a smaller h.
    fsal_valid_ = true;
    fsal_t_ = t;
    return err;
  }

  /// Marks the last attempt as accepted so its final stage seeds the next
  /// step; `t_new` is the committed time (may differ from t + h by rounding).
  void accept(double t_new) {
    k1_.swap(k7_);
    fsal_t_ = t_new;
    fsal_valid_ = true;
  }

  static double next_step(double h, double err) {
    if (err == 0.0) return 5.0 * h;
    return h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
  }

  double suggested_step() const { return h_; }
  const StepControl& control() const { return control_; }

 private:
  void stage(const ComplexVector& y, double h, std::initializer_list<double> a,
             std::initializer_list<const ComplexVector*> k) {
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
      Complex acc{};
      auto ai = a.begin();
      for (const ComplexVector* kj : k) acc += *ai++ * (*kj)[i];
      y5_[i] = y[i] + h * acc;
    }
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // Difference between the 5th- and embedded 4th-order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  Rhs rhs_;
  StepControl control_;
  ComplexVector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y5_;
  double h_ = 0.0;
  bool fsal_valid_ = false;
  double fsal_t_ = 0.0;
};

}  // namespace hofsim::dynamics
