#pragma once

#include <complex>

namespace mca {

// Direct-form-II-transposed biquad. a0 is normalized to 1.
class Biquad {
 public:
  Biquad() = default;
  Biquad(double b0, double b1, double b2, double a1, double a2) : b0_(b0), b1_(b1), b2_(b2), a1_(a1), a2_(a2) {}

  double step(double x) {
    const double y = b0_ * x + z1_;
    z1_ = b1_ * x - a1_ * y + z2_;
    z2_ = b2_ * x - a2_ * y;
    return y;
  }

  void reset() { z1_ = z2_ = 0.0; }

  double dc_gain() const { return (b0_ + b1_ + b2_) / (1.0 + a1_ + a2_); }
  std::complex<double> response(double omega, double dt) const;

 private:
  double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
  double z1_ = 0.0, z2_ = 0.0;
};

// Bilinear (Tustin) discretizations at sample period dt, cutoffs in rad/s.

/// s^2 / (s^2 + 2 zeta w s + w^2)
Biquad highpass2(double omega, double zeta, double dt);
/// w^2 / (s^2 + 2 zeta w s + w^2)
Biquad lowpass2(double omega, double zeta, double dt);
/// s / (s + w)
Biquad highpass1(double omega, double dt);
/// w / (s + w)
Biquad lowpass1(double omega, double dt);

}  // namespace mca
