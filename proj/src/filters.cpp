#include "mca/filters.hpp"

namespace mca {

std::complex<double> Biquad::response(double omega, double dt) const {
  const std::complex<double> zi = std::polar(1.0, -omega * dt);
  const std::complex<double> zi2 = zi * zi;
  return (b0_ + b1_ * zi + b2_ * zi2) / (1.0 + a1_ * zi + a2_ * zi2);
}

Biquad highpass2(double w, double zeta, double dt) {
  const double k = 2.0 / dt;
  const double a0 = k * k + 2.0 * zeta * w * k + w * w;
  return {k * k / a0, -2.0 * k * k / a0, k * k / a0, (2.0 * w * w - 2.0 * k * k) / a0,
          (k * k - 2.0 * zeta * w * k + w * w) / a0};
}

Biquad lowpass2(double w, double zeta, double dt) {
  const double k = 2.0 / dt;
  const double a0 = k * k + 2.0 * zeta * w * k + w * w;
  const double g = w * w / a0;
  return {g, 2.0 * g, g, (2.0 * w * w - 2.0 * k * k) / a0, (k * k - 2.0 * zeta * w * k + w * w) / a0};
}

Biquad highpass1(double w, double dt) {
  const double k = 2.0 / dt;
  return {k / (k + w), -k / (k + w), 0.0, (w - k) / (k + w), 0.0};
}

Biquad lowpass1(double w, double dt) {
  const double k = 2.0 / dt;
  return {w / (k + w), w / (k + w), 0.0, (w - k) / (k + w), 0.0};
}

}  // namespace mca
