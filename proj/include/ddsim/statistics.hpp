#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "ddsim/errors.hpp"
#include "ddsim/fermi_dirac.hpp"

namespace ddsim {

enum class StatisticsKind { Boltzmann, FermiDiracHalf, Blakemore };

/// Statistics function F mapping (v - z*psi) to a density, with inverse,
/// derivative and the diffusion enhancement D(n) = n (F^{-1})'(n).
///
/// Boltzmann and Fermi-Dirac 1/2 map onto (0, inf); Blakemore maps onto
/// (0, S) with S the saturation density.
class Statistics {
 public:
  static constexpr double boltzmann_eta_max = 700.0;
  static constexpr double min_density = 1e-300;

  Statistics() = default;

  static Statistics boltzmann() { return Statistics(StatisticsKind::Boltzmann, inf()); }
  static Statistics fermi_dirac_half() { return Statistics(StatisticsKind::FermiDiracHalf, inf()); }
  static Statistics blakemore(double saturation) {
    if (!(saturation > 0.0) || !std::isfinite(saturation)) {
      throw DomainError("Blakemore saturation density must be positive and finite");
    }
    return Statistics(StatisticsKind::Blakemore, saturation);
  }

  /// Parses "boltzmann", "fermi-dirac-half" or "blakemore".
  static Statistics from_name(std::string_view name, double saturation = inf()) {
    if (name == "boltzmann") return boltzmann();
    if (name == "fermi-dirac-half") return fermi_dirac_half();
    if (name == "blakemore") return blakemore(saturation);
    throw DomainError("unknown statistics '" + std::string(name) + "'");
  }

  StatisticsKind kind() const noexcept { return kind_; }
  double saturation() const noexcept { return saturation_; }
  bool bounded() const noexcept { return kind_ == StatisticsKind::Blakemore; }

  std::string name() const {
    switch (kind_) {
      case StatisticsKind::Boltzmann: return "boltzmann";
      case StatisticsKind::FermiDiracHalf: return "fermi-dirac-half";
      case StatisticsKind::Blakemore: return "blakemore";
    }
    return "unknown";
  }

  double operator()(double eta) const { return evaluate(eta).value; }

  ValueAndSlope evaluate(double eta) const {
    if (!std::isfinite(eta)) throw DomainError("statistics argument is not finite");
    switch (kind_) {
      case StatisticsKind::Boltzmann: {
        if (eta > boltzmann_eta_max) {
          throw OverflowError("Boltzmann statistics saturated: eta = " + std::to_string(eta));
        }
        const double e = std::exp(eta);
        return {e, e};
      }
      case StatisticsKind::FermiDiracHalf:
        return ::ddsim::fermi_dirac_half(eta);
      case StatisticsKind::Blakemore: {
        const double em = std::exp(-std::fabs(eta));
        const double den = 1.0 + em;
        double value = eta >= 0.0 ? saturation_ / den : saturation_ * em / den;
        // Rounding would otherwise reach S for eta >~ 37.
        if (value >= saturation_) value = std::nextafter(saturation_, 0.0);
        return {value, saturation_ * em / (den * den)};
      }
    }
    return {0.0, 0.0};
  }

  double inverse(double density) const {
    if (!(density > 0.0)) throw DomainError("statistics inverse needs a positive density");
    switch (kind_) {
      case StatisticsKind::Boltzmann:
        return std::log(std::max(density, min_density));
      case StatisticsKind::FermiDiracHalf:
        if (!std::isfinite(density)) throw DomainError("density is not finite");
        return fermi_dirac_half_inverse(density);
      case StatisticsKind::Blakemore:
        if (!(density < saturation_)) {
          throw DomainError("Blakemore inverse needs density below the saturation density");
        }
        return std::log(density) - std::log(saturation_ - density);
    }
    return 0.0;
  }

  double diffusion_enhancement(double density) const {
    switch (kind_) {
      case StatisticsKind::Boltzmann:
        if (!(density > 0.0)) throw DomainError("diffusion enhancement needs a positive density");
        return 1.0;
      case StatisticsKind::FermiDiracHalf: {
        const auto fs = ::ddsim::fermi_dirac_half(inverse(density));
        return fs.value / fs.slope;
      }
      case StatisticsKind::Blakemore:
        (void)inverse(density);
        return saturation_ / (saturation_ - density);
    }
    return 1.0;
  }

  bool operator==(const Statistics&) const = default;

 private:
  Statistics(StatisticsKind kind, double saturation) : kind_(kind), saturation_(saturation) {}
  static constexpr double inf() { return std::numeric_limits<double>::infinity(); }

  StatisticsKind kind_ = StatisticsKind::Boltzmann;
  double saturation_ = std::numeric_limits<double>::infinity();
};

inline double eval_statistics(const Statistics& f, double eta) { return f(eta); }
inline double eval_statistics_inverse(const Statistics& f, double density) { return f.inverse(density); }
inline double diffusion_enhancement(const Statistics& f, double density) {
  return f.diffusion_enhancement(density);
}

}  // namespace ddsim
