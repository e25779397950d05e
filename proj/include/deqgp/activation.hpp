#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deqgp/errors.hpp"

namespace deqgp {

enum class ActivationKind { Tanh, ReLU, Erf, Identity, Polynomial };

// Erf is scaled so the slope at the origin is exactly 1, keeping every
// built-in variant 1-Lipschitz: erf'(kErfScale * x) * kErfScale <= 1.
inline constexpr double kErfScale = 0.8862269254527580;  // sqrt(pi)/2

// Identity and Polynomial exist as analytic oracles for tests; they are not
// admissible model activations (the theory requires non-polynomial phi).
class Activation {
 public:
  Activation(ActivationKind kind = ActivationKind::Tanh)  // NOLINT(google-explicit-constructor)
      : kind_(kind) {
    if (kind == ActivationKind::Polynomial)
      throw ConfigError("Polynomial activation requires coefficients");
  }

  static Activation polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) throw ConfigError("polynomial needs at least one coefficient");
    Activation a(ActivationKind::Identity);
    a.kind_ = ActivationKind::Polynomial;
    a.coeffs_ = std::move(coeffs);
    return a;
  }

  ActivationKind kind() const { return kind_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

  double operator()(double x) const {
    if (!std::isfinite(x)) throw std::domain_error("activation input is not finite");
    switch (kind_) {
      case ActivationKind::Tanh:
        return std::tanh(x);
      case ActivationKind::ReLU:
        return x > 0.0 ? x : 0.0;
      case ActivationKind::Erf:
        return std::erf(kErfScale * x);
      case ActivationKind::Identity:
        return x;
      case ActivationKind::Polynomial: {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
        return acc;
      }
    }
    throw std::logic_error("unreachable");
  }

  // phi has a kink at 0 (quadrature must split there instead of integrating
  // across it).
  bool has_kink_at_zero() const { return kind_ == ActivationKind::ReLU; }

  bool is_odd() const {
    return kind_ == ActivationKind::Tanh || kind_ == ActivationKind::Erf ||
           kind_ == ActivationKind::Identity;
  }

  double lipschitz_constant() const {
    switch (kind_) {
      case ActivationKind::Tanh:
      case ActivationKind::ReLU:
      case ActivationKind::Erf:
      case ActivationKind::Identity:
        return 1.0;
      case ActivationKind::Polynomial:
        throw NumericalError("polynomial activation has no global Lipschitz constant");
    }
    throw std::logic_error("unreachable");
  }

  std::string name() const {
    switch (kind_) {
      case ActivationKind::Tanh: return "tanh";
      case ActivationKind::ReLU: return "relu";
      case ActivationKind::Erf: return "erf";
      case ActivationKind::Identity: return "identity";
      case ActivationKind::Polynomial: {
        std::string s = "poly:";
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
          if (i) s += ',';
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", coeffs_[i]);
          s += buf;
        }
        return s;
      }
    }
    throw std::logic_error("unreachable");
  }

  static Activation parse(const std::string& text) {
    if (text == "tanh") return Activation(ActivationKind::Tanh);
    if (text == "relu") return Activation(ActivationKind::ReLU);
    if (text == "erf") return Activation(ActivationKind::Erf);
    if (text == "identity") return Activation(ActivationKind::Identity);
    if (text.rfind("poly:", 0) == 0) {
      std::vector<double> cs;
      std::string body = text.substr(5);
      std::size_t pos = 0;
      while (pos <= body.size()) {
        std::size_t comma = body.find(',', pos);
        std::string tok = body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        try {
          cs.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw ConfigError("bad polynomial coefficient '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      return polynomial(std::move(cs));
    }
    throw ConfigError("unknown activation '" + text + "'");
  }

  bool operator==(const Activation& other) const {
    return kind_ == other.kind_ && coeffs_ == other.coeffs_;
  }

 private:
  ActivationKind kind_;
  std::vector<double> coeffs_;
};

inline double apply_activation(const Activation& activation, double x) {
  return activation(x);
}

}  // namespace deqgp
