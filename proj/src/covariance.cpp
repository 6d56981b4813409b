#include "nestavg/covariance.hpp"

#include <cmath>
#include <string>

namespace nestavg {

CovarianceSpec CovarianceSpec::scalar(double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("scalar covariance needs sigma2 > 0");
  CovarianceSpec c;
  c.kind_ = Kind::scalar;
  c.sigma2_ = sigma2;
  return c;
}

CovarianceSpec CovarianceSpec::diagonal(Eigen::VectorXd d) {
  if (d.size() == 0 || (d.array() <= 0.0).any())
    throw DomainError("diagonal covariance needs positive entries");
  CovarianceSpec c;
  c.kind_ = Kind::diagonal;
  c.d_ = std::move(d);
  return c;
}

CovarianceSpec CovarianceSpec::ar1(double rho, double var) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("ar1 needs |rho| < 1");
  if (!(var > 0.0)) throw DomainError("ar1 needs var > 0");
  CovarianceSpec c;
  c.kind_ = Kind::ar1;
  c.rho_ = rho;
  c.var_ = var;
  return c;
}

CovarianceSpec CovarianceSpec::sum(std::vector<CovarianceSpec> terms) {
  if (terms.empty()) throw DomainError("sum covariance needs at least one term");
  CovarianceSpec c;
  c.kind_ = Kind::sum;
  c.terms_ = std::move(terms);
  return c;
}

namespace {

// y = var * rho^{|i-j|} x  via forward/backward first-order recursions
Eigen::VectorXd ar1_matvec(double rho, double var, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd fwd(n), bwd(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc = rho * acc + x[i];
    fwd[i] = acc;
  }
  acc = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    acc = rho * acc + x[i];
    bwd[i] = acc;
  }
  return var * (fwd + bwd - x);
}

}  // namespace

Eigen::VectorXd CovarianceSpec::apply(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case Kind::scalar:
      return sigma2_ * x;
    case Kind::diagonal:
      if (d_.size() != x.size())
        throw DimensionError("diagonal covariance length mismatch");
      return d_.cwiseProduct(x);
    case Kind::ar1:
      return ar1_matvec(rho_, var_, x);
    case Kind::sum: {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
      for (const auto& t : terms_) out += t.apply(x);
      return out;
    }
  }
  throw RunError("unreachable covariance kind");
}

double CovarianceSpec::quad(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case Kind::scalar:
      return sigma2_ * x.squaredNorm();
    case Kind::diagonal:
      if (d_.size() != x.size())
        throw DimensionError("diagonal covariance length mismatch");
      return (d_.array() * x.array().square()).sum();
    case Kind::ar1:
      return x.dot(ar1_matvec(rho_, var_, x));
    case Kind::sum: {
      double s = 0.0;
      for (const auto& t : terms_) s += t.quad(x);
      return s;
    }
  }
  throw RunError("unreachable covariance kind");
}

Eigen::VectorXd CovarianceSpec::sample(int n, RngStream& rng) const {
  switch (kind_) {
    case Kind::scalar: {
      const double s = std::sqrt(sigma2_);
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = s * rng.gaussian();
      return z;
    }
    case Kind::diagonal: {
      if (d_.size() != n) throw DimensionError("diagonal covariance length mismatch");
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = std::sqrt(d_[i]) * rng.gaussian();
      return z;
    }
    case Kind::ar1: {
      // stationary start, eps_i = rho eps_{i-1} + e_i with Var e = var (1 - rho^2)
      Eigen::VectorXd z(n);
      const double innov = std::sqrt(var_ * (1.0 - rho_ * rho_));
      z[0] = std::sqrt(var_) * rng.gaussian();
      for (int i = 1; i < n; ++i) z[i] = rho_ * z[i - 1] + innov * rng.gaussian();
      return z;
    }
    case Kind::sum: {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
      for (const auto& t : terms_) z += t.sample(n, rng);
      return z;
    }
  }
  throw RunError("unreachable covariance kind");
}

Eigen::MatrixXd CovarianceSpec::materialize(int n) const {
  switch (kind_) {
    case Kind::scalar:
      return sigma2_ * Eigen::MatrixXd::Identity(n, n);
    case Kind::diagonal:
      if (d_.size() != n) throw DimensionError("diagonal covariance length mismatch");
      return d_.asDiagonal();
    case Kind::ar1: {
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = var_ * std::pow(rho_, std::abs(i - j));
      return m;
    }
    case Kind::sum: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      for (const auto& t : terms_) m += t.materialize(n);
      return m;
    }
  }
  throw RunError("unreachable covariance kind");
}

nlohmann::json CovarianceSpec::to_config() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::scalar:
      j["kind"] = "scalar";
      j["sigma2"] = sigma2_;
      break;
    case Kind::diagonal:
      j["kind"] = "diagonal";
      j["d"] = std::vector<double>(d_.data(), d_.data() + d_.size());
      break;
    case Kind::ar1:
      j["kind"] = "ar1";
      j["rho"] = rho_;
      j["var"] = var_;
      break;
    case Kind::sum: {
      j["kind"] = "sum";
      auto arr = nlohmann::json::array();
      for (const auto& t : terms_) arr.push_back(t.to_config());
      j["terms"] = arr;
      break;
    }
  }
  return j;
}

CovarianceSpec CovarianceSpec::from_config(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "scalar") return scalar(j.at("sigma2").get<double>());
  if (kind == "diagonal") {
    const auto v = j.at("d").get<std::vector<double>>();
    return diagonal(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size())));
  }
  if (kind == "ar1")
    return ar1(j.at("rho").get<double>(), j.value("var", 1.0));
  if (kind == "sum") {
    std::vector<CovarianceSpec> terms;
    for (const auto& t : j.at("terms")) terms.push_back(from_config(t));
    return sum(std::move(terms));
  }
  throw DomainError("unknown covariance kind '" + kind + "'");
}

double trace_increment(const CovarianceSpec& cov, const NestedDesign& d, int m) {
  if (cov.kind() == CovarianceSpec::Kind::scalar)
    return cov.scalar_var() * d.group_size(m);
  if (cov.kind() == CovarianceSpec::Kind::sum) {
    double s = 0.0;
    for (const auto& t : cov.terms()) s += trace_increment(t, d, m);
    return s;
  }
  const auto Qm = d.group_cols(m);
  double s = 0.0;
  for (int j = 0; j < Qm.cols(); ++j) s += cov.quad(Qm.col(j));
  return s;
}

double trace_hat(const CovarianceSpec& cov, const NestedDesign& d, int m) {
  if (m < 0 || m > d.q()) throw IndexError("trace_hat index outside 0..q");
  double s = 0.0;
  for (int k = 1; k <= m; ++k) s += trace_increment(cov, d, k);
  return s;
}

}  // namespace nestavg
