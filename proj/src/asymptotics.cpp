#include "nestavg/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nestavg {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Lentz continued fraction for the regularized incomplete beta
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double pow_kappa(const Kappa& kappa, double e) {
  // kappa^e with the infinite variant resolved exactly: e < 0 -> 0
  if (kappa.is_inf) {
    if (e < 0.0) return 0.0;
    if (e == 0.0) return 1.0;
    throw DomainError("kappa^e diverges for infinite kappa, e > 0");
  }
  return std::pow(kappa.value, e);
}

}  // namespace

double inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw DomainError("inc_beta needs a, b > 0");
  if (!(x >= 0.0) || !(x <= 1.0))
    throw DomainError("inc_beta needs 0 <= x <= 1");
  const double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return std::exp(ln_beta);
  double reg;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - ln_beta);
  if (x < (a + 1.0) / (a + b + 2.0))
    reg = front * betacf(a, b, x) / a;
  else
    reg = 1.0 - front * betacf(b, a, 1.0 - x) / b;
  return reg * std::exp(ln_beta);
}

int i_star(int N, double alpha, const Kappa& kappa) {
  if (N < 1) throw DomainError("need N >= 1");
  if (kappa.is_inf) return 0;
  const double k2a = std::pow(kappa.value, 2.0 * alpha);
  int i = static_cast<int>(std::ceil(static_cast<double>(N) / (1.0 + k2a) - 0.5));
  return std::clamp(i, 0, N);
}

double psi_star(int N, double alpha, const Kappa& kappa) {
  if (N < 1) throw DomainError("need N >= 1");
  if (!(alpha > 0.5)) throw DomainError("need alpha > 1/2");
  const double inv2a = 1.0 / (2.0 * alpha);
  const int is = i_star(N, alpha, kappa);
  double sum = 0.0;
  for (int i = is; i <= N - 1; ++i) {
    const double t = (2.0 * i + 1.0) / (2.0 * N);
    sum += std::pow(t, 1.0 - inv2a) * std::pow(1.0 - t, inv2a);
  }
  sum *= 2.0 / N;
  const double frac = static_cast<double>(is) / N;
  double second = 0.0;
  if (!kappa.is_inf)
    second = (2.0 * alpha - 1.0) * inv2a * frac * frac * kappa.value;
  const double third =
      inv2a * (1.0 - frac) * (1.0 - frac) * pow_kappa(kappa, 1.0 - 2.0 * alpha);
  return sum + second - third;
}

double psi_star_limit(double alpha, const Kappa& kappa) {
  if (!(alpha > 0.5)) throw DomainError("need alpha > 1/2");
  const double inv2a = 1.0 / (2.0 * alpha);
  const double x = kappa.is_inf ? 0.0 : 1.0 / (1.0 + std::pow(kappa.value, 2.0 * alpha));
  const double pisin = kPi / std::sin(kPi * inv2a);
  return (2.0 * alpha - 1.0) / (4.0 * alpha * alpha) *
         (pisin - inc_beta(x, 1.0 - inv2a, inv2a));
}

double limit_ratio(const DecayModel& model) {
  if (model.kind == Decay::exponential) return 1.0;
  const double a = model.rate;
  if (!(a > 0.5)) throw DomainError("algebraic decay needs alpha > 1/2");
  if (model.N < 1) throw DomainError("need N >= 1");
  const double inv2a = 1.0 / (2.0 * a);
  const double ktail = pow_kappa(model.kappa, 1.0 - 2.0 * a) * inv2a;
  const double num = psi_star_limit(a, model.kappa) + ktail;
  const double den = psi_star(model.N, a, model.kappa) + ktail;
  return num / den;
}

MRule MRule::fixed(int M) {
  if (M < 1) throw DomainError("fixed M rule needs M >= 1");
  MRule r;
  r.kind = Kind::fixed;
  r.fixed_M = M;
  return r;
}

MRule MRule::power(double coef, double exponent) {
  if (!(coef > 0.0) || !(exponent > 0.0) || !(exponent < 1.0))
    throw RegimeError("power rule needs coef > 0 and 0 < exponent < 1");
  MRule r;
  r.kind = Kind::power;
  r.coef = coef;
  r.exponent = exponent;
  return r;
}

MRule MRule::of_kappa(Kappa k) {
  MRule r;
  r.kind = Kind::kappa;
  r.kappa_value = k;
  return r;
}

namespace {

AsymptoticRisk algebraic_kappa_regime(double alpha, double sigma2, double n,
                                      const Kappa& kappa, int N) {
  const double inv2a = 1.0 / (2.0 * alpha);
  const double base = std::pow(n / sigma2, inv2a - 1.0);
  const double ktail = pow_kappa(kappa, 1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0);
  const double two_a = 2.0 * alpha;
  AsymptoticRisk out;
  out.regime = "M2-kappa";
  out.simplex = base * (psi_star_limit(alpha, kappa) * two_a / (two_a - 1.0) + ktail);
  out.grid = base * (psi_star(N, alpha, kappa) * two_a / (two_a - 1.0) + ktail);
  if (kappa.is_inf || kappa.value >= 1.0)
    out.ms = base * two_a / (two_a - 1.0);
  else
    out.ms = base * (kappa.value + ktail);
  return out;
}

}  // namespace

AsymptoticRisk asymptotic_risk(const DecayModel& model, double n, const MRule& rule) {
  if (!(n > 1.0)) throw DomainError("need n > 1");
  const double sigma2 = model.sigma2;
  AsymptoticRisk out;

  if (model.kind == Decay::algebraic) {
    const double alpha = model.rate;
    if (!(alpha > 0.5)) throw DomainError("algebraic decay needs alpha > 1/2");
    const double inv2a = 1.0 / (2.0 * alpha);
    const double mss = std::pow(n / sigma2, inv2a);
    if (mss < 2.0) throw RegimeError("n too small: m** < 2 under this decay");
    switch (rule.kind) {
      case MRule::Kind::fixed: {
        out.regime = "M1-fixed";
        const double tail = algebraic_tail(alpha, rule.fixed_M);
        out.ms = out.simplex = out.grid = tail;
        return out;
      }
      case MRule::Kind::power: {
        if (rule.exponent < inv2a) {
          out.regime = "M1-diverging";
          const double M = std::round(rule.coef * std::pow(n, rule.exponent));
          if (M < 2.0) throw RegimeError("power rule gives M < 2 at this n");
          const double v = std::pow(M, 1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0);
          out.ms = out.simplex = out.grid = v;
          return out;
        }
        Kappa k = rule.exponent > inv2a
                      ? Kappa::infinite()
                      : Kappa::finite(rule.coef * std::pow(sigma2, inv2a));
        return algebraic_kappa_regime(alpha, sigma2, n, k, model.N);
      }
      case MRule::Kind::kappa:
        return algebraic_kappa_regime(alpha, sigma2, n, rule.kappa_value, model.N);
    }
    throw RegimeError("unclassifiable M rule");
  }

  // exponential family: m** ~ log(n/sigma2)/(2c)
  const double c = model.rate;
  if (!(c > 0.0)) throw DomainError("exponential decay needs c > 0");
  const double mss = std::log(n / sigma2) / (2.0 * c);
  if (mss < 2.0) throw RegimeError("n too small: m** < 2 under this decay");
  double Mn = 0.0;
  double ratio = 0.0;
  switch (rule.kind) {
    case MRule::Kind::fixed:
      Mn = rule.fixed_M;
      ratio = Mn / mss;
      break;
    case MRule::Kind::power:
      Mn = std::round(rule.coef * std::pow(n, rule.exponent));
      ratio = 10.0;  // any power beats log n eventually
      break;
    case MRule::Kind::kappa:
      if (rule.kappa_value.is_inf) {
        ratio = 10.0;
      } else {
        ratio = rule.kappa_value.value;
        Mn = ratio * mss;
      }
      break;
  }
  const double e2c = std::exp(2.0 * c);
  if (ratio < 1.0) {
    out.regime = "exp-below";
    const double v = std::exp(-2.0 * c * Mn) / (e2c - 1.0);
    out.ms = out.simplex = out.grid = v;
    return out;
  }
  if (ratio == 1.0) {
    out.regime = "exp-critical";
    const double v = sigma2 * std::log(n / sigma2) / (2.0 * c * n) +
                     std::exp(-2.0 * c * Mn) / (e2c - 1.0);
    out.ms = out.simplex = out.grid = v;
    return out;
  }
  out.regime = "exp-above";
  const double v = sigma2 * std::log(n / sigma2) / (2.0 * c * n);
  out.ms = out.simplex = out.grid = v;
  return out;
}

DecayClass decay_classify(const Eigen::VectorXd& theta, double k) {
  if (!(k > 1.0)) throw DomainError("decay_classify needs k > 1");
  int len = 0;
  while (len < theta.size() && theta[len] > 1e-14) ++len;
  if (len < 10)
    throw TooShortError("need at least 10 positive leading entries, got " +
                        std::to_string(len));
  std::vector<double> ratios;
  const int m0 = std::max(2, len / 5);
  for (int m = m0;; ++m) {
    const int idx = static_cast<int>(std::floor(k * m));
    if (idx > len) break;
    ratios.push_back(theta[idx - 1] / theta[m - 1]);
  }
  if (ratios.size() < 3) throw TooShortError("too few tail ratios");

  const int nr = static_cast<int>(ratios.size());
  auto mean_of = [&](int lo, int hi) {
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += ratios[i];
    return s / (hi - lo);
  };
  const double head = mean_of(0, std::min(3, nr));
  const double tail = mean_of(std::max(0, nr - 3), nr);
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[nr / 2];
  const double lo = sorted.front();
  const double hi = sorted.back();

  if (tail < 0.05 && tail < 0.5 * head) return DecayClass::a2_like;
  if (med >= 0.02 && med <= 0.95 && hi <= 0.98 && hi - lo <= 0.25 * med + 0.05)
    return DecayClass::a1_like;
  return DecayClass::inconclusive;
}

double grid_gap_lower_bound(double alpha, double c_lower, int N, double n,
                            double sigma2) {
  if (!(alpha > 0.5) || !(c_lower > 0.0) || N < 1 || !(n > 1.0) || !(sigma2 > 0.0))
    throw DomainError("grid_gap_lower_bound parameter outside its domain");
  const double w = std::min(c_lower, std::pow(2.0 * N - 1.0, -1.0 / (2.0 * alpha)));
  const double denom = std::pow(2.0, 2.0 * alpha + 1.0) * std::pow(w, -2.0 * alpha) + 2.0;
  return w * sigma2 / denom * std::pow(n / sigma2, 1.0 / (2.0 * alpha));
}

double algebraic_tail(double alpha, long M) {
  if (!(alpha > 0.5)) throw DomainError("algebraic tail needs alpha > 1/2");
  if (M < 0) throw DomainError("algebraic tail needs M >= 0");
  const double e = 2.0 * alpha;
  double s = 0.0;
  const long last = M + 100000;
  for (long m = last; m > M; --m) s += std::pow(static_cast<double>(m), -e);
  // midpoint tail: int_{last+1/2}^inf x^{-2a} dx
  s += std::pow(static_cast<double>(last) + 0.5, 1.0 - e) / (e - 1.0);
  return s;
}

}  // namespace nestavg
