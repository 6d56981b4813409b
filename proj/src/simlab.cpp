#include "nestavg/simlab.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "nestavg/averagers.hpp"
#include "nestavg/csv.hpp"
#include "nestavg/selectors.hpp"

namespace nestavg {

std::string method_name(Method m) {
  switch (m) {
    case Method::aic: return "aic";
    case Method::bic: return "bic";
    case Method::cp: return "cp";
    case Method::loocv: return "loocv";
    case Method::mma: return "mma";
    case Method::jma: return "jma";
    case Method::jma2: return "jma2";
    case Method::oracle_w: return "oracle_w";
  }
  return "?";
}

Method method_from_name(const std::string& s) {
  for (Method m : {Method::aic, Method::bic, Method::cp, Method::loocv,
                   Method::mma, Method::jma, Method::jma2, Method::oracle_w})
    if (method_name(m) == s) return m;
  throw RunError("unknown method '" + s + "'");
}

std::string example_name(Example e) {
  switch (e) {
    case Example::ex1: return "ex1";
    case Example::ex2: return "ex2";
    case Example::ex3: return "ex3";
  }
  return "?";
}

Example example_from_name(const std::string& s) {
  for (Example e : {Example::ex1, Example::ex2, Example::ex3})
    if (example_name(e) == s) return e;
  throw RunError("unknown example '" + s + "'");
}

int p_rule(int n) {
  return static_cast<int>(std::floor(5.0 * std::pow(static_cast<double>(n), 2.0 / 3.0)));
}

int m_rule(int n) {
  return static_cast<int>(std::lround(3.0 * std::cbrt(static_cast<double>(n))));
}

std::vector<Method> DgpConfig::effective_methods() const {
  if (!methods.empty()) return methods;
  if (example == Example::ex2)
    return {Method::aic, Method::bic, Method::loocv, Method::jma2, Method::jma};
  return {Method::aic, Method::bic, Method::loocv, Method::mma};
}

Method DgpConfig::normalizer() const {
  return example == Example::ex2 ? Method::jma : Method::mma;
}

nlohmann::json DgpConfig::to_json() const {
  nlohmann::json j;
  j["example"] = example_name(example);
  j["n"] = n;
  j["r2"] = r2;
  j["decay"] = decay == Decay::algebraic ? "algebraic" : "exponential";
  j["alpha"] = alpha;
  j["replications"] = replications;
  j["seed"] = seed;
  j["rho1"] = rho1;
  j["rho2"] = rho2;
  j["fixed_design"] = fixed_design;
  j["include_oracle"] = include_oracle;
  if (m_override > 0) j["M"] = m_override;
  if (sigma2_override > 0.0) j["sigma2"] = sigma2_override;
  auto arr = nlohmann::json::array();
  for (Method m : effective_methods()) arr.push_back(method_name(m));
  j["methods"] = arr;
  return j;
}

DgpConfig DgpConfig::from_json(const nlohmann::json& j) {
  DgpConfig c;
  c.example = example_from_name(j.at("example").get<std::string>());
  c.n = j.at("n").get<int>();
  c.r2 = j.at("r2").get<double>();
  const std::string d = j.value("decay", std::string("algebraic"));
  if (d == "algebraic")
    c.decay = Decay::algebraic;
  else if (d == "exponential")
    c.decay = Decay::exponential;
  else
    throw RunError("unknown decay '" + d + "'");
  c.alpha = j.at("alpha").get<double>();
  c.replications = j.value("replications", 1000);
  c.seed = j.value("seed", std::uint64_t{1});
  c.rho1 = j.value("rho1", 0.5);
  c.rho2 = j.value("rho2", 0.5);
  c.fixed_design = j.value("fixed_design", false);
  c.include_oracle = j.value("include_oracle", false);
  c.m_override = j.value("M", 0);
  c.sigma2_override = j.value("sigma2", 0.0);
  if (j.contains("methods"))
    for (const auto& s : j.at("methods"))
      c.methods.push_back(method_from_name(s.get<std::string>()));
  return c;
}

namespace {

double decay_coef(Decay d, double alpha, int m) {
  return d == Decay::algebraic ? std::pow(static_cast<double>(m), -alpha)
                               : std::exp(-alpha * m);
}

// nu_m = 5 floor(m/2) + 2 for odd m, 5 floor(m/2) for even m, then p; the
// group sizes alternate 2, 3, 2, 3, ...
std::vector<int> ex1_boundaries(int p) {
  std::vector<int> nu;
  for (int m = 1;; ++m) {
    const int v = m % 2 == 1 ? 5 * (m / 2) + 2 : 5 * (m / 2);
    if (v >= p) break;
    nu.push_back(v);
  }
  nu.push_back(p);
  return nu;
}

double empirical_var(const Eigen::VectorXd& x) {
  const double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size());
}

int group_of(const std::vector<int>& nu, int j) {
  // 1-based group containing 1-based column j
  int m = 1;
  for (int b : nu) {
    if (j <= b) return m;
    ++m;
  }
  return m;
}

}  // namespace

Dgp make_dgp(const DgpConfig& cfg, RngStream& rng) {
  if (cfg.n < 8) throw RunError("n too small for the simulation rules");
  if (!(cfg.r2 > 0.0 && cfg.r2 < 1.0)) throw RunError("r2 must lie in (0,1)");
  const int n = cfg.n;
  const int p = p_rule(n);

  Dgp dgp;
  dgp.p = p;

  std::vector<int> nu_full;
  if (cfg.example == Example::ex1) {
    nu_full = ex1_boundaries(p);
  } else {
    nu_full.resize(p);
    for (int m = 1; m <= p; ++m) nu_full[m - 1] = m;
  }
  const int q = static_cast<int>(nu_full.size());
  dgp.q_full = q;

  int M = cfg.m_override > 0 ? cfg.m_override : m_rule(n);
  M = std::min(M, q);
  if (M < 2) throw RunError("candidate rule gives M < 2");
  dgp.M = M;
  const int cols_kept = nu_full[M - 1];

  // coefficients
  Eigen::VectorXd beta(p);
  if (cfg.example == Example::ex2) {
    const double c = std::sqrt(cfg.r2 / (1.0 - cfg.r2));
    for (int m = 1; m <= p; ++m) {
      const double zeta = m == 1 ? 2.0 / (1.0 - cfg.rho1) : (m == 2 ? 4.0 : 2.0);
      beta[m - 1] = c * std::sqrt(zeta) * decay_coef(cfg.decay, cfg.alpha, m);
    }
  } else if (cfg.example == Example::ex3) {
    // xi_m = decay(m)^2; beta recovered so that the projected importances
    // match the target sequence
    const double r2sq = std::sqrt(1.0 - cfg.rho2 * cfg.rho2);
    auto sqrt_xi = [&](int m) { return decay_coef(cfg.decay, cfg.alpha, m); };
    beta[0] = sqrt_xi(1) - cfg.rho2 * sqrt_xi(2) / r2sq;
    if (beta[0] < 0.0)
      throw NegativeBetaError(1, "xi recovery gives beta_1 < 0");
    for (int j = 2; j <= p; ++j) {
      beta[j - 1] = (sqrt_xi(j) - cfg.rho2 * sqrt_xi(j + 1)) / r2sq;
      if (beta[j - 1] < 0.0)
        throw NegativeBetaError(j, "xi recovery gives beta_" + std::to_string(j) + " < 0");
    }
  } else {
    for (int j = 1; j <= p; ++j)
      beta[j - 1] = decay_coef(cfg.decay, cfg.alpha, group_of(nu_full, j));
  }

  // row-wise draw: only the first cols_kept columns are stored, the rest
  // stream through the mu accumulation
  Eigen::MatrixXd Xkept(n, cols_kept);
  Eigen::VectorXd mu(n);
  Eigen::VectorXd x2(n);  // second predictor, ex2's heteroscedastic scale
  Eigen::VectorXd xrow(p);
  for (int i = 0; i < n; ++i) {
    if (cfg.example == Example::ex3) {
      xrow[0] = rng.gaussian();
      const double innov = std::sqrt(1.0 - cfg.rho2 * cfg.rho2);
      for (int j = 1; j < p; ++j)
        xrow[j] = cfg.rho2 * xrow[j - 1] + innov * rng.gaussian();
    } else {
      xrow[0] = 1.0;
      for (int j = 1; j < p; ++j) xrow[j] = rng.gaussian();
    }
    mu[i] = xrow.dot(beta);
    Xkept.row(i) = xrow.head(cols_kept);
    x2[i] = xrow[1];
  }

  std::vector<int> nu_kept(nu_full.begin(), nu_full.begin() + M);
  dgp.design = build_design(std::move(Xkept), nu_kept);
  dgp.mu = std::move(mu);
  dgp.beta = std::move(beta);

  if (cfg.example == Example::ex2) {
    std::vector<CovarianceSpec> terms;
    terms.push_back(CovarianceSpec::diagonal(x2.array().square().matrix()));
    terms.push_back(CovarianceSpec::ar1(cfg.rho1, 1.0));
    dgp.cov = CovarianceSpec::sum(std::move(terms));
    dgp.sigma2 = 0.0;
  } else {
    double s2 = cfg.sigma2_override;
    if (!(s2 > 0.0))
      s2 = empirical_var(dgp.mu) * (1.0 - cfg.r2) / cfg.r2;
    dgp.sigma2 = s2;
    dgp.cov = CovarianceSpec::scalar(s2);
  }
  return dgp;
}

namespace {

double pairwise_sum(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(x, lo, mid) + pairwise_sum(x, mid, hi);
}

double pairwise_sum(const std::vector<double>& x) {
  return x.empty() ? 0.0 : pairwise_sum(x, 0, x.size());
}

}  // namespace

SimResult run_study(const DgpConfig& cfg, std::vector<AuditRecord>* audit) {
  const std::vector<Method> methods = cfg.effective_methods();
  if (methods.empty()) throw RunError("no methods requested");
  const Method norm = cfg.normalizer();
  bool has_norm = false;
  for (Method m : methods)
    if (m == norm) has_norm = true;
  if (!has_norm)
    throw RunError("normalizer " + method_name(norm) + " missing from methods");
  const int R = cfg.replications;
  if (R < 1) throw RunError("need at least one replication");
  const int nm = static_cast<int>(methods.size());

  // fixed-design mode: one draw up front, fresh noise per replicate
  Dgp fixed;
  Eigen::VectorXd fixed_oracle_w;
  if (cfg.fixed_design) {
    RngStream rng0(cfg.seed, 0);
    fixed = make_dgp(cfg, rng0);
    if (cfg.include_oracle) {
      const RiskProfile prof =
          build_profile(fixed.design, fixed.cov, fixed.mu, fixed.M);
      fixed_oracle_w = oracle_simplex(prof).w.w;
    }
  }

  Eigen::MatrixXd losses(R, nm);
  losses.setConstant(std::numeric_limits<double>::quiet_NaN());
  if (audit) audit->assign(static_cast<std::size_t>(R) * nm, AuditRecord{});
  std::mutex abort_mutex;
  std::vector<std::string> abort_reasons;
  std::atomic<int> next{0};
  std::atomic<int> aborted{0};

  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= R) return;
      try {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(r) + 1);
        const Dgp* dgp = &fixed;
        Dgp local;
        if (!cfg.fixed_design) {
          local = make_dgp(cfg, rng);
          dgp = &local;
        }
        const Eigen::VectorXd eps = dgp->cov.sample(dgp->design.n(), rng);
        const Eigen::VectorXd y = dgp->mu + eps;
        const FitCache fc = fit_nested(y, dgp->design, dgp->M);

        Eigen::VectorXd oracle_w = fixed_oracle_w;
        if (cfg.include_oracle && !cfg.fixed_design) {
          const RiskProfile prof =
              build_profile(dgp->design, dgp->cov, dgp->mu, dgp->M);
          oracle_w = oracle_simplex(prof).w.w;
        }

        for (int k = 0; k < nm; ++k) {
          const Method meth = methods[k];
          Eigen::VectorXd muhat;
          AuditRecord rec;
          rec.replicate = r;
          rec.method = meth;
          switch (meth) {
            case Method::aic:
            case Method::bic:
            case Method::cp:
            case Method::loocv: {
              Criterion crit = meth == Method::aic   ? Criterion::aic
                               : meth == Method::bic ? Criterion::bic
                               : meth == Method::cp  ? Criterion::cp
                                                     : Criterion::loocv;
              const Selection sel = select(fc, crit);
              muhat = y - fc.resid.col(sel.chosen - 1);
              rec.chosen = sel.chosen;
              break;
            }
            case Method::mma: {
              const MaFit fit = fit_mma(fc);
              muhat = averaged_fit(dgp->design, y, fit.w.w);
              rec.w = fit.w.w;
              break;
            }
            case Method::jma: {
              const MaFit fit = fit_jma(fc, WeightSet::simplex);
              muhat = averaged_fit(dgp->design, y, fit.w.w);
              rec.w = fit.w.w;
              break;
            }
            case Method::jma2: {
              const MaFit fit = fit_jma(fc, WeightSet::box);
              muhat = averaged_fit(dgp->design, y, fit.w.w);
              rec.w = fit.w.w;
              break;
            }
            case Method::oracle_w: {
              if (oracle_w.size() == 0)
                throw RunError("oracle_w needs include_oracle");
              muhat = averaged_fit(dgp->design, y, oracle_w);
              rec.w = oracle_w;
              break;
            }
          }
          losses(r, k) = (muhat - dgp->mu).squaredNorm();
          if (audit) (*audit)[static_cast<std::size_t>(r) * nm + k] = std::move(rec);
        }
      } catch (const std::exception& e) {
        aborted.fetch_add(1);
        std::lock_guard<std::mutex> lock(abort_mutex);
        if (abort_reasons.size() < 32)
          abort_reasons.push_back("replicate " + std::to_string(r) + ": " + e.what());
        for (int k = 0; k < nm; ++k)
          losses(r, k) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SimResult res;
  res.normalizer = norm;
  res.aborted = aborted.load();
  res.abort_reasons = std::move(abort_reasons);
  res.replications = R - res.aborted;
  if (res.aborted * 100 > R)
    throw RunError("more than 1% of replicates aborted (" +
                   std::to_string(res.aborted) + "/" + std::to_string(R) + ")");
  if (res.replications < 1) throw RunError("no completed replicates");

  std::vector<double> col;
  col.reserve(res.replications);
  std::vector<double> means(nm);
  res.rows.resize(nm);
  for (int k = 0; k < nm; ++k) {
    col.clear();
    for (int r = 0; r < R; ++r)
      if (std::isfinite(losses(r, k))) col.push_back(losses(r, k));
    const double mean = pairwise_sum(col) / static_cast<double>(col.size());
    std::vector<double> dev2(col.size());
    for (std::size_t i = 0; i < col.size(); ++i)
      dev2[i] = (col[i] - mean) * (col[i] - mean);
    const double var =
        col.size() > 1 ? pairwise_sum(dev2) / static_cast<double>(col.size() - 1) : 0.0;
    means[k] = mean;
    res.rows[k].method = methods[k];
    res.rows[k].mean_loss = mean;
    res.rows[k].se = std::sqrt(var / static_cast<double>(col.size()));
  }
  double norm_mean = 1.0;
  for (int k = 0; k < nm; ++k)
    if (methods[k] == norm) norm_mean = means[k];
  for (int k = 0; k < nm; ++k) res.rows[k].normalized = means[k] / norm_mean;
  return res;
}

std::string sim_csv(const SimResult& res, const DgpConfig& cfg, bool header) {
  std::string s;
  if (header) s += "method,n,r2,decay_param,mean_loss,se,normalized\n";
  for (const auto& row : res.rows) {
    s += method_name(row.method);
    s += "," + std::to_string(cfg.n);
    s += "," + fmt17(cfg.r2);
    s += "," + fmt17(cfg.alpha);
    s += "," + fmt17(row.mean_loss);
    s += "," + fmt17(row.se);
    s += "," + fmt17(row.normalized);
    s += "\n";
  }
  return s;
}

std::vector<DiagRow> oracle_diagnostics(const DiagConfig& cfg,
                                        const std::vector<int>& n_grid) {
  std::vector<DiagRow> rows;
  rows.reserve(n_grid.size());
  for (int n : n_grid) {
    const int q = p_rule(n);
    Eigen::VectorXd bias(q), var(q);
    for (int m = 1; m <= q; ++m) {
      const double b = decay_coef(cfg.decay, cfg.alpha, m);
      bias[m - 1] = static_cast<double>(n) * b * b;
      var[m - 1] = cfg.sigma2;
    }
    int M = cfg.m_fixed ? cfg.m_fixed_value : m_rule(n);
    M = std::min(std::max(M, 2), q);
    const RiskProfile p = make_profile(n, M, std::move(bias), std::move(var));
    const MsRisk ms = risk_ms(p);
    const OracleResult sx = oracle_simplex(p);
    DiagRow row;
    row.n = n;
    row.q = q;
    row.M = M;
    row.m_star = ms.m_star;
    row.m_star_star = ms.m_star_star;
    row.risk_ms = ms.risks[ms.m_star - 1];
    row.risk_simplex = sx.risk;
    row.delta = row.risk_ms - sx.risk;
    row.ratio = row.risk_ms > 0.0 ? row.delta / row.risk_ms : 0.0;
    row.m_below = M < ms.m_star_star;
    rows.push_back(row);
  }
  return rows;
}

std::string diag_csv(const std::vector<DiagRow>& rows, bool header) {
  std::string s;
  if (header)
    s += "n,q,M,m_star,m_star_star,risk_ms,risk_simplex,delta,delta_ratio,M_below_mss\n";
  for (const auto& r : rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.q) + "," + std::to_string(r.M);
    s += "," + std::to_string(r.m_star) + "," + std::to_string(r.m_star_star);
    s += "," + fmt17(r.risk_ms) + "," + fmt17(r.risk_simplex);
    s += "," + fmt17(r.delta) + "," + fmt17(r.ratio);
    s += "," + std::string(r.m_below ? "1" : "0") + "\n";
  }
  return s;
}

}  // namespace nestavg
