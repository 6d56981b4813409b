#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nestavg/asymptotics.hpp"
#include "nestavg/battery.hpp"
#include "nestavg/csv.hpp"
#include "nestavg/oracle_risk.hpp"
#include "nestavg/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

int default_jobs() {
  if (const char* env = std::getenv("NESTAVG_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

struct Manifest {
  std::string command;
  std::uint64_t digest = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  double wall_ms = 0.0;

  json to_json() const {
    json j;
    j["command"] = command;
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(digest));
    j["config_digest"] = hex;
    j["seed"] = seed;
    j["version"] = kVersion;
    j["outputs"] = outputs;
    j["wall_ms"] = wall_ms;
    return j;
  }
};

void write_output(const std::string& path, const std::string& content, bool force,
                  Manifest& man) {
  if (!force && nestavg::file_exists(path))
    throw nestavg::RunError("refusing to overwrite '" + path + "' without --force");
  nestavg::save_text(path, content);
  man.outputs.push_back(path);
}

std::vector<double> number_list(const json& j, const char* key) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  if (j.at(key).is_array())
    for (const auto& v : j.at(key)) out.push_back(v.get<double>());
  else
    out.push_back(j.at(key).get<double>());
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(s.substr(0, dots));
    const int hi = std::stoi(s.substr(dots + 2));
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(std::stoi(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

std::vector<nestavg::Kappa> parse_kappa_list(const std::string& s) {
  std::vector<nestavg::Kappa> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string tok = s.substr(pos, comma - pos);
    if (tok == "inf" || tok == "Inf" || tok == "INF")
      out.push_back(nestavg::Kappa::infinite());
    else
      out.push_back(nestavg::Kappa::finite(std::stod(tok)));
    pos = comma + 1;
  }
  return out;
}

int run_sim(const std::string& config_path, const std::string& out_dir,
            std::uint64_t seed_override, bool has_seed, int jobs, bool audit,
            bool fixed_design, bool force) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!nestavg::file_exists(config_path)) {
    std::cerr << "config file not found: " << config_path << "\n";
    return 2;
  }
  json cfg_json = json::parse(nestavg::read_text(config_path));
  if (has_seed) cfg_json["seed"] = seed_override;
  if (fixed_design) cfg_json["fixed_design"] = true;

  std::vector<double> ns = number_list(cfg_json, "n");
  std::vector<double> r2s = number_list(cfg_json, "r2");
  std::vector<double> alphas = number_list(cfg_json, "alpha");
  if (ns.empty() || r2s.empty() || alphas.empty()) {
    std::cerr << "config needs n, r2 and alpha\n";
    return 2;
  }

  fs::create_directories(out_dir);
  Manifest man;
  man.command = "sim";
  man.digest = nestavg::fnv1a64(cfg_json.dump());
  man.seed = cfg_json.value("seed", std::uint64_t{1});

  std::string table;
  std::string audit_table;
  bool first = true;
  std::uint64_t cell = 0;
  for (double a : alphas)
    for (double r2 : r2s)
      for (double n : ns) {
        json cell_json = cfg_json;
        cell_json["n"] = static_cast<int>(n);
        cell_json["r2"] = r2;
        cell_json["alpha"] = a;
        nestavg::DgpConfig cfg = nestavg::DgpConfig::from_json(cell_json);
        std::uint64_t mix = man.seed;
        cfg.seed = nestavg::splitmix64(mix) ^ cell;
        ++cell;
        cfg.jobs = jobs;
        std::vector<nestavg::AuditRecord> records;
        const nestavg::SimResult res =
            nestavg::run_study(cfg, audit ? &records : nullptr);
        table += nestavg::sim_csv(res, cfg, first);
        if (audit) {
          if (first) audit_table += "replicate,n,r2,alpha,method,chosen,weights\n";
          for (const auto& rec : records) {
            audit_table += std::to_string(rec.replicate) + "," +
                           std::to_string(cfg.n) + "," + nestavg::fmt17(cfg.r2) +
                           "," + nestavg::fmt17(cfg.alpha) + "," +
                           nestavg::method_name(rec.method) + "," +
                           std::to_string(rec.chosen) + ",";
            for (int i = 0; i < rec.w.size(); ++i) {
              if (i) audit_table += ";";
              audit_table += nestavg::fmt17(rec.w[i]);
            }
            audit_table += "\n";
          }
        }
        first = false;
        for (const auto& reason : res.abort_reasons)
          std::cerr << "warning: " << reason << "\n";
      }

  const std::string example = cfg_json.value("example", std::string("ex1"));
  const std::string decay = cfg_json.value("decay", std::string("algebraic"));
  write_output(out_dir + "/sim_" + example + "_" + decay + ".csv", table, force, man);
  if (audit)
    write_output(out_dir + "/audit_" + example + "_" + decay + ".csv", audit_table,
                 force, man);
  man.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  nestavg::save_text(out_dir + "/manifest.json", man.to_json().dump(2) + "\n");
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact risk laboratory for model selection vs model averaging "
               "over nested linear models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int jobs = default_jobs();
  bool audit = false, fixed_design = false, force = false;

  auto* sim = app.add_subcommand("sim", "run a Monte Carlo study from a JSON config");
  sim->add_option("--config", config_path, "JSON run configuration")->required();
  sim->add_option("--out", out_dir, "output directory");
  auto* sim_seed = sim->add_option("--seed", seed, "master seed override");
  sim->add_option("--jobs", jobs, "worker count");
  sim->add_flag("--audit", audit, "export per-replicate choices");
  sim->add_flag("--fixed-design", fixed_design, "draw the design once");
  sim->add_flag("--force", force, "overwrite existing outputs");

  auto* oracle = app.add_subcommand("oracle", "exact oracle risks and diagnostics");
  std::string decay_name = "algebraic";
  double alpha = 1.5, sigma2 = 1.0;
  std::string ngrid = "500,2000,8000,32000";
  int m_fixed = 0;
  std::string design_path, nu_list, cov_json_path, beta_path;
  int M_opt = 0;
  oracle->add_option("--decay", decay_name, "algebraic|exponential");
  oracle->add_option("--alpha", alpha, "decay rate (alpha or c)");
  oracle->add_option("--sigma2", sigma2, "noise variance");
  oracle->add_option("--ngrid", ngrid, "comma list or lo..hi");
  oracle->add_option("--m-fixed", m_fixed, "fixed candidate count (0: 3 n^{1/3})");
  oracle->add_option("--design", design_path, "design matrix CSV (profile mode)");
  oracle->add_option("--nu", nu_list, "group boundaries, e.g. 2,5,6");
  oracle->add_option("--cov", cov_json_path, "covariance config JSON");
  oracle->add_option("--beta", beta_path, "coefficient CSV (one column)");
  oracle->add_option("--M", M_opt, "candidate count for profile mode");
  oracle->add_option("--out", out_dir, "output directory");
  oracle->add_flag("--force", force, "overwrite existing outputs");
  auto* oracle_seed = oracle->add_option("--seed", seed, "seed (manifest only)");

  auto* asym = app.add_subcommand("asym", "limiting risk-ratio curves");
  double a_alpha = 0.8;
  std::string kappas = "0.5,1,2";
  std::string Ns = "1..10";
  asym->add_option("--alpha", a_alpha, "algebraic decay rate, > 1/2");
  asym->add_option("--kappa", kappas, "comma list, inf allowed");
  asym->add_option("--N", Ns, "grid resolutions, list or lo..hi");
  asym->add_option("--out", out_dir, "output directory");
  asym->add_flag("--force", force, "overwrite existing outputs");

  auto* verify = app.add_subcommand("verify", "seeded theorem-inequality battery");
  int instances = 60;
  verify->add_option("--seed", seed, "battery seed");
  verify->add_option("--instances", instances, "instance count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_sim(config_path, out_dir, seed, !sim_seed->empty(), jobs, audit,
                     fixed_design, force);

    if (oracle->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      fs::create_directories(out_dir);
      Manifest man;
      man.command = "oracle";
      man.seed = seed;
      (void)oracle_seed;
      if (!design_path.empty()) {
        // profile mode: explicit design, covariance and coefficients
        if (nu_list.empty() || cov_json_path.empty() || beta_path.empty()) {
          std::cerr << "profile mode needs --nu, --cov and --beta\n";
          return 2;
        }
        const Eigen::MatrixXd X = nestavg::load_matrix_csv(design_path);
        const std::vector<int> nu = parse_int_list(nu_list);
        const auto design = nestavg::build_design(X, nu);
        const auto cov = nestavg::CovarianceSpec::from_config(
            json::parse(nestavg::read_text(cov_json_path)));
        const Eigen::MatrixXd bmat = nestavg::load_matrix_csv(beta_path);
        const auto mm = nestavg::make_mean_model(design, bmat.col(0));
        const int M = M_opt > 0 ? M_opt : design.q();
        const auto profile = nestavg::build_profile(design, cov, mm.mu, M);
        man.digest = nestavg::fnv1a64(design_path + nu_list + cov_json_path);
        write_output(out_dir + "/profile.csv", nestavg::profile_csv(profile), force,
                     man);
      } else {
        nestavg::DiagConfig dc;
        dc.decay = decay_name == "exponential" ? nestavg::Decay::exponential
                                               : nestavg::Decay::algebraic;
        dc.alpha = alpha;
        dc.sigma2 = sigma2;
        dc.m_fixed = m_fixed > 0;
        dc.m_fixed_value = m_fixed;
        const auto rows = nestavg::oracle_diagnostics(dc, parse_int_list(ngrid));
        man.digest = nestavg::fnv1a64(decay_name + "/" + nestavg::fmt17(alpha) +
                                      "/" + nestavg::fmt17(sigma2) + "/" + ngrid);
        write_output(out_dir + "/oracle_diag.csv", nestavg::diag_csv(rows), force,
                     man);
      }
      man.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      nestavg::save_text(out_dir + "/manifest.json", man.to_json().dump(2) + "\n");
      return 0;
    }

    if (asym->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      fs::create_directories(out_dir);
      std::string table = "kappa,N,psi_star,limit_ratio\n";
      for (const auto& k : parse_kappa_list(kappas))
        for (int N : parse_int_list(Ns)) {
          nestavg::DecayModel model;
          model.kind = nestavg::Decay::algebraic;
          model.rate = a_alpha;
          model.kappa = k;
          model.N = N;
          table += (k.is_inf ? std::string("inf") : nestavg::fmt17(k.value)) + "," +
                   std::to_string(N) + "," +
                   nestavg::fmt17(nestavg::psi_star(N, a_alpha, k)) + "," +
                   nestavg::fmt17(nestavg::limit_ratio(model)) + "\n";
        }
      Manifest man;
      man.command = "asym";
      man.seed = seed;
      man.digest = nestavg::fnv1a64(nestavg::fmt17(a_alpha) + "/" + kappas + "/" + Ns);
      write_output(out_dir + "/asym_ratio.csv", table, force, man);
      man.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      nestavg::save_text(out_dir + "/manifest.json", man.to_json().dump(2) + "\n");
      std::cout << table;
      return 0;
    }

    if (verify->parsed()) {
      const auto reports = nestavg::battery::run_battery(seed, instances);
      bool all = true;
      for (const auto& r : reports) {
        std::printf("[%s] %-55s worst=%.3g%s%s\n", r.pass ? "ok" : "FAIL",
                    r.name.c_str(), r.worst,
                    r.violations ? (" violations=" + std::to_string(r.violations)).c_str()
                                 : "",
                    r.note.empty() ? "" : (" " + r.note).c_str());
        all = all && r.pass;
      }
      std::printf("%s (%d instances, seed %llu)\n", all ? "PASS" : "FAIL", instances,
                  static_cast<unsigned long long>(seed));
      return all ? 0 : 3;
    }
  } catch (const nestavg::RunError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
