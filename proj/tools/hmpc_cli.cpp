#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "hmpc/error.hpp"
#include "hmpc/thermal.hpp"
#include "hmpc/trace.hpp"

using namespace hmpc;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Common {
  std::string building = std::string(HMPC_CONFIG_DIR) + "/two_apartments.json";
  std::string run = std::string(HMPC_CONFIG_DIR) + "/benchmark_run.json";
  bool decoupled = false;
  std::string out;
};

struct Loaded {
  BuildingConfig building;
  RunConfig run;
  InterconnectedModel model;
  Json config;
};

Loaded load(const Common& c) {
  Loaded l;
  l.building = load_building_config(c.building);
  if (c.decoupled) l.building = decoupled(l.building);
  l.run = load_run_config(c.run);
  l.model = build_thermal_model(l.building);
  l.config = {{"building", building_to_json(l.building)}, {"run", run_to_json(l.run)}};
  return l;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

void print_checks(const ValidationReport& rep) {
  std::cout << std::left << std::setw(28) << "check" << std::setw(16) << "value" << std::setw(16) << "threshold"
            << "result\n";
  for (const auto& c : rep.checks) {
    std::cout << std::left << std::setw(28) << c.name << std::setw(16) << fmt(c.value) << std::setw(16)
              << fmt(c.threshold) << (c.pass ? "PASS" : "FAIL");
    if (!c.note.empty()) std::cout << "  (" << c.note << ")";
    std::cout << '\n';
  }
}

void print_row(const std::string& name, double value) {
  std::cout << std::left << std::setw(28) << name << fmt(value) << '\n';
}

void print_vector(const std::string& name, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) print_row(name + "_" + std::to_string(i + 1), v(i));
}

void print_certificate(const CertificateReport& c) {
  std::cout << std::left << std::setw(28) << "constant" << "value\n";
  print_row("N_L", c.N_L);
  print_row("kappa", c.kappa);
  print_row("kappa_bound", c.kappa_bound);
  print_row("||A(N_L)||", c.A_norm);
  print_row("||R(N_L)||", c.R_norm);
  print_row("||A_L^N_L||", c.AL_N_norm);
  print_vector("sigma_min", c.sigma_min);
  print_vector("lambda", c.lambda);
  print_vector("chi", c.chi);
  print_row("rho_u", c.rho_u);
  print_row("rho_u_bar", c.rho_u_bar);
  print_vector("rho_delta_u_hat", c.rho_delta_u_hat);
  print_vector("rho_u_bar", c.rho_u_bar_i);
  print_vector("rho_delta_u_bar", c.rho_delta_u_bar);
  print_row("rho_w", c.rho_w);
  print_row("kappa_du", c.kappa_du);
  print_row("rho_x", c.rho_x);
  print_row("envelope", c.envelope);
  print_row("||x(0)||", c.x0_norm);
  std::cout << '\n';
  print_checks(c.conditions);
}

std::vector<int> parse_horizons(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size() || v < 1) throw CLI::ValidationError("--sweep-NL", "expected positive integers");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--sweep-NL", "empty list");
  return out;
}

int cmd_design(const Common& c) {
  const auto l = load(c);
  const auto d = try_design(l.model, l.run);
  std::cout << "design checklist\n" << format_checklist(d.checklist);
  const auto dir = output_dir(c.out);
  std::filesystem::create_directories(dir);
  save_json(dir / "design.json", design_to_json(d));
  save_json(dir / "model.json", model_to_json(l.model));
  if (d.checklist.size() > 5) save_json(dir / "certificate.json", certificate_to_json(d.certificate));
  std::cout << "wrote " << dir.string() << '\n';
  if (!d.complete()) {
    std::cerr << "design incomplete: " << d.checklist.back().name << '\n';
    return kFail;
  }
  return kOk;
}

int cmd_analyze(const Common& c, const std::string& sweep) {
  const auto l = load(c);
  const auto d = try_design(l.model, l.run);
  bool reached = false;
  for (const auto& it : d.checklist) reached = reached || it.name == "certificate";
  if (!reached) {
    std::cerr << "analysis needs gains and radii\n" << format_checklist(d.checklist);
    return kFail;
  }
  print_certificate(d.certificate);
  bool ok = d.certificate.pass();
  if (!sweep.empty()) {
    const auto horizons = parse_horizons(sweep);
    const auto rows = sweep_horizon(l.model, d.reduced, d.radii.rho_delta_u_hat, d.radii.rho_u_bar, horizons);
    std::cout << "\nhorizon sweep at fixed radii\n";
    std::cout << std::left << std::setw(6) << "N_L" << std::setw(14) << "||A_L^N||" << std::setw(14) << "kappa"
              << std::setw(14) << "kappa_bound";
    for (Eigen::Index i = 0; i < l.model.count(); ++i) {
      std::cout << std::setw(14) << ("lambda_" + std::to_string(i + 1)) << std::setw(14)
                << ("chi_" + std::to_string(i + 1));
    }
    std::cout << '\n';
    for (const auto& r : rows) {
      std::cout << std::left << std::setw(6) << r.N_L << std::setw(14) << fmt(r.AL_N_norm) << std::setw(14)
                << fmt(r.kappa) << std::setw(14) << fmt(r.kappa_bound);
      for (Eigen::Index i = 0; i < r.lambda.size(); ++i) {
        std::cout << std::setw(14) << fmt(r.lambda(i)) << std::setw(14) << fmt(r.chi(i));
      }
      std::cout << '\n';
    }
    const auto mono = sweep_monotonicity(rows);
    std::cout << '\n';
    print_checks(mono);
    ok = ok && mono.pass();
  }
  if (!c.out.empty() || std::getenv("HMPC_OUT_DIR")) {
    const auto dir = output_dir(c.out);
    std::filesystem::create_directories(dir);
    save_json(dir / "certificate.json", certificate_to_json(d.certificate));
  }
  return ok ? kOk : kFail;
}

int cmd_tune(const Common& c, double gamma1, double gamma2, bool certified) {
  const auto l = load(c);
  RunConfig run = l.run;
  run.gamma1 = gamma1;
  run.gamma2 = gamma2;
  run.certified = certified;
  run.rho_delta_u_hat.reset();
  run.rho_u_bar.reset();
  const auto d = try_design(l.model, run);
  bool tuned = false;
  for (const auto& it : d.checklist) tuned = tuned || (it.name == "radii" && it.done);
  if (!tuned) {
    std::cerr << "tuning failed\n" << format_checklist(d.checklist);
    return kFail;
  }
  const auto sc = structural_constants(l.model, d.reduced, d.ll_gain, run.N_L);
  std::cout << std::left << std::setw(12) << "subsystem" << std::setw(18) << "rho_delta_u_hat" << std::setw(18)
            << "rho_u_bar" << std::setw(18) << "rho_u" << "\n";
  for (int i = 0; i < l.model.count(); ++i) {
    std::cout << std::left << std::setw(12) << i + 1 << std::setw(18) << fmt(d.radii.rho_delta_u_hat(i))
              << std::setw(18) << fmt(d.radii.rho_u_bar(i)) << std::setw(18) << fmt(sc.rho_u(i)) << '\n';
  }
  std::cout << "objective " << fmt(d.radii.objective) << (certified ? " (certified rows)" : "") << "\n\n";
  const auto rep = verify_allocation(sc, d.radii.rho_delta_u_hat, d.radii.rho_u_bar, 1e-9);
  print_checks(rep);
  if (!c.out.empty() || std::getenv("HMPC_OUT_DIR")) {
    const auto dir = output_dir(c.out);
    std::filesystem::create_directories(dir);
    save_json(dir / "radii.json", allocation_to_json(d.radii));
  }
  return rep.pass() ? kOk : kFail;
}

int cmd_simulate(const Common& c, int steps, bool soak) {
  const auto l = load(c);
  const auto start = std::chrono::steady_clock::now();
  const auto d = run_design(l.model, l.run);
  const int horizon = steps > 0 ? steps : l.run.horizon;
  const auto trace = run_closed_loop(d, l.run.initial_state(l.model.n()), horizon);
  const auto dir = output_dir(c.out);
  std::vector<SoakRecord> soak_records;
  if (soak) {
    soak_records = run_hl_soak(d, d.reduced.beta * l.run.initial_state(l.model.n()), l.run.soak_steps, l.run.seed);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_trace(dir, trace, d, l.config, secs);
  if (soak) write_soak(dir, soak_records);
  double w_max = 0.0;
  for (const auto& s : trace.slow) w_max = std::max(w_max, s.w_norm);
  std::cout << "slow steps " << horizon << ", fast steps " << trace.fast.size() << '\n';
  std::cout << "||x(0)|| " << fmt(l.run.initial_state(l.model.n()).norm()) << ", ||x(end)|| "
            << fmt(trace.x_final.norm()) << '\n';
  std::cout << "max ||w_bar|| " << fmt(w_max) << " (rho_w " << fmt(d.certificate.rho_w) << ")\n";
  if (soak) std::cout << "slow-layer soak: " << soak_records.size() << " steps without infeasibility\n";
  std::cout << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_verify(const std::string& dir) {
  const auto rep = verify_trace(dir);
  print_checks(rep);
  return rep.pass() ? kOk : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical two-rate MPC for interconnected linear systems"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool model_opts) {
    if (model_opts) {
      sub->add_option("--building", common.building, "building description (JSON)")->check(CLI::ExistingFile);
      sub->add_option("--run", common.run, "controller settings (JSON)")->check(CLI::ExistingFile);
      sub->add_flag("--decoupled", common.decoupled, "insulate the walls between apartments");
    }
    sub->add_option("--out", common.out, "output directory (default $HMPC_OUT_DIR or ./hmpc_out)");
  };

  auto* design = app.add_subcommand("design", "run the off-line design checklist");
  add_common(design, true);

  auto* analyze = app.add_subcommand("analyze", "print the feasibility and convergence constants");
  add_common(analyze, true);
  std::string sweep;
  analyze->add_option("--sweep-NL", sweep, "comma-separated fast horizons, e.g. 5,10,20,40");

  auto* tune = app.add_subcommand("tune", "solve the radius allocation LP");
  add_common(tune, true);
  double gamma1 = 1.0, gamma2 = 1.0;
  bool certified = false;
  tune->add_option("--gamma1", gamma1, "weight on the correction radii")->check(CLI::PositiveNumber);
  tune->add_option("--gamma2", gamma2, "weight on the slow input radii")->check(CLI::PositiveNumber);
  tune->add_flag("--certified", certified, "add the start, chi and tube rows");

  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write traces");
  add_common(simulate, true);
  int steps = 0;
  bool soak = false;
  simulate->add_option("--steps", steps, "slow steps (default: horizon of the run config)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_flag("--hl-soak", soak, "also run the slow layer against sampled worst-case disturbances");

  auto* verify = app.add_subcommand("verify", "re-check an existing trace archive");
  std::string verify_dir;
  verify->add_option("dir", verify_dir, "trace directory (default $HMPC_OUT_DIR or ./hmpc_out)");
  verify->add_option("--out", common.out, "same as dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*design) return cmd_design(common);
    if (*analyze) return cmd_analyze(common, sweep);
    if (*tune) return cmd_tune(common, gamma1, gamma2, certified);
    if (*simulate) return cmd_simulate(common, steps, soak);
    if (*verify) return cmd_verify(verify_dir.empty() ? output_dir(common.out).string() : verify_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    const bool usage = e.kind() == ErrorKind::ConfigInvalid || e.kind() == ErrorKind::FormatError;
    return usage ? kUsage : kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}
