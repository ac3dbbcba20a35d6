#include "hmpc/design.hpp"

#include <functional>
#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::ConfigInvalid, "run config: " + what); }

Vector kh_row_norms(const Matrix& k_h, const std::vector<IndexRange>& input_blocks) {
  Vector out(static_cast<Eigen::Index>(input_blocks.size()));
  for (std::size_t i = 0; i < input_blocks.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = norm2(k_h.middleRows(input_blocks[i].offset, input_blocks[i].size));
  }
  return out;
}

RadiusAllocation explicit_allocation(const StructuralConstants& sc, const Vector& rdh, const Vector& rub) {
  const int M = static_cast<int>(sc.sigma_min.size());
  if (rdh.size() != M || rub.size() != M) invalid("explicit radii need one entry per subsystem");
  RadiusAllocation a;
  a.rho_delta_u_hat = rdh;
  a.rho_u_bar = rub;
  a.lambda_matrix = sc.lambda_matrix;
  a.objective = rdh.sum() + rub.sum();
  const double root_n = std::sqrt(static_cast<double>(sc.N_L));
  a.kappa_slack = (root_n * sc.sigma_min.array() * rdh.array() - sc.kappa * rub.sum()).matrix();
  a.budget_slack = sc.rho_u - (sc.lambda_matrix + Matrix::Identity(M, M)) * rdh - rub;
  return a;
}

}  // namespace

void RunConfig::validate() const {
  if (N_L < 1) invalid("N_L must be at least 1");
  if (N_H < 1) invalid("N_H must be at least 1");
  if (!(q_h > 0.0) || !(r_h > 0.0) || !(q_ll > 0.0) || !(r_ll > 0.0)) invalid("weights must be positive");
  if (horizon < 1) invalid("horizon must be at least one slow step");
  if (soak_steps < 1) invalid("soak_steps must be positive");
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) invalid("gamma1 and gamma2 must be positive");
  if (!(qp.tol_primal > 0.0) || !(qp.tol_dual > 0.0) || qp.max_iters < 1) invalid("solver tolerances");
  for (int o : orders)
    if (o < 1) invalid("reduced orders must be positive");
  if (rho_delta_u_hat.has_value() != rho_u_bar.has_value()) invalid("give both radius vectors or neither");
  if (rho_delta_u_hat) {
    if ((rho_delta_u_hat->array() < 0.0).any() || (rho_u_bar->array() < 0.0).any()) {
      invalid("radii must be nonnegative");
    }
  }
}

Vector RunConfig::initial_state(int n) const {
  if (x0) {
    if (x0->size() != n) invalid("x0 has " + std::to_string(x0->size()) + " entries, model has " + std::to_string(n));
    return *x0;
  }
  return Vector::Constant(n, x0_value);
}

bool DesignArtifacts::complete() const {
  if (checklist.empty()) return false;
  for (const auto& it : checklist)
    if (!it.done) return false;
  return true;
}

std::string format_checklist(const std::vector<ChecklistItem>& items) {
  std::ostringstream out;
  for (const auto& it : items) {
    out << (it.done ? "  [done] " : "  [FAIL] ") << it.name;
    if (!it.detail.empty()) out << ": " << it.detail;
    out << '\n';
  }
  return out.str();
}

DesignArtifacts try_design(const InterconnectedModel& model, const RunConfig& run) {
  run.validate();
  DesignArtifacts d;
  d.model = model;
  d.run = run;
  const int M = model.count();

  // Runs one checklist item; returns false (and stops the design) on failure.
  auto step = [&](const std::string& name, const std::function<std::string()>& body) {
    ChecklistItem item{name, false, {}};
    try {
      item.detail = body();
      item.done = true;
    } catch (const Error& e) {
      item.detail = e.what();
    }
    d.checklist.push_back(item);
    return item.done;
  };

  const Vector x0 = run.initial_state(model.n());
  Matrix q_h, r_h;

  if (!step("model", [&] {
        d.structure = validate_structure(model);
        if (!d.structure.pass()) throw Error(ErrorKind::NotSchur, "A_L is not Schur or a subsystem is not reachable");
        return std::string("A_L Schur, subsystems reachable");
      }))
    return d;

  if (!step("reduction", [&] {
        std::vector<int> orders = run.orders;
        if (orders.empty()) orders.assign(M, 1);
        if (static_cast<int>(orders.size()) != M) invalid("orders needs one entry per subsystem");
        d.reduced = reduce(model, orders);
        const auto rep = verify_reduction(d.reduced, model);
        for (const auto& c : rep.checks) d.structure.checks.push_back(c);
        if (!rep.pass()) throw Error(ErrorKind::DesignFailed, "reduced model fails the structural checks");
        return "nbar = " + std::to_string(d.reduced.n());
      }))
    return d;

  q_h = run.q_h * Matrix::Identity(d.reduced.n(), d.reduced.n());
  r_h = run.r_h * Matrix::Identity(model.m(), model.m());

  if (!step("hl_gain", [&] {
        d.slow = lift(d.reduced, run.N_L);
        d.hl_gain = design_gain(d.slow, model, d.reduced, q_h, r_h);
        std::ostringstream s;
        s << "rho(F_H) = " << d.hl_gain.rho_F_H << ", rho(F_L^[N]) = " << d.hl_gain.rho_F_L_NL;
        return s.str();
      }))
    return d;

  if (!step("ll_gain", [&] {
        d.ll_weights.clear();
        for (const auto& s : model.subsystems) {
          d.ll_weights.push_back({run.q_ll * Matrix::Identity(s.n(), s.n()), run.r_ll * Matrix::Identity(s.m(), s.m())});
        }
        d.ll_gain = design_ll_gain(model, d.ll_weights);
        std::ostringstream s;
        s << "rho(F_L) = " << d.ll_gain.rho_F_L;
        return s.str();
      }))
    return d;

  if (!step("radii", [&] {
        d.rpi_factor = rpi_outer(d.hl_gain.F_H, BallSet(d.reduced.n(), 1.0)).outer_radius;
        if (run.rho_delta_u_hat) {
          const auto sc = structural_constants(model, d.reduced, d.ll_gain, run.N_L);
          d.radii = explicit_allocation(sc, *run.rho_delta_u_hat, *run.rho_u_bar);
          return std::string("explicit radii");
        }
        TuningOptions opt;
        opt.gamma1 = run.gamma1;
        opt.gamma2 = run.gamma2;
        if (run.certified) {
          opt.certify = Certification{x0.norm(), kh_row_norms(d.hl_gain.K_H, model.input_blocks), d.rpi_factor};
        }
        d.radii = tune_radii(model, d.reduced, d.ll_gain, run.N_L, opt);
        return std::string(run.certified ? "certified LP" : "LP");
      }))
    return d;

  if (!step("certificate", [&] {
        d.certificate = certificate_constants(model, d.reduced, d.hl_gain, d.ll_gain, d.radii.rho_delta_u_hat,
                                           d.radii.rho_u_bar, run.N_L, x0.norm());
        if (!d.certificate.pass()) {
          std::string failed;
          for (const auto& c : d.certificate.conditions.checks)
            if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
          throw Error(ErrorKind::DesignFailed, "certificate checks failed: " + failed);
        }
        return std::string("all constants certified");
      }))
    return d;

  BallSet w;
  if (!step("W", [&] {
        w = build_disturbance_set(d.certificate);
        return "rho_w = " + std::to_string(w.radius);
      }))
    return d;

  if (!step("Z", [&] {
        const auto z = rpi_outer(d.hl_gain.F_H, w);
        return "rho_Z = " + std::to_string(z.outer_radius);
      }))
    return d;

  if (!step("P_H", [&] {
        terminal_cost(d.hl_gain.F_H, d.hl_gain.K_H, q_h, r_h);
        return std::string("Lyapunov solution positive definite");
      }))
    return d;

  if (!step("X_F", [&] {
        d.hl = make_hl_design(d.hl_gain, q_h, r_h, run.N_H, model.input_blocks, d.radii.rho_u_bar, w);
        std::ostringstream s;
        s << "level " << d.hl.X_F.level;
        return s.str();
      }))
    return d;

  step("initial_feasibility", [&] {
    const Vector projected = d.reduced.beta * x0;
    d.initial_phase1_distance = hl_phase1_distance(d.hl, d.slow, projected, run.qp);
    if (d.initial_phase1_distance > d.hl.Z.radius + 1e-9) {
      std::ostringstream s;
      s << "beta x0 is " << d.initial_phase1_distance << " from the admissible nominal states, tube radius "
        << d.hl.Z.radius;
      throw Error(ErrorKind::InfeasibleHL, s.str());
    }
    HLOptions opt;
    opt.qp = run.qp;
    solve_hl(d.hl, d.slow, x0, d.reduced.beta, opt);
    return std::string("slow problem feasible at x0");
  });
  return d;
}

DesignArtifacts run_design(const InterconnectedModel& model, const RunConfig& run) {
  DesignArtifacts d = try_design(model, run);
  if (!d.complete()) {
    const auto& failed = d.checklist.back();
    throw Error(ErrorKind::DesignIncomplete, "unmet item '" + failed.name + "'\n" + format_checklist(d.checklist));
  }
  return d;
}

}  // namespace hmpc
