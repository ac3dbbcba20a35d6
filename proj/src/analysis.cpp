#include "hmpc/analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hmpc/error.hpp"
#include "hmpc/lp_solver.hpp"

namespace hmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_horizon(int N_L, const char* where) {
  if (N_L < 1) throw Error(ErrorKind::DimensionMismatch, std::string(where) + ": N_L must be at least 1");
}

/// Powers F^0 .. F^count.
std::vector<Matrix> powers(const Matrix& f, int count) {
  std::vector<Matrix> out;
  out.reserve(count + 1);
  out.push_back(Matrix::Identity(f.rows(), f.cols()));
  for (int k = 0; k < count; ++k) out.push_back(out.back() * f);
  return out;
}

Matrix coupling_part(const InterconnectedModel& model) { return model.A - model.decoupled_A(); }

Matrix gain_rows(const LLGain& ll, const InterconnectedModel& model, int i) {
  const auto& blk = model.input_blocks[i];
  return ll.K.middleRows(blk.offset, blk.size);
}

double euclid(const Vector& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace

double kappa(const InterconnectedModel& model, const ReducedModel& r, int N_L) {
  check_horizon(N_L, "kappa");
  // sum_{j=1}^{N} A^{N-j} B = sum_{j=0}^{N-1} A^j B.
  const Matrix b = geometric_sum(r.A_H, r.B_H, N_L) - r.beta * geometric_sum(model.A, model.B, N_L);
  return norm2(b);
}

double kappa_bound(const InterconnectedModel& model, const ReducedModel& r, int N_L) {
  check_horizon(N_L, "kappa_bound");
  const int nb = r.n();
  const Matrix g_h = (Matrix::Identity(nb, nb) - r.A_H).partialPivLu().solve(r.B_H);
  const Matrix g_l = (Matrix::Identity(model.n(), model.n()) - model.A).partialPivLu().solve(model.B);
  return norm2(matrix_power(r.A_H, N_L)) * norm2(g_h) + norm2(matrix_power(model.A, N_L)) * norm2(r.beta) * norm2(g_l);
}

Matrix state_mismatch(const InterconnectedModel& model, const ReducedModel& r, int N_L) {
  check_horizon(N_L, "state_mismatch");
  return matrix_power(r.A_H, N_L) * r.beta - r.beta * matrix_power(model.A, N_L);
}

double reachability_projection_sigma(const InterconnectedModel& model, const Matrix& beta_i, int N_L, int i) {
  check_horizon(N_L, "reachability_projection_sigma");
  if (i < 0 || i >= model.count()) throw Error(ErrorKind::DimensionMismatch, "reachability_projection_sigma: index");
  const auto& s = model.subsystems[i];
  if (beta_i.cols() != s.n()) throw Error(ErrorKind::DimensionMismatch, "reachability_projection_sigma: beta_i");
  const Matrix h = terminal_map(s, beta_i, N_L);
  const double sigma = sigma_min(h);
  if (h.rows() > h.cols() || sigma <= 1e-12) {
    std::ostringstream msg;
    msg << "subsystem " << i + 1 << ": beta_i R_i(" << N_L << ") has minimum singular value " << sigma;
    throw Error(ErrorKind::RankDeficient, msg.str());
  }
  return sigma;
}

Matrix prediction_growth(const InterconnectedModel& model, int N_L) {
  Matrix s = Matrix::Zero(model.count(), N_L + 1);
  for (int i = 0; i < model.count(); ++i) {
    const auto& sub = model.subsystems[i];
    // s(j) = s(j-1) + ||A^{j-1} B||.
    Matrix p = sub.B;
    for (int j = 1; j <= N_L; ++j) {
      s(i, j) = s(i, j - 1) + norm2(p);
      p = sub.A * p;
    }
  }
  return s;
}

StructuralConstants structural_constants(const InterconnectedModel& model, const ReducedModel& r,
                                         const LLGain& ll, int N_L) {
  check_horizon(N_L, "structural_constants");
  StructuralConstants sc;
  const int M = model.count();
  sc.N_L = N_L;
  sc.kappa = kappa(model, r, N_L);
  sc.kappa_bound = kappa_bound(model, r, N_L);
  sc.A_norm = norm2(state_mismatch(model, r, N_L));
  sc.R_norm = norm2(reachability_matrix(model.A, model.B, N_L));
  sc.AL_N_norm = norm2(matrix_power(model.A, N_L));
  sc.sigma_min.resize(M);
  for (int i = 0; i < M; ++i) sc.sigma_min(i) = reachability_projection_sigma(model, r.beta_block(model, i), N_L, i);
  sc.rho_u = model.input_radii();

  const Matrix growth = prediction_growth(model, N_L);
  const Matrix ac = coupling_part(model);
  const auto fp = powers(ll.F_L, N_L);

  sc.lambda_matrix = Matrix::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    const Matrix k_i = gain_rows(ll, model, i);
    for (int rr = 2; rr <= N_L - 1; ++rr) {
      const double lead = norm2(k_i * fp[N_L - rr - 1] * ac);
      for (int j = 0; j < M; ++j) sc.lambda_matrix(i, j) += lead * growth(j, rr - 1);
    }
  }
  sc.omega = Vector::Zero(M);
  for (int j = 2; j <= N_L; ++j) {
    const double lead = norm2(r.beta * fp[N_L - j] * ac);
    for (int l = 0; l < M; ++l) sc.omega(l) += lead * growth(l, j - 1);
  }
  return sc;
}

ValidationReport verify_allocation(const StructuralConstants& sc, const Vector& rho_delta_u_hat,
                                   const Vector& rho_u_bar, double slack) {
  ValidationReport rep;
  const int M = static_cast<int>(sc.sigma_min.size());
  const double root_n = std::sqrt(static_cast<double>(sc.N_L));
  const double ubar_sum = rho_u_bar.sum();
  const Vector used = (sc.lambda_matrix + Matrix::Identity(M, M)) * rho_delta_u_hat + rho_u_bar;
  for (int i = 0; i < M; ++i) {
    const double margin = root_n * sc.sigma_min(i) * rho_delta_u_hat(i) - sc.kappa * ubar_sum;
    rep.add("kappa_inequality_" + std::to_string(i + 1), margin, slack, margin >= slack,
            "sqrt(N) sigma_i rho_dhat_i - kappa sum(rho_ubar)");
    const double room = sc.rho_u(i) - used(i);
    rep.add("budget_" + std::to_string(i + 1), room, slack, room >= slack,
            "rho_u_i - ((Lambda + I) rho_dhat + rho_ubar)_i");
  }
  for (int i = 0; i < M; ++i) {
    rep.add("nonnegative_" + std::to_string(i + 1), std::min(rho_delta_u_hat(i), rho_u_bar(i)), 0.0,
            rho_delta_u_hat(i) >= 0.0 && rho_u_bar(i) >= 0.0);
  }
  return rep;
}

RadiusAllocation tune_radii(const InterconnectedModel& model, const ReducedModel& r, const LLGain& ll, int N_L,
                            const TuningOptions& options) {
  if (!(options.gamma1 > 0.0) || !(options.gamma2 > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "tune_radii: weights must be positive");
  }
  const StructuralConstants sc = structural_constants(model, r, ll, N_L);
  const int M = model.count();
  const double root_n = std::sqrt(static_cast<double>(N_L));
  // Rows are written with twice the declared slack so that re-substitution
  // clears the declared slack after rounding.
  const double row_slack = 2.0 * options.slack;

  const bool cert = options.certify.has_value();
  const int rows = (cert ? 3 : 2) * M;
  Matrix a = Matrix::Zero(rows, 2 * M);
  Vector b = Vector::Zero(rows);

  double kappa_rhs = row_slack;
  if (cert) {
    const auto& c = *options.certify;
    if (c.kh_row_norms.size() != M) throw Error(ErrorKind::DimensionMismatch, "tune_radii: K_H row norms");
    if (sc.AL_N_norm >= 1.0) {
      throw Error(ErrorKind::InfeasibleTuning,
                  "tune_radii: ||A_L^N|| >= 1, chi cannot be certified; increase N_L");
    }
    const double rho_u = euclid(sc.rho_u);
    kappa_rhs = std::max({kappa_rhs, sc.A_norm * c.x0_norm, root_n * rho_u * sc.R_norm * sc.A_norm / (1.0 - sc.AL_N_norm)});
  }
  for (int i = 0; i < M; ++i) {
    // sqrt(N) sigma_i rho_dhat_i - kappa sum(rho_ubar) >= kappa_rhs.
    a(i, i) = -root_n * sc.sigma_min(i);
    a.block(i, M, 1, M).setConstant(sc.kappa);
    b(i) = -kappa_rhs;
    // (Lambda + I) rho_dhat + rho_ubar <= rho_u.
    a.block(M + i, 0, 1, M) = sc.lambda_matrix.row(i);
    a(M + i, i) += 1.0;
    a(M + i, M + i) = 1.0;
    b(M + i) = sc.rho_u(i) - row_slack;
  }
  if (cert) {
    const auto& c = *options.certify;
    for (int i = 0; i < M; ++i) {
      // ||K_H,i|| c_Z rho_w - rho_ubar_i <= -margin, with rho_w bounded linearly.
      a.block(2 * M + i, 0, 1, M) = c.kh_row_norms(i) * c.rpi_factor * sc.omega.transpose();
      a(2 * M + i, M + i) = -1.0;
      b(2 * M + i) = -c.margin;
    }
  }
  Vector cost(2 * M);
  cost.head(M).setConstant(options.gamma1);
  cost.tail(M).setConstant(options.gamma2);

  const auto res = solve_lp(cost, a, b, Vector::Zero(2 * M));
  if (res.status != SolveStatus::Optimal) {
    std::ostringstream msg;
    msg << "tune_radii: LP " << to_string(res.status) << " at N_L = " << N_L << " (kappa " << sc.kappa
        << "); a larger N_L shrinks kappa and the coupling terms";
    throw Error(ErrorKind::InfeasibleTuning, msg.str());
  }
  RadiusAllocation out;
  out.rho_delta_u_hat = res.x.head(M);
  out.rho_u_bar = res.x.tail(M);
  out.lambda_matrix = sc.lambda_matrix;
  out.objective = res.objective;
  out.certified = cert;
  out.kappa_slack.resize(M);
  out.budget_slack.resize(M);
  const Vector used = (sc.lambda_matrix + Matrix::Identity(M, M)) * out.rho_delta_u_hat + out.rho_u_bar;
  for (int i = 0; i < M; ++i) {
    out.kappa_slack(i) = root_n * sc.sigma_min(i) * out.rho_delta_u_hat(i) - sc.kappa * out.rho_u_bar.sum();
    out.budget_slack(i) = sc.rho_u(i) - used(i);
  }
  return out;
}

Matrix correction_response(const InterconnectedModel& model, const LLGain& ll, int N_L) {
  check_horizon(N_L, "correction_response");
  const int n = model.n(), m = model.m(), N = N_L;
  const Matrix ad = model.decoupled_A();
  const Matrix ac = model.A - ad;
  const auto ap = powers(model.A, N);
  const auto dp = powers(ad, N);
  const auto fp = powers(ll.F_L, N);

  Matrix bc(n, N * m);  // [A^{N-1} B, ..., B]
  for (int t = 0; t < N; ++t) bc.middleCols(t * m, m) = ap[N - 1 - t] * model.B;
  Matrix bl = Matrix::Zero(N * n, N * m);  // delta_x_hat(j), j = 0..N-1
  for (int j = 1; j < N; ++j)
    for (int t = 0; t < j; ++t) bl.block(j * n, t * m, n, m) = dp[j - 1 - t] * model.B;
  Matrix fcal = Matrix::Zero(N * n, N * n);
  for (int j = 1; j < N; ++j)
    for (int q = 0; q < j; ++q) fcal.block(j * n, q * n, n, n) = fp[j - 1 - q];
  Matrix acd = Matrix::Zero(N * n, N * n);
  Matrix kd = Matrix::Zero(N * m, N * n);
  for (int j = 0; j < N; ++j) {
    acd.block(j * n, j * n, n, n) = ac;
    kd.block(j * m, j * n, m, n) = ll.K;
  }
  const Matrix mix = Matrix::Identity(N * m, N * m) + kd * fcal * acd * bl;
  return bc * mix;
}

double power_norm_sum(const Matrix& f, double tail) {
  if (!is_schur(f, 0.0)) return kInf;
  double sum = 0.0;
  Matrix p = Matrix::Identity(f.rows(), f.cols());
  for (int h = 0; h < 1000000; ++h) {
    const double term = norm2(p);
    sum += term;
    if (term < tail) return sum;
    p = p * f;
  }
  return kInf;
}

CertificateReport certificate_constants(const InterconnectedModel& model, const ReducedModel& r, const GainDesign& hl,
                                     const LLGain& ll, const Vector& rho_delta_u_hat, const Vector& rho_u_bar,
                                     int N_L, double x0_norm) {
  check_horizon(N_L, "certificate_constants");
  const int M = model.count();
  const int N = N_L;
  if (rho_delta_u_hat.size() != M || rho_u_bar.size() != M) {
    throw Error(ErrorKind::DimensionMismatch, "certificate_constants: one radius per subsystem");
  }
  CertificateReport rep;
  auto& chk = rep.conditions;
  rep.N_L = N;
  rep.nbar = r.n();
  rep.kappa = kappa(model, r, N);
  rep.kappa_bound = kappa_bound(model, r, N);
  rep.A_norm = norm2(state_mismatch(model, r, N));
  rep.R_norm = norm2(reachability_matrix(model.A, model.B, N));
  rep.AL_N_norm = norm2(matrix_power(model.A, N));
  rep.rho_u_i = model.input_radii();
  rep.rho_u = euclid(rep.rho_u_i);
  rep.rho_u_bar_i = rho_u_bar;
  rep.rho_u_bar = euclid(rho_u_bar);
  rep.rho_delta_u_hat = rho_delta_u_hat;
  rep.x0_norm = x0_norm;
  const double root_n = std::sqrt(static_cast<double>(N));

  chk.add("AL_N_contractive", rep.AL_N_norm, 1.0, rep.AL_N_norm < 1.0, "||A_L^N|| < 1");

  rep.sigma_min = Vector::Zero(M);
  for (int i = 0; i < M; ++i) {
    const Matrix h = terminal_map(model.subsystems[i], r.beta_block(model, i), N);
    rep.sigma_min(i) = h.rows() <= h.cols() ? sigma_min(h) : 0.0;
    chk.add("rank_H_" + std::to_string(i + 1), rep.sigma_min(i), 1e-12, rep.sigma_min(i) > 1e-12,
            "minimum singular value of beta_i R_i(N)");
  }

  rep.lambda = Vector::Zero(M);
  rep.chi = Vector::Zero(M);
  rep.x0_bound_ok = true;
  for (int i = 0; i < M; ++i) {
    const double gap = root_n * rep.sigma_min(i) * rho_delta_u_hat(i) - rep.kappa * rep.rho_u_bar;
    const double need = rep.sigma_min(i) > 0.0 ? rep.kappa * rep.rho_u_bar / (root_n * rep.sigma_min(i)) : kInf;
    chk.add("kappa_margin_" + std::to_string(i + 1), rho_delta_u_hat(i), need, gap > 0.0,
            "rho_dhat_i > kappa rho_ubar / (sqrt(N) sigma_i)");
    rep.lambda(i) = rep.A_norm > 0.0 ? gap / rep.A_norm : (gap > 0.0 ? kInf : -kInf);
    const double numer = root_n * rep.rho_u * rep.R_norm * rep.A_norm;
    if (gap <= 0.0 || rep.AL_N_norm >= 1.0) {
      rep.chi(i) = kInf;
    } else {
      rep.chi(i) = numer / ((1.0 - rep.AL_N_norm) * gap);
    }
    chk.add("chi_" + std::to_string(i + 1), rep.chi(i), 1.0, rep.chi(i) <= 1.0);
    rep.x0_bound_ok = rep.x0_bound_ok && x0_norm <= rep.lambda(i);
  }

  // Decentralized prediction bounds.
  const Matrix growth = prediction_growth(model, N);
  rep.rho_delta_x_hat = rho_delta_u_hat.asDiagonal() * growth;
  rep.rho_delta_x_hat_total = rep.rho_delta_x_hat.colwise().norm().transpose();

  const Matrix ac = coupling_part(model);
  const auto fp = powers(ll.F_L, N);
  rep.rho_w = 0.0;
  for (int j = 2; j <= N; ++j) rep.rho_w += norm2(r.beta * fp[N - j] * ac) * rep.rho_delta_x_hat_total(j - 1);

  // Correction growth per fast offset, and the budget bound at N - 1.
  rep.rho_delta_u = Matrix::Zero(M, N);
  rep.rho_delta_u_bar = Vector::Zero(M);
  for (int i = 0; i < M; ++i) {
    const Matrix k_i = gain_rows(ll, model, i);
    for (int j = 2; j < N; ++j) {
      double s = 0.0;
      for (int rr = 2; rr <= j; ++rr) s += norm2(k_i * fp[j - rr] * ac) * rep.rho_delta_x_hat_total(rr - 1);
      rep.rho_delta_u(i, j) = s;
    }
    double bar = 0.0;
    for (int rr = 2; rr <= N - 1; ++rr) {
      bar += norm2(k_i * fp[N - rr - 1] * ac) * rep.rho_delta_x_hat_total(rr - 1);
    }
    rep.rho_delta_u_bar(i) = bar;
    const double per_step_form = N >= 2 ? rep.rho_delta_u(i, N - 1) : 0.0;
    const double diff = std::abs(per_step_form - bar);
    chk.add("delta_u_forms_agree_" + std::to_string(i + 1), diff, 1e-12 * std::max(1.0, bar),
            diff <= 1e-12 * std::max(1.0, bar), "per-step form at N - 1 against the budget form");
    bool monotone = true;
    for (int j = 1; j < N; ++j) monotone = monotone && rep.rho_delta_u(i, j) >= rep.rho_delta_u(i, j - 1);
    chk.add("delta_u_monotone_" + std::to_string(i + 1), monotone ? 1.0 : 0.0, 1.0, monotone);
    const double total = rho_u_bar(i) + rho_delta_u_hat(i) + bar;
    chk.add("input_inclusion_" + std::to_string(i + 1), total, rep.rho_u_i(i), total <= rep.rho_u_i(i),
            "rho_ubar_i + rho_dhat_i + rho_du_i(N-1) <= rho_u_i");
  }

  rep.kappa_du = norm2(correction_response(model, ll, N));
  rep.rho_x = rep.kappa_du * root_n * euclid(rho_delta_u_hat);
  rep.envelope = power_norm_sum(hl.F_L_NL) * rep.rho_x;
  chk.add("F_L_NL_schur", spectral_radius(hl.F_L_NL), 1.0, is_schur(hl.F_L_NL));
  chk.add("F_L_schur", ll.rho_F_L, 1.0, is_schur(ll.F_L));
  for (int i = 0; i < M; ++i) {
    chk.add("x0_bound_" + std::to_string(i + 1), x0_norm, rep.lambda(i), x0_norm <= rep.lambda(i),
            "||x(0)|| <= lambda_i(N)");
  }
  return rep;
}

BallSet build_disturbance_set(const CertificateReport& report) { return BallSet(report.nbar, report.rho_w); }

std::vector<SweepRow> sweep_horizon(const InterconnectedModel& model, const ReducedModel& r,
                                    const Vector& rho_delta_u_hat, const Vector& rho_u_bar,
                                    const std::vector<int>& horizons) {
  std::vector<SweepRow> rows;
  const int M = model.count();
  const double rho_u = euclid(model.input_radii());
  const double rho_ubar = euclid(rho_u_bar);
  for (const int N : horizons) {
    check_horizon(N, "sweep_horizon");
    SweepRow row;
    row.N_L = N;
    row.kappa = kappa(model, r, N);
    row.kappa_bound = kappa_bound(model, r, N);
    row.AL_N_norm = norm2(matrix_power(model.A, N));
    const double a_norm = norm2(state_mismatch(model, r, N));
    const double r_norm = norm2(reachability_matrix(model.A, model.B, N));
    const double root_n = std::sqrt(static_cast<double>(N));
    row.lambda.resize(M);
    row.chi.resize(M);
    for (int i = 0; i < M; ++i) {
      const double sigma = sigma_min(terminal_map(model.subsystems[i], r.beta_block(model, i), N));
      const double gap = root_n * sigma * rho_delta_u_hat(i) - row.kappa * rho_ubar;
      row.lambda(i) = a_norm > 0.0 ? gap / a_norm : kInf;
      row.chi(i) = (gap > 0.0 && row.AL_N_norm < 1.0)
                       ? root_n * rho_u * r_norm * a_norm / ((1.0 - row.AL_N_norm) * gap)
                       : kInf;
    }
    rows.push_back(row);
  }
  return rows;
}

ValidationReport sweep_monotonicity(const std::vector<SweepRow>& rows) {
  ValidationReport rep;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    const std::string at = "N" + std::to_string(row.N_L);
    rep.add("kappa_bound_" + at, row.kappa, row.kappa_bound, row.kappa <= row.kappa_bound);
    if (k == 0) continue;
    const auto& prev = rows[k - 1];
    rep.add("AL_N_decreasing_" + at, row.AL_N_norm, prev.AL_N_norm, row.AL_N_norm < prev.AL_N_norm);
    for (int i = 0; i < row.lambda.size(); ++i) {
      const std::string id = std::to_string(i + 1) + "_" + at;
      rep.add("lambda_increasing_" + id, row.lambda(i), prev.lambda(i), row.lambda(i) > prev.lambda(i));
      rep.add("chi_decreasing_" + id, row.chi(i), prev.chi(i), row.chi(i) < prev.chi(i));
    }
  }
  return rep;
}

}  // namespace hmpc
