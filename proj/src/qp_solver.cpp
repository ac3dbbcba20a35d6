#include "hmpc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

SetConstraint SetConstraint::ball(int offset, int size, double radius, Vector center) {
  SetConstraint c;
  c.kind = SetKind::Ball;
  c.offset = offset;
  c.size = size;
  c.radius = radius;
  c.center = std::move(center);
  return c;
}

SetConstraint SetConstraint::box(int offset, Vector lower, Vector upper) {
  SetConstraint c;
  c.kind = SetKind::Box;
  c.offset = offset;
  c.size = static_cast<int>(lower.size());
  c.lower = std::move(lower);
  c.upper = std::move(upper);
  return c;
}

SetConstraint SetConstraint::ellipsoid(int offset, Matrix shape, double level) {
  SetConstraint c;
  c.kind = SetKind::Ellipsoid;
  c.offset = offset;
  c.size = static_cast<int>(shape.rows());
  c.shape = std::move(shape);
  c.level = level;
  return c;
}

double SetConstraint::violation(const Vector& v) const {
  switch (kind) {
    case SetKind::Ball:
      return std::max(0.0, (v - centre()).norm() - radius);
    case SetKind::Box: {
      double worst = 0.0;
      for (int i = 0; i < size; ++i) worst = std::max({worst, lower(i) - v(i), v(i) - upper(i)});
      return worst;
    }
    case SetKind::Ellipsoid:
      return std::max(0.0, std::sqrt(std::max(0.0, v.dot(shape * v))) - std::sqrt(level));
  }
  return 0.0;
}

void QuadraticProgram::validate() const {
  const int d = dim();
  if (H.rows() != d || H.cols() != d) throw Error(ErrorKind::DimensionMismatch, "qp: H must be d x d");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::DimensionMismatch, "qp: H is not symmetric");
  }
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != d)) {
    throw Error(ErrorKind::DimensionMismatch, "qp: equality block has inconsistent size");
  }
  for (const auto& s : sets) {
    if (s.offset < 0 || s.size < 1 || s.offset + s.size > d) {
      throw Error(ErrorKind::DimensionMismatch, "qp: set constraint slice out of range");
    }
    switch (s.kind) {
      case SetKind::Ball:
        if (s.radius < 0 || (s.center.size() && s.center.size() != s.size)) {
          throw Error(ErrorKind::DimensionMismatch, "qp: malformed ball constraint");
        }
        break;
      case SetKind::Box:
        if (s.upper.size() != s.size || (s.lower.array() > s.upper.array()).any()) {
          throw Error(ErrorKind::DimensionMismatch, "qp: malformed box constraint");
        }
        break;
      case SetKind::Ellipsoid:
        if (s.shape.cols() != s.size || s.level < 0) {
          throw Error(ErrorKind::DimensionMismatch, "qp: malformed ellipsoid constraint");
        }
        break;
    }
  }
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIters: return "max_iters";
  }
  return "unknown";
}

Vector project_ellipsoid(const Vector& v, const Eigen::SelfAdjointEigenSolver<Matrix>& eig, double level) {
  const Vector lam = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& q = eig.eigenvectors();
  const Vector t = q.transpose() * v;
  if (t.dot(lam.cwiseProduct(t)) <= level) return v;
  Vector s = t;
  if (level <= 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (lam(i) > 0) s(i) = 0.0;
    return q * s;
  }
  // f(mu) = sum lam t^2 / (1 + mu lam)^2 - level is convex and decreasing, so
  // Newton started left of the root increases monotonically towards it.
  double mu = 0.0;
  for (int it = 0; it < 200; ++it) {
    double f = -level, df = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double den = 1.0 + mu * lam(i);
      const double term = lam(i) * t(i) * t(i) / (den * den);
      f += term;
      df -= 2.0 * lam(i) * term / den;
    }
    if (f <= 1e-12 * level || df >= 0.0) break;
    const double step = -f / df;
    mu += step;
    if (step <= 1e-15 * (1.0 + mu)) break;
  }
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = t(i) / (1.0 + mu * lam(i));
  return q * s;
}

namespace {

/// One block of rows of the stacked constraint matrix, in scaled units.
struct RowBlock {
  bool equality = false;
  SetKind kind = SetKind::Ball;
  int row = 0;
  int size = 0;
  Vector b;  // equality right-hand side
  Vector center;
  double radius = 0.0;
  Vector lower, upper;
  double level = 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
};

Vector project_block(const RowBlock& blk, const Vector& v) {
  if (blk.equality) return blk.b;
  switch (blk.kind) {
    case SetKind::Ball: {
      const Vector d = v - blk.center;
      const double n = d.norm();
      if (n <= blk.radius) return v;
      if (blk.radius <= 0.0) return blk.center;
      return blk.center + d * (blk.radius / n);
    }
    case SetKind::Box:
      return v.cwiseMax(blk.lower).cwiseMin(blk.upper);
    case SetKind::Ellipsoid:
      return project_ellipsoid(v, blk.eig, blk.level);
  }
  return v;
}

/// sup_{z in block} dy' z.
double support(const RowBlock& blk, const Vector& dy) {
  if (blk.equality) return dy.dot(blk.b);
  switch (blk.kind) {
    case SetKind::Ball:
      return dy.dot(blk.center) + blk.radius * dy.norm();
    case SetKind::Box: {
      double s = 0.0;
      for (int i = 0; i < blk.size; ++i) {
        if (dy(i) > 0) s += dy(i) * blk.upper(i);
        else if (dy(i) < 0) s += dy(i) * blk.lower(i);
      }
      return s;
    }
    case SetKind::Ellipsoid: {
      const Vector t = blk.eig.eigenvectors().transpose() * dy;
      double s = 0.0;
      for (int i = 0; i < blk.size; ++i) {
        const double lam = blk.eig.eigenvalues()(i);
        if (lam <= 1e-300) {
          if (std::abs(t(i)) > 0) return kInf;
          continue;
        }
        s += t(i) * t(i) / lam;
      }
      return std::sqrt(blk.level * s);
    }
  }
  return 0.0;
}

/// True when dx lies (to eps) in the recession cone of the block.
bool in_recession_cone(const RowBlock& blk, const Vector& v, double eps) {
  if (blk.equality || blk.kind != SetKind::Box) return inf_norm(v) <= eps;
  for (int i = 0; i < blk.size; ++i) {
    if (std::isfinite(blk.upper(i)) && v(i) > eps) return false;
    if (std::isfinite(blk.lower(i)) && v(i) < -eps) return false;
  }
  return true;
}

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

Residuals kkt_residuals(const QuadraticProgram& p, const Vector& x, const Vector& y) {
  Residuals r;
  const int neq = static_cast<int>(p.b_eq.size());
  Vector stat = p.H * x + p.g;
  if (neq) {
    stat += p.A_eq.transpose() * y.head(neq);
    r.primal = inf_norm(p.A_eq * x - p.b_eq);
  }
  int row = neq;
  for (const auto& s : p.sets) {
    stat.segment(s.offset, s.size) += y.segment(row, s.size);
    r.primal = std::max(r.primal, s.violation(x.segment(s.offset, s.size)));
    row += s.size;
  }
  r.dual = inf_norm(stat);
  return r;
}

// ---------------------------------------------------------------------------
// Polishing: guess the active constraints from the splitting iterate, then
// solve the resulting smooth KKT system by Newton's method.

enum class Activity { Inactive, Lower, Upper, Fixed, Curved };

struct ActiveSet {
  std::vector<std::vector<Activity>> rows;  // per set, per row (box-like sets)
  std::vector<Activity> whole;              // per set (curved / fixed sets)
};

bool box_like(const SetConstraint& s) {
  return s.kind == SetKind::Box || (s.kind == SetKind::Ball && s.size == 1 && s.radius > 0);
}

bool point_like(const SetConstraint& s) {
  if (s.kind == SetKind::Ball) return s.radius <= 0;
  if (s.kind == SetKind::Ellipsoid) return s.level <= 0;
  return false;
}

double lo_of(const SetConstraint& s, int i) {
  return s.kind == SetKind::Box ? s.lower(i) : s.centre()(0) - s.radius;
}
double hi_of(const SetConstraint& s, int i) {
  return s.kind == SetKind::Box ? s.upper(i) : s.centre()(0) + s.radius;
}

/// Shape matrix and centre of a curved set: (v - c)' P (v - c) <= level.
void curved_data(const SetConstraint& s, Matrix& pm, Vector& c, double& level) {
  if (s.kind == SetKind::Ball) {
    pm = Matrix::Identity(s.size, s.size);
    c = s.centre();
    level = s.radius * s.radius;
  } else {
    pm = s.shape;
    c = Vector::Zero(s.size);
    level = s.level;
  }
}

struct Polished {
  Vector x;
  Vector y;
};

std::optional<Polished> newton_polish(const QuadraticProgram& p, const ActiveSet& act, const Vector& x0,
                                      const Vector& y0, std::vector<double>* sign_violation) {
  const int d = p.dim();
  const int neq = static_cast<int>(p.b_eq.size());
  struct Lin {
    int var;
    double value;
    int set, local;
  };
  std::vector<Lin> lin;
  std::vector<int> curved;
  int row = neq;
  std::vector<int> set_row(p.sets.size());
  for (std::size_t k = 0; k < p.sets.size(); ++k) {
    const auto& s = p.sets[k];
    set_row[k] = row;
    if (act.whole[k] == Activity::Fixed) {
      const Vector c = s.kind == SetKind::Ball ? s.centre() : Vector::Zero(s.size);
      for (int i = 0; i < s.size; ++i) lin.push_back({s.offset + i, c(i), static_cast<int>(k), i});
    } else if (act.whole[k] == Activity::Curved) {
      curved.push_back(static_cast<int>(k));
    } else {
      for (int i = 0; i < s.size; ++i) {
        if (act.rows[k][i] == Activity::Lower) lin.push_back({s.offset + i, lo_of(s, i), static_cast<int>(k), i});
        if (act.rows[k][i] == Activity::Upper) lin.push_back({s.offset + i, hi_of(s, i), static_cast<int>(k), i});
      }
    }
    row += s.size;
  }
  const int nl = static_cast<int>(lin.size());
  const int nq = static_cast<int>(curved.size());
  const int nt = d + neq + nl + nq;

  std::vector<Matrix> pms(nq);
  std::vector<Vector> cs(nq);
  std::vector<double> levels(nq);
  for (int q = 0; q < nq; ++q) curved_data(p.sets[curved[q]], pms[q], cs[q], levels[q]);

  Vector u = Vector::Zero(nt);
  u.head(d) = x0;
  if (neq) u.segment(d, neq) = y0.head(neq);
  for (int l = 0; l < nl; ++l) u(d + neq + l) = y0(set_row[lin[l].set] + lin[l].local);
  for (int q = 0; q < nq; ++q) {
    const auto& s = p.sets[curved[q]];
    const Vector grad = pms[q] * (x0.segment(s.offset, s.size) - cs[q]);
    const double g2 = grad.squaredNorm();
    u(d + neq + nl + q) = g2 > 0 ? std::max(0.0, y0.segment(set_row[curved[q]], s.size).dot(grad) / g2) : 0.0;
  }

  const double scale = 1.0 + inf_norm(p.g) + (d ? p.H.cwiseAbs().maxCoeff() : 0.0);
  auto residual = [&](const Vector& v) {
    Vector f(nt);
    const Vector x = v.head(d);
    Vector stat = p.H * x + p.g;
    if (neq) stat += p.A_eq.transpose() * v.segment(d, neq);
    for (int l = 0; l < nl; ++l) stat(lin[l].var) += v(d + neq + l);
    for (int q = 0; q < nq; ++q) {
      const auto& s = p.sets[curved[q]];
      stat.segment(s.offset, s.size) += v(d + neq + nl + q) * (pms[q] * (x.segment(s.offset, s.size) - cs[q]));
    }
    f.head(d) = stat;
    if (neq) f.segment(d, neq) = p.A_eq * x - p.b_eq;
    for (int l = 0; l < nl; ++l) f(d + neq + l) = x(lin[l].var) - lin[l].value;
    for (int q = 0; q < nq; ++q) {
      const auto& s = p.sets[curved[q]];
      const Vector e = x.segment(s.offset, s.size) - cs[q];
      f(d + neq + nl + q) = 0.5 * (e.dot(pms[q] * e) - levels[q]);
    }
    return f;
  };

  Vector f = residual(u);
  for (int it = 0; it < 40 && inf_norm(f) > 1e-15 * scale; ++it) {
    Matrix j = Matrix::Zero(nt, nt);
    j.topLeftCorner(d, d) = p.H;
    if (neq) {
      j.block(0, d, d, neq) = p.A_eq.transpose();
      j.block(d, 0, neq, d) = p.A_eq;
    }
    for (int l = 0; l < nl; ++l) {
      j(lin[l].var, d + neq + l) = 1.0;
      j(d + neq + l, lin[l].var) = 1.0;
    }
    for (int q = 0; q < nq; ++q) {
      const auto& s = p.sets[curved[q]];
      const double mu = u(d + neq + nl + q);
      j.block(s.offset, s.offset, s.size, s.size) += mu * pms[q];
      const Vector grad = pms[q] * (u.segment(s.offset, s.size) - cs[q]);
      j.block(s.offset, d + neq + nl + q, s.size, 1) = grad;
      j.block(d + neq + nl + q, s.offset, 1, s.size) = grad.transpose();
    }
    const Vector step = j.completeOrthogonalDecomposition().solve(-f);
    if (!step.allFinite()) return std::nullopt;
    u += step;
    const Vector f_new = residual(u);
    if (inf_norm(step) <= 1e-16 * (1.0 + inf_norm(u)) && inf_norm(f_new) >= inf_norm(f)) {
      f = f_new;
      break;
    }
    f = f_new;
  }
  if (!f.allFinite()) return std::nullopt;

  Polished out;
  out.x = u.head(d);
  out.y = Vector::Zero(neq + (row - neq));
  if (neq) out.y.head(neq) = u.segment(d, neq);
  sign_violation->assign(p.sets.size(), 0.0);
  for (int l = 0; l < nl; ++l) {
    const double nu = u(d + neq + l);
    out.y(set_row[lin[l].set] + lin[l].local) = nu;
    const auto& s = p.sets[lin[l].set];
    Activity a = act.whole[lin[l].set] == Activity::Fixed ? Activity::Fixed : act.rows[lin[l].set][lin[l].local];
    double bad = 0.0;
    if (a == Activity::Lower) bad = std::max(0.0, nu);
    if (a == Activity::Upper) bad = std::max(0.0, -nu);
    (*sign_violation)[lin[l].set] = std::max((*sign_violation)[lin[l].set], bad);
    (void)s;
  }
  for (int q = 0; q < nq; ++q) {
    const auto& s = p.sets[curved[q]];
    const double mu = u(d + neq + nl + q);
    out.y.segment(set_row[curved[q]], s.size) = mu * (pms[q] * (out.x.segment(s.offset, s.size) - cs[q]));
    (*sign_violation)[curved[q]] = std::max(0.0, -mu);
  }
  return out;
}

ActiveSet guess_active(const QuadraticProgram& p, const Vector& z, const Vector& y) {
  ActiveSet act;
  const int neq = static_cast<int>(p.b_eq.size());
  int row = neq;
  for (const auto& s : p.sets) {
    std::vector<Activity> rows(s.size, Activity::Inactive);
    Activity whole = Activity::Inactive;
    const Vector zs = z.segment(row, s.size);
    const Vector ys = y.segment(row, s.size);
    if (point_like(s)) {
      whole = Activity::Fixed;
    } else if (box_like(s)) {
      for (int i = 0; i < s.size; ++i) {
        if (zs(i) - lo_of(s, i) < -ys(i)) rows[i] = Activity::Lower;
        else if (hi_of(s, i) - zs(i) < ys(i)) rows[i] = Activity::Upper;
      }
    } else {
      Matrix pm;
      Vector c;
      double level;
      curved_data(s, pm, c, level);
      const double gap = std::sqrt(level) - std::sqrt(std::max(0.0, (zs - c).dot(pm * (zs - c))));
      if (gap < ys.norm()) whole = Activity::Curved;
    }
    act.rows.push_back(rows);
    act.whole.push_back(whole);
    row += s.size;
  }
  return act;
}

/// Up to a few rounds of Newton polishing with active-set correction.
std::optional<Polished> polish(const QuadraticProgram& p, const Vector& x, const Vector& z, const Vector& y,
                               const QPSettings& s, Residuals& best) {
  ActiveSet act = guess_active(p, z, y);
  const double sign_tol = s.tol_dual * (1.0 + inf_norm(p.g));
  for (int round = 0; round < 6; ++round) {
    std::vector<double> sign_bad;
    auto cand = newton_polish(p, act, x, y, &sign_bad);
    if (!cand) return std::nullopt;
    bool changed = false;
    for (std::size_t k = 0; k < p.sets.size(); ++k) {
      const auto& set = p.sets[k];
      const Vector v = cand->x.segment(set.offset, set.size);
      if (act.whole[k] == Activity::Fixed) continue;
      if (box_like(set)) {
        const int row = static_cast<int>(p.b_eq.size()) + [&] {
          int r = 0;
          for (std::size_t q = 0; q < k; ++q) r += p.sets[q].size;
          return r;
        }();
        for (int i = 0; i < set.size; ++i) {
          const double nu = cand->y(row + i);
          auto& a = act.rows[k][i];
          if ((a == Activity::Lower && nu > sign_tol) || (a == Activity::Upper && nu < -sign_tol)) {
            a = Activity::Inactive;
            changed = true;
          } else if (a == Activity::Inactive && v(i) < lo_of(set, i) - s.tol_primal) {
            a = Activity::Lower;
            changed = true;
          } else if (a == Activity::Inactive && v(i) > hi_of(set, i) + s.tol_primal) {
            a = Activity::Upper;
            changed = true;
          }
        }
      } else if (act.whole[k] == Activity::Curved && sign_bad[k] > sign_tol) {
        act.whole[k] = Activity::Inactive;
        changed = true;
      } else if (act.whole[k] == Activity::Inactive && set.violation(v) > s.tol_primal) {
        act.whole[k] = Activity::Curved;
        changed = true;
      }
    }
    if (changed) continue;
    const Residuals r = kkt_residuals(p, cand->x, cand->y);
    if (r.primal <= std::max(best.primal, s.tol_primal) && r.dual <= std::max(best.dual, s.tol_dual)) {
      best = r;
      return cand;
    }
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

SolveResult solve_qp(const QuadraticProgram& p, const QPSettings& settings) {
  p.validate();
  const int d = p.dim();
  const int neq = static_cast<int>(p.b_eq.size());
  int m = neq;
  for (const auto& s : p.sets) m += s.size;

  Matrix a = Matrix::Zero(m, d);
  if (neq) a.topRows(neq) = p.A_eq;
  std::vector<int> block_of(m, -1);
  {
    int row = neq;
    for (std::size_t k = 0; k < p.sets.size(); ++k) {
      const auto& s = p.sets[k];
      a.block(row, s.offset, s.size, s.size).setIdentity();
      for (int i = 0; i < s.size; ++i) block_of[row + i] = static_cast<int>(k);
      row += s.size;
    }
  }

  // Modified Ruiz equilibration. Rows of one set share a single factor so
  // balls stay balls in scaled coordinates.
  Vector dvec = Vector::Ones(d), evec = Vector::Ones(m);
  Matrix hs = p.H, as = a;
  for (int pass = 0; pass < settings.scaling_passes; ++pass) {
    Vector dc(d), er(m);
    for (int j = 0; j < d; ++j) {
      double nrm = hs.col(j).cwiseAbs().maxCoeff();
      if (m) nrm = std::max(nrm, as.col(j).cwiseAbs().maxCoeff());
      dc(j) = nrm > 1e-12 ? std::clamp(1.0 / std::sqrt(nrm), 1e-4, 1e4) : 1.0;
    }
    for (int i = 0; i < m; ++i) {
      const double nrm = as.row(i).cwiseAbs().maxCoeff();
      er(i) = nrm > 1e-12 ? std::clamp(1.0 / std::sqrt(nrm), 1e-4, 1e4) : 1.0;
    }
    for (int row = neq; row < m;) {
      int end = row;
      while (end < m && block_of[end] == block_of[row]) ++end;
      const double shared = er.segment(row, end - row).minCoeff();
      er.segment(row, end - row).setConstant(shared);
      row = end;
    }
    hs = dc.asDiagonal() * hs * dc.asDiagonal();
    as = er.asDiagonal() * as * dc.asDiagonal();
    dvec = dvec.cwiseProduct(dc);
    evec = evec.cwiseProduct(er);
  }
  Vector gs = dvec.cwiseProduct(p.g);
  double cost_scale = 1.0;
  {
    double mean_col = 0.0;
    for (int j = 0; j < d; ++j) mean_col += hs.col(j).cwiseAbs().maxCoeff();
    mean_col /= std::max(1, d);
    const double ref = std::max(mean_col, inf_norm(gs));
    if (ref > 1e-12) cost_scale = std::clamp(1.0 / ref, 1e-4, 1e4);
  }
  hs *= cost_scale;
  gs *= cost_scale;

  std::vector<RowBlock> blocks;
  for (int i = 0; i < neq; ++i) {
    RowBlock blk;
    blk.equality = true;
    blk.row = i;
    blk.size = 1;
    blk.b = Vector::Constant(1, evec(i) * p.b_eq(i));
    blocks.push_back(std::move(blk));
  }
  {
    int row = neq;
    for (const auto& s : p.sets) {
      RowBlock blk;
      blk.kind = s.kind;
      blk.row = row;
      blk.size = s.size;
      const double e = evec(row);
      if (s.kind == SetKind::Ball) {
        blk.center = e * s.centre();
        blk.radius = e * s.radius;
      } else if (s.kind == SetKind::Box) {
        blk.lower = e * s.lower;
        blk.upper = e * s.upper;
      } else {
        blk.eig.compute(s.shape / (e * e));
        blk.level = s.level;
      }
      blocks.push_back(std::move(blk));
      row += s.size;
    }
  }
  auto project = [&](const Vector& v) {
    Vector out(m);
    for (const auto& blk : blocks) out.segment(blk.row, blk.size) = project_block(blk, v.segment(blk.row, blk.size));
    return out;
  };

  double rho = settings.rho;
  Vector rho_vec(m);
  auto set_rho = [&](double r) {
    for (int i = 0; i < m; ++i) rho_vec(i) = i < neq ? 1e3 * r : r;
  };
  set_rho(rho);
  Eigen::LLT<Matrix> llt;
  auto factor = [&] {
    Matrix k = hs + settings.sigma * Matrix::Identity(d, d);
    if (m) k += as.transpose() * rho_vec.asDiagonal() * as;
    llt.compute(k);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::DimensionMismatch, "qp: KKT factorization failed");
  };
  factor();

  Vector x = Vector::Zero(d), z = Vector::Zero(m), y = Vector::Zero(m);
  if (settings.warm_start) {
    const auto& ws = *settings.warm_start;
    if (ws.x.size() == d) x = ws.x.cwiseQuotient(dvec);
    if (ws.z.size() == m) z = ws.z.cwiseProduct(evec);
    if (ws.y.size() == m) y = cost_scale * ws.y.cwiseQuotient(evec);
  }

  const Vector dinv = dvec.cwiseInverse(), einv = evec.cwiseInverse();
  SolveResult result;
  result.status = SolveStatus::MaxIters;
  int primal_streak = 0, dual_streak = 0;

  auto unscaled = [&](SolveResult& r) {
    r.x = dvec.cwiseProduct(x);
    r.z = einv.cwiseProduct(z);
    r.y = evec.cwiseProduct(y) / cost_scale;
  };

  int it = 0;
  for (it = 1; it <= settings.max_iters; ++it) {
    Vector rhs = settings.sigma * x - gs;
    if (m) rhs += as.transpose() * (rho_vec.cwiseProduct(z) - y);
    const Vector xt = llt.solve(rhs);
    const Vector zt = as * xt;
    const Vector x_new = settings.alpha * xt + (1.0 - settings.alpha) * x;
    const Vector z_relax = settings.alpha * zt + (1.0 - settings.alpha) * z;
    const Vector z_new = project(z_relax + y.cwiseQuotient(rho_vec));
    const Vector y_new = y + rho_vec.cwiseProduct(z_relax - z_new);
    const Vector dx = x_new - x;
    const Vector dy = y_new - y;
    x = x_new;
    z = z_new;
    y = y_new;

    const Vector ax = as * x;
    const Vector hx = hs * x;
    const Vector aty = m ? Vector(as.transpose() * y) : Vector::Zero(d);
    const double r_prim = inf_norm(einv.cwiseProduct(ax - z));
    const double r_dual = inf_norm(dinv.cwiseProduct(hx + gs + aty)) / cost_scale;
    const double eps_p =
        settings.tol_primal * (1.0 + std::max(inf_norm(einv.cwiseProduct(ax)), inf_norm(einv.cwiseProduct(z))));
    const double eps_d =
        settings.tol_dual * (1.0 + std::max({inf_norm(dinv.cwiseProduct(hx)), inf_norm(dinv.cwiseProduct(aty)),
                                             inf_norm(dinv.cwiseProduct(gs))}) /
                                       cost_scale);
    if (r_prim <= eps_p && r_dual <= eps_d) {
      result.status = SolveStatus::Optimal;
      break;
    }
    if (settings.polish && it % settings.adapt_interval == 0 && r_prim <= 1e3 * eps_p && r_dual <= 1e3 * eps_d) {
      SolveResult trial;
      unscaled(trial);
      Residuals target{settings.tol_primal, settings.tol_dual};
      if (auto pol = polish(p, trial.x, trial.z, trial.y, settings, target)) {
        result.x = pol->x;
        result.y = pol->y;
        result.z = trial.z;
        result.status = SolveStatus::Optimal;
        result.polished = true;
        result.iterations = it;
        result.primal_residual = target.primal;
        result.dual_residual = target.dual;
        result.objective = p.objective(result.x);
        return result;
      }
    }

    // Infeasibility certificates on successive differences.
    const double dy_norm = inf_norm(dy);
    bool primal_cert = false;
    if (m && dy_norm > 1e-30) {
      const double eps = settings.infeasibility_tol * dy_norm;
      if (inf_norm(as.transpose() * dy) <= eps) {
        double sup = 0.0;
        for (const auto& blk : blocks) sup += support(blk, dy.segment(blk.row, blk.size));
        primal_cert = sup < -eps;
      }
    }
    primal_streak = primal_cert ? primal_streak + 1 : 0;
    const double dx_norm = inf_norm(dx);
    bool dual_cert = false;
    if (dx_norm > 1e-30) {
      const double eps = settings.infeasibility_tol * dx_norm;
      if (inf_norm(hs * dx) <= eps && gs.dot(dx) < -eps) {
        dual_cert = true;
        const Vector adx = as * dx;
        for (const auto& blk : blocks) {
          if (!in_recession_cone(blk, adx.segment(blk.row, blk.size), eps)) {
            dual_cert = false;
            break;
          }
        }
      }
    }
    dual_streak = dual_cert ? dual_streak + 1 : 0;
    if (primal_streak >= settings.infeasibility_window) {
      result.status = SolveStatus::Infeasible;
      break;
    }
    if (dual_streak >= settings.infeasibility_window) {
      result.status = SolveStatus::Unbounded;
      break;
    }

    if (m && it % settings.adapt_interval == 0) {
      const double rp = inf_norm(ax - z) / std::max({inf_norm(ax), inf_norm(z), 1e-30});
      const double rd = inf_norm(hx + gs + aty) / std::max({inf_norm(hx), inf_norm(aty), inf_norm(gs), 1e-30});
      const double ratio = std::sqrt(rp / std::max(rd, 1e-30));
      const double new_rho = std::clamp(rho * ratio, 1e-6, 1e6);
      if (new_rho > 5.0 * rho || new_rho < 0.2 * rho) {
        rho = new_rho;
        set_rho(rho);
        factor();
      }
    }
  }

  result.iterations = std::min(it, settings.max_iters);
  unscaled(result);
  Residuals r = kkt_residuals(p, result.x, result.y);
  if (result.status == SolveStatus::Optimal && settings.polish) {
    Residuals target = r;
    if (auto pol = polish(p, result.x, result.z, result.y, settings, target)) {
      result.x = pol->x;
      result.y = pol->y;
      result.polished = true;
      r = target;
    }
  }
  result.primal_residual = r.primal;
  result.dual_residual = r.dual;
  result.objective = p.objective(result.x);
  return result;
}

}  // namespace hmpc
