#pragma once

#include <Eigen/Dense>

namespace hmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& a);

/// Induced 2-norm (largest singular value). Empty matrices have norm 0.
double norm2(const Matrix& a);

double sigma_min(const Matrix& a);

/// Number of singular values above `tol`.
int numerical_rank(const Matrix& a, double tol = 1e-10);

/// Strict Schur test: rho(a) < 1 - margin.
bool is_schur(const Matrix& a, double margin = 1e-9);

Matrix matrix_power(const Matrix& a, int k);

/// Sum_{j=0}^{count-1} a^j b, accumulated Horner style.
Matrix geometric_sum(const Matrix& a, const Matrix& b, int count);

/// [b, a b, ..., a^{n-1} b].
Matrix reachability_matrix(const Matrix& a, const Matrix& b, int steps);

Matrix block_diagonal(const Matrix& a, const Matrix& b);

/// Stabilizing solution of the discrete algebraic Riccati equation
/// P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q, by structure-preserving doubling.
/// Throws Error(NotSchur) when the iteration does not converge.
Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

/// LQR gain K with u = K x (sign already applied, closed loop A + B K).
Matrix dlqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

/// Solution of F' P F - P = -S for Schur F, by the doubling series.
Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& s);

/// Zero-order-hold discretization of x' = Ac x + Bc u over dt.
std::pair<Matrix, Matrix> zoh_discretize(const Matrix& ac, const Matrix& bc, double dt);

}  // namespace hmpc
