#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace litt {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row; symmetric operators store both triangles.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n_rows, std::size_t n_cols,
               std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, Vector values);

  /// Duplicate entries are summed.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::span<const Triplet> triplets);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const { return col_indices_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  /// Entry (i, j); zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  /// Position of (i, j) in values(), or npos.
  std::size_t find(std::size_t i, std::size_t j) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector multiply(std::span<const double> x) const;

  bool same_pattern(const SparseMatrix& other) const;
  /// this += alpha * other; both must share the sparsity pattern.
  SparseMatrix& add_scaled(double alpha, const SparseMatrix& other);
  SparseMatrix& scale(double alpha);

  Vector diagonal_values() const;
  bool is_symmetric(double tol = 0.0) const;
  /// Copy with the same pattern and all values zero.
  SparseMatrix zeros_like() const;

private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  Vector values_;
};

struct SolverReport {
  int iterations = 0;
  /// ||b - A x||_2 / ||b||_2 of the returned iterate (0 for b = 0).
  double final_residual_norm = 0.0;
  bool converged = false;
  bool breakdown = false;
};

struct SolverOptions {
  double rel_tol = 1e-10;
  /// Non-positive selects 10 * n.
  int max_iter = 0;
};

struct SolveResult {
  Vector x;
  SolverReport report;
};

class Preconditioner {
public:
  virtual ~Preconditioner() = default;
  /// z = P^{-1} r
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
  void apply(std::span<const double> r, std::span<double> z) const override;
};

class JacobiPreconditioner final : public Preconditioner {
public:
  explicit JacobiPreconditioner(Vector inverse_diagonal)
      : inv_diag_(std::move(inverse_diagonal)) {}
  void apply(std::span<const double> r, std::span<double> z) const override;

private:
  Vector inv_diag_;
};

/// Zero-fill incomplete Cholesky factor L on the lower pattern of A;
/// apply() solves L L^T z = r.
class IncompleteCholesky final : public Preconditioner {
public:
  explicit IncompleteCholesky(const SparseMatrix& a);
  void apply(std::span<const double> r, std::span<double> z) const override;

  /// Diagonal shift that was needed to keep every pivot positive (0 if none).
  double shift_used() const { return shift_; }
  /// The factor as a lower-triangular CSR matrix.
  const SparseMatrix& factor() const { return lower_; }

private:
  bool try_factor(const SparseMatrix& a, double shift);

  SparseMatrix lower_;
  double shift_ = 0.0;
};

IncompleteCholesky incomplete_cholesky(const SparseMatrix& a);
JacobiPreconditioner jacobi(const SparseMatrix& a);

/// Preconditioned conjugate gradients for SPD systems. x0, when given,
/// seeds the iteration.
SolveResult cg_solve(const SparseMatrix& a, std::span<const double> b,
                     const Preconditioner& precond, SolverOptions opts = {},
                     std::span<const double> x0 = {});

/// Preconditioned MINRES for symmetric, possibly indefinite systems. The
/// preconditioner must be SPD.
SolveResult minres_solve(const SparseMatrix& a, std::span<const double> b,
                         const Preconditioner& precond, SolverOptions opts = {},
                         std::span<const double> x0 = {});

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> u);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// u^T M v. Rejects M with a nonpositive diagonal entry.
double weighted_dot(std::span<const double> u, std::span<const double> v,
                    const SparseMatrix& m);
double weighted_norm(std::span<const double> u, const SparseMatrix& m);

}  // namespace litt
