#pragma once

#include <Eigen/Dense>

#include "stochavg/types.hpp"

namespace stochavg {

/// n x n Hermitian matrix; holds A(a), B(a), and the real symmetric S(I), K(I).
class HermitianMatrix
{
  public:
    using Storage = Eigen::MatrixXcd;

    explicit HermitianMatrix(std::size_t dim = 0) : m_(Storage::Zero(dim, dim)) {}
    /// Throws InvalidArgument if m is not square or not Hermitian to `tol`.
    explicit HermitianMatrix(Storage m, double tol = 1e-10);
    static HermitianMatrix identity(std::size_t dim);
    static HermitianMatrix diagonal(std::vector<double> const& d);

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    Complex operator()(std::size_t k, std::size_t l) const { return m_(k, l); }
    Storage const& matrix() const { return m_; }

    /// Ascending eigenvalues.
    Eigen::VectorXd eigenvalues() const;
    double min_eigenvalue() const;
    double max_eigenvalue() const;
    double max_abs() const { return m_.cwiseAbs().maxCoeff(); }
    bool is_diagonal() const;
    bool is_real() const;

    HermitianMatrix squared() const;

  private:
    Storage m_;
};

struct SqrtResult
{
    HermitianMatrix root;
    /// Number of slightly negative eigenvalues set to zero.
    int clamped = 0;
};

/*!
 * Principal (PSD) square root via Hermitian eigendecomposition.
 *
 * Eigenvalues in [-1e-6, 0) are clamped to zero and counted; anything more
 * negative raises NotPSD.
 */
SqrtResult principal_sqrt(HermitianMatrix const& a);

}  // namespace stochavg
