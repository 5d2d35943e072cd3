#include "stochavg/hermitian.hpp"

#include <algorithm>
#include <cmath>

namespace stochavg {

namespace {

constexpr double not_psd_threshold = -1e-6;

}  // namespace

HermitianMatrix::HermitianMatrix(Storage m, double tol) : m_(std::move(m))
{
    if (m_.rows() != m_.cols())
        throw InvalidArgument("Hermitian matrix must be square");
    double dev = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (m_.size() && !(dev <= tol))
        throw InvalidArgument("matrix is not Hermitian (deviation "
                              + std::to_string(dev) + ")");
    // Symmetrize so later eigen solves see exact Hermitian input.
    m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

HermitianMatrix HermitianMatrix::identity(std::size_t dim)
{
    return HermitianMatrix(Storage::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::diagonal(std::vector<double> const& d)
{
    Storage m = Storage::Zero(d.size(), d.size());
    for (std::size_t k = 0; k < d.size(); ++k)
        m(k, k) = d[k];
    return HermitianMatrix(std::move(m));
}

Eigen::VectorXd HermitianMatrix::eigenvalues() const
{
    if (is_diagonal())
    {
        Eigen::VectorXd d = m_.diagonal().real();
        std::sort(d.data(), d.data() + d.size());
        return d;
    }
    Eigen::SelfAdjointEigenSolver<Storage> solver(m_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

double HermitianMatrix::min_eigenvalue() const
{
    return dim() ? eigenvalues()(0) : 0.0;
}

double HermitianMatrix::max_eigenvalue() const
{
    return dim() ? eigenvalues()(dim() - 1) : 0.0;
}

bool HermitianMatrix::is_diagonal() const
{
    for (Eigen::Index k = 0; k < m_.rows(); ++k)
    {
        for (Eigen::Index l = 0; l < m_.cols(); ++l)
        {
            if (k != l && m_(k, l) != Complex{})
                return false;
        }
    }
    return true;
}

bool HermitianMatrix::is_real() const
{
    return m_.imag().cwiseAbs().maxCoeff() == 0.0;
}

HermitianMatrix HermitianMatrix::squared() const
{
    return HermitianMatrix(m_ * m_, 1e-8 * (1.0 + max_abs() * max_abs()));
}

SqrtResult principal_sqrt(HermitianMatrix const& a)
{
    std::size_t const n = a.dim();
    SqrtResult result{HermitianMatrix(n), 0};
    auto root_of = [&](double lambda) {
        if (lambda < not_psd_threshold)
            throw NotPSD(lambda);
        if (lambda < 0.0)
        {
            ++result.clamped;
            return 0.0;
        }
        return std::sqrt(lambda);
    };
    if (a.is_diagonal())
    {
        HermitianMatrix::Storage m = HermitianMatrix::Storage::Zero(n, n);
        for (std::size_t k = 0; k < n; ++k)
            m(k, k) = root_of(a(k, k).real());
        result.root = HermitianMatrix(std::move(m));
        return result;
    }
    Eigen::SelfAdjointEigenSolver<HermitianMatrix::Storage> solver(a.matrix());
    Eigen::VectorXd roots(n);
    for (std::size_t k = 0; k < n; ++k)
        roots(k) = root_of(solver.eigenvalues()(k));
    HermitianMatrix::Storage m = solver.eigenvectors() * roots.asDiagonal()
                                 * solver.eigenvectors().adjoint();
    if (a.is_real())
        m = m.real().cast<Complex>();
    result.root = HermitianMatrix(std::move(m), 1e-8 * (1.0 + a.max_abs()));
    return result;
}

}  // namespace stochavg
