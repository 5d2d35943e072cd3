#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochavg {

using Complex = std::complex<double>;

/// State amplitude in C^n (v, a, v0 all live here).
using ComplexVec = std::vector<Complex>;

//---------------------------------------------------------------------------//
// Errors
//---------------------------------------------------------------------------//

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression or config text; `position` is a 0-based offset.
class ParseError : public Error
{
  public:
    ParseError(std::string const& msg, std::size_t position)
        : Error(msg + " at position " + std::to_string(position)), position_(position)
    {
    }
    std::size_t position() const { return position_; }

  private:
    std::size_t position_;
};

class NonPolynomial : public Error
{
  public:
    using Error::Error;
};

class NotPSD : public Error
{
  public:
    NotPSD(double min_eigenvalue)
        : Error("matrix is not positive semidefinite (min eigenvalue "
                + std::to_string(min_eigenvalue) + ")"),
          min_eigenvalue_(min_eigenvalue)
    {
    }
    double min_eigenvalue() const { return min_eigenvalue_; }

  private:
    double min_eigenvalue_;
};

class DimensionMismatch : public Error
{
  public:
    using Error::Error;
};

class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

class StepTooLarge : public Error
{
  public:
    using Error::Error;
};

/// A sample path produced a non-finite state.
class NonFinite : public Error
{
  public:
    NonFinite(std::size_t path, double time)
        : Error("non-finite state on path " + std::to_string(path) + " at time "
                + std::to_string(time)),
          path_(path),
          time_(time)
    {
    }
    std::size_t path() const { return path_; }
    double time() const { return time_; }

  private:
    std::size_t path_;
    double time_;
};

//---------------------------------------------------------------------------//
// Small value types
//---------------------------------------------------------------------------//

/// Fast-time angular frequencies Lambda = (lambda_1, ..., lambda_n).
class Frequencies
{
  public:
    explicit Frequencies(std::vector<double> lambdas);

    std::size_t size() const { return lambdas_.size(); }
    double operator[](std::size_t k) const { return lambdas_[k]; }
    std::vector<double> const& values() const { return lambdas_; }

  private:
    std::vector<double> lambdas_;
};

/// Actions I_k = |a_k|^2 / 2, all nonnegative.
class ActionVector
{
  public:
    explicit ActionVector(std::vector<double> values);
    static ActionVector from_state(ComplexVec const& a);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    std::vector<double> const& values() const { return values_; }
    /// [I] = min_k I_k
    double min() const;

  private:
    std::vector<double> values_;
};

/// Angles on the torus, stored in [0, 2pi).
class RotationVector
{
  public:
    explicit RotationVector(std::vector<double> omegas);

    std::size_t size() const { return omegas_.size(); }
    double operator[](std::size_t k) const { return omegas_[k]; }
    std::vector<double> const& values() const { return omegas_; }

  private:
    std::vector<double> omegas_;
};

/// I(z) = |z|^2 / 2, the single place actions are computed from amplitudes.
inline double action_of(Complex z)
{
    return 0.5 * std::norm(z);
}

bool all_finite(ComplexVec const& v);

}  // namespace stochavg
