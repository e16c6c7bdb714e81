#ifndef FKIT_LINALG_HPP
#define FKIT_LINALG_HPP

// Dense numerical kernels used by the samplers and the error-table analysis.
// Everything here is templated on the scalar type and takes Eigen expressions.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <fkit/error.hpp>

namespace fkit {

/// First n primes: 2, 3, 5, ...
inline std::vector<std::uint32_t> first_primes(std::size_t n)
{
    std::vector<std::uint32_t> primes;
    for (std::uint32_t c = 2; primes.size() < n; ++c) {
        bool prime = true;
        for (std::uint32_t p : primes) {
            if (p * p > c)
                break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime)
            primes.push_back(c);
    }
    return primes;
}

/// Digit reversal of `index` in `base`, mapped to [0, 1). The reversed digits
/// are accumulated as an integer and divided once, so the result is correctly
/// rounded while base^digits stays below 2^53.
template <typename Scalar = double>
Scalar radical_inverse(std::uint64_t index, std::uint32_t base)
{
    constexpr std::uint64_t limit = std::uint64_t{1} << 62;
    std::uint64_t reversed = 0;
    std::uint64_t denom = 1;
    while (index > 0 && denom <= limit / base) {
        reversed = reversed * base + index % base;
        denom *= base;
        index /= base;
    }
    return Scalar(reversed) / Scalar(denom);
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> halton_point(std::uint64_t index, const std::vector<std::uint32_t>& bases)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(static_cast<Eigen::Index>(bases.size()));
    for (std::size_t i = 0; i < bases.size(); ++i)
        x[static_cast<Eigen::Index>(i)] = radical_inverse<Scalar>(index, bases[i]);
    return x;
}

template <typename Scalar>
Scalar normal_pdf(Scalar z)
{
    return std::exp(Scalar(-0.5) * z * z) / std::sqrt(Scalar(2) * Scalar(M_PI));
}

template <typename Scalar>
Scalar normal_cdf(Scalar z)
{
    return Scalar(0.5) * std::erfc(-z / std::sqrt(Scalar(2)));
}

/// Expected improvement below `best` for a Gaussian prediction (minimization).
template <typename Scalar>
Scalar expected_improvement(Scalar mean, Scalar stddev, Scalar best)
{
    const Scalar gain = best - mean;
    if (!(stddev > Scalar(0)))
        return std::max(gain, Scalar(0));
    const Scalar z = gain / stddev;
    return gain * normal_cdf(z) + stddev * normal_pdf(z);
}

/// Squared-exponential kernel with per-dimension length scales.
template <typename DerivedA, typename DerivedB, typename DerivedL>
typename DerivedA::Scalar se_kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                                    const Eigen::MatrixBase<DerivedL>& length_scales,
                                    typename DerivedA::Scalar signal_variance)
{
    using Scalar = typename DerivedA::Scalar;
    const Scalar r2 = ((a - b).array() / length_scales.array()).square().sum();
    return signal_variance * std::exp(Scalar(-0.5) * r2);
}

/// Gaussian-process regression with a squared-exponential kernel and a zero
/// prior mean. Targets are divided by their root mean square internally;
/// predictions come back in the original units.
///
/// The observation-noise jitter starts at `jitter` and is multiplied by ten
/// until the Cholesky factorization succeeds or `max_jitter` is exceeded, in
/// which case fit() throws SingularKernel.
template <typename Scalar>
class GaussianProcess {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    GaussianProcess(Vector length_scales, Scalar jitter = Scalar(1e-6), Scalar max_jitter = Scalar(1e-2))
        : length_scales_(std::move(length_scales)), initial_jitter_(jitter), max_jitter_(max_jitter)
    {
    }

    /// Rows of `inputs` are training points.
    void fit(const Matrix& inputs, const Vector& targets)
    {
        const Eigen::Index n = inputs.rows();
        if (n == 0 || targets.size() != n)
            throw Error(ErrorKind::InvalidArgument, "GP needs matching, non-empty inputs and targets");
        inputs_ = inputs;
        const Scalar ms = targets.squaredNorm() / Scalar(n);
        y_scale_ = ms > Scalar(0) ? std::sqrt(ms) : Scalar(1);
        const Vector y = targets / y_scale_;

        Matrix k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j)
                k(i, j) = k(j, i) = se_kernel(inputs.row(i).transpose(), inputs.row(j).transpose(), length_scales_, Scalar(1));

        for (jitter_ = initial_jitter_; jitter_ <= max_jitter_ * Scalar(1.0000001); jitter_ *= Scalar(10)) {
            Matrix kj = k;
            kj.diagonal().array() += jitter_;
            llt_.compute(kj);
            if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > Scalar(0)) {
                alpha_ = llt_.solve(y);
                return;
            }
        }
        throw Error(ErrorKind::SingularKernel, "kernel matrix not positive definite even with maximal jitter");
    }

    template <typename Derived>
    Scalar mean(const Eigen::MatrixBase<Derived>& x) const
    {
        return y_scale_ * cross(x).dot(alpha_);
    }

    /// Posterior variance of the latent function (no observation noise).
    template <typename Derived>
    Scalar variance(const Eigen::MatrixBase<Derived>& x) const
    {
        const Vector ks = cross(x);
        const Vector v = llt_.matrixL().solve(ks);
        const Scalar var = Scalar(1) - v.squaredNorm();
        return std::max(var, Scalar(0)) * y_scale_ * y_scale_;
    }

    Scalar jitter() const { return jitter_; }
    Eigen::Index size() const { return inputs_.rows(); }

private:
    template <typename Derived>
    Vector cross(const Eigen::MatrixBase<Derived>& x) const
    {
        Vector ks(inputs_.rows());
        for (Eigen::Index i = 0; i < inputs_.rows(); ++i)
            ks[i] = se_kernel(inputs_.row(i).transpose(), x, length_scales_, Scalar(1));
        return ks;
    }

    Vector length_scales_;
    Scalar initial_jitter_;
    Scalar max_jitter_;
    Scalar jitter_ = 0;
    Matrix inputs_;
    Scalar y_scale_ = 1;
    Eigen::LLT<Matrix> llt_;
    Vector alpha_;
};

template <typename Scalar>
struct PrincipalComponents {
    /// Rows are unit principal directions, by decreasing explained variance.
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> components;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> explained_variance;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
};

/// PCA of the rows of `data` via the eigen-decomposition of the sample
/// covariance (n - 1 denominator). Each direction is signed so that its
/// largest-magnitude entry is positive.
template <typename Derived>
PrincipalComponents<typename Derived::Scalar> principal_components(const Eigen::MatrixBase<Derived>& data)
{
    using Scalar = typename Derived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = data.rows();
    if (n < 2)
        throw Error(ErrorKind::InsufficientRows, "PCA needs at least two rows");
    if (data.cols() < 1)
        throw Error(ErrorKind::NoOrderedColumns, "PCA needs at least one column");

    PrincipalComponents<Scalar> pc;
    pc.mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - pc.mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / Scalar(n - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Eigen::Index d = cov.rows();
    pc.components.resize(d, d);
    pc.explained_variance.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::Index src = d - 1 - k; // solver sorts ascending
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = eig.eigenvectors().col(src);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < Scalar(0))
            v = -v;
        pc.components.row(k) = v.transpose();
        pc.explained_variance[k] = std::max(eig.eigenvalues()[src], Scalar(0));
    }
    return pc;
}

} // namespace fkit

#endif
