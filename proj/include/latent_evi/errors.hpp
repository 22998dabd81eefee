#pragma once

#include <stdexcept>
#include <string>

namespace latent_evi {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad index, bad parameter, size mismatch).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The threshold order statistic is not strictly positive, so log-ratios are undefined.
class PointMassAtZero : public Error {
public:
    explicit PointMassAtZero(double threshold)
        : Error("threshold order statistic is not strictly positive (" + std::to_string(threshold) + ")"),
          threshold_(threshold) {}

    double threshold() const noexcept { return threshold_; }

private:
    double threshold_;
};

/// The tail log-moments do not identify the moment estimator.
class DegenerateTail : public Error {
public:
    using Error::Error;
};

/// The sample covariance is too close to singular to whiten.
class IllConditioned : public Error {
public:
    explicit IllConditioned(double eigenvalue_ratio)
        : Error("covariance is ill-conditioned: smallest/largest eigenvalue = " + std::to_string(eigenvalue_ratio)),
          ratio_(eigenvalue_ratio) {}

    double eigenvalue_ratio() const noexcept { return ratio_; }

private:
    double ratio_;
};

}  // namespace latent_evi
