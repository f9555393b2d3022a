// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace jsdm {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / pi; }
inline double db2lin(double db) { return std::pow(10.0, db / 10.0); }
inline double nats2bits(double nats) { return nats / std::numbers::ln2; }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments: out-of-range angles, mismatched shapes, non-Hermitian input.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

// The request is well formed but the geometry cannot satisfy it
// (e.g. not enough null-space dimensions for a block diagonalizer).
class Infeasible : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace jsdm
