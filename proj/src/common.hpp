// SPDX-License-Identifier: Apache-2.0
//
// isacbf - PCRB-optimal transmit beamforming for multi-user ISAC
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef ISACBF_COMMON_HPP
#define ISACBF_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isacbf
{
    using cdouble = std::complex<double>;
    using CVec = Eigen::VectorXcd;
    using CMat = Eigen::MatrixXcd;
    using RVec = Eigen::VectorXd;
    using RMat = Eigen::MatrixXd;

    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

    // Error categories surfaced through the C API as distinct status codes.
    enum class ErrorCode
    {
        invalid_argument = 1,
        parse = 2,
        io = 3,
        infeasible = 4,
        verification = 5,
        numerical = 6,
    };

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
        ErrorCode code() const noexcept { return code_; }

    private:
        ErrorCode code_;
    };

    // Hermitian part, removes round-off asymmetry.
    inline CMat hermitian_part(const CMat &m) { return 0.5 * (m + m.adjoint()); }

    // Re tr(A B), the real inner product used for Hermitian variables.
    inline double re_trace_product(const CMat &a, const CMat &b)
    {
        // tr(A B) = sum_ij A_ij B_ji
        return (a.array() * b.transpose().array()).sum().real();
    }

    inline cdouble trace_product(const CMat &a, const CMat &b)
    {
        return (a.array() * b.transpose().array()).sum();
    }

    inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
}

#endif
