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

#include "array.hpp"

#include <cmath>

namespace isacbf
{
    void ArrayGeometry::validate() const
    {
        if (tx_rows < 1 || tx_cols < 1)
            throw Error(ErrorCode::invalid_argument, "Transmit array must have at least one element.");
        if (rx_rows < 1 || rx_cols < 1)
            throw Error(ErrorCode::invalid_argument, "Receive array must have at least one element.");
        if (!(spacing_wavelengths > 0.0) || !std::isfinite(spacing_wavelengths))
            throw Error(ErrorCode::invalid_argument, "Antenna spacing must be positive.");
        if (!(bs_height_m >= 0.0) || !std::isfinite(bs_height_m))
            throw Error(ErrorCode::invalid_argument, "BS height cannot be negative.");
    }

    namespace
    {
        struct Layout
        {
            int rows;
            int cols;
        };

        Layout layout_of(const ArrayGeometry &g, ArraySide side)
        {
            g.validate();
            if (side == ArraySide::tx)
                return {g.tx_rows, g.tx_cols};
            return {g.rx_rows, g.rx_cols};
        }

        // Fills the phase-rate c_i = d phase_i / d theta alongside the steering vector
        void evaluate(const ArrayGeometry &g, ArraySide side, double phi, double theta,
                      CVec *value, CVec *derivative)
        {
            const auto [rows, cols] = layout_of(g, side);
            const double k = kTwoPi * g.spacing_wavelengths * std::cos(phi);
            const double ux = k * std::cos(theta);
            const double uy = k * std::sin(theta);
            const double m0 = 0.5 * double(rows - 1);
            const double n0 = 0.5 * double(cols - 1);

            const int n = rows * cols;
            if (value)
                value->resize(n);
            if (derivative)
                derivative->resize(n);

            for (int m = 0; m < rows; ++m)
                for (int c = 0; c < cols; ++c)
                {
                    const double mm = double(m) - m0;
                    const double nn = double(c) - n0;
                    const cdouble e = std::polar(1.0, mm * ux + nn * uy);
                    const int idx = m * cols + c;
                    if (value)
                        (*value)[idx] = e;
                    if (derivative)
                        (*derivative)[idx] = cdouble(0.0, -mm * uy + nn * ux) * e;
                }
        }
    }

    CVec steering(const ArrayGeometry &geometry, ArraySide side, double phi, double theta)
    {
        CVec v;
        evaluate(geometry, side, phi, theta, &v, nullptr);
        return v;
    }

    CVec steering_derivative(const ArrayGeometry &geometry, ArraySide side, double phi, double theta)
    {
        CVec d;
        evaluate(geometry, side, phi, theta, nullptr, &d);
        return d;
    }

    SteeringSet steering_set(const ArrayGeometry &geometry, double phi, double theta)
    {
        SteeringSet s;
        evaluate(geometry, ArraySide::tx, phi, theta, &s.a, &s.a_dot);
        evaluate(geometry, ArraySide::rx, phi, theta, &s.b, &s.b_dot);
        return s;
    }

    RVec radiation_pattern(const ArrayGeometry &geometry, const CMat &w, double phi, const RVec &theta_grid)
    {
        const int n = geometry.n_tx();
        if (w.rows() != n || w.cols() != n)
            throw Error(ErrorCode::invalid_argument, "Covariance dimension does not match the transmit array.");

        const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
        if ((w - w.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw Error(ErrorCode::invalid_argument, "Covariance matrix is not Hermitian.");
        const CMat wh = hermitian_part(w);

        RVec p(theta_grid.size());
        for (Eigen::Index i = 0; i < theta_grid.size(); ++i)
        {
            const CVec a = steering(geometry, ArraySide::tx, phi, theta_grid[i]);
            p[i] = (a.adjoint() * wh * a)(0, 0).real();
        }
        return p;
    }
}
