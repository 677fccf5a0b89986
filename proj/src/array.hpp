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

#ifndef ISACBF_ARRAY_HPP
#define ISACBF_ARRAY_HPP

#include "common.hpp"

namespace isacbf
{
    // Co-located transmit and receive uniform planar arrays in the horizontal plane.
    struct ArrayGeometry
    {
        int tx_rows = 3;
        int tx_cols = 3;
        int rx_rows = 3;
        int rx_cols = 4;
        double spacing_wavelengths = 0.5;
        double bs_height_m = 10.0;

        int n_tx() const { return tx_rows * tx_cols; }
        int n_rx() const { return rx_rows * rx_cols; }

        // Throws Error(invalid_argument) on bad dimensions or spacing
        void validate() const;
    };

    enum class ArraySide
    {
        tx,
        rx
    };

    // Steering vector a(phi, theta) or b(phi, theta).
    //
    // Element (m, n), row-major, has phase 2*pi*d*(m' cos(phi) cos(theta) + n' cos(phi) sin(theta))
    // where m' = m - (rows-1)/2 and n' = n - (cols-1)/2, i.e. the phase reference is the array
    // centroid. phi is the elevation below the horizontal plane, theta the azimuth.
    CVec steering(const ArrayGeometry &geometry, ArraySide side, double phi, double theta);

    // Analytic derivative of steering() with respect to theta.
    CVec steering_derivative(const ArrayGeometry &geometry, ArraySide side, double phi, double theta);

    /// Steering vectors and their azimuth derivatives for both arrays at one direction.
    struct SteeringSet
    {
        CVec a;
        CVec a_dot;
        CVec b;
        CVec b_dot;
    };

    SteeringSet steering_set(const ArrayGeometry &geometry, double phi, double theta);

    // Radiation power pattern p(theta) = a^H W a on a grid of azimuths at fixed elevation.
    // W must be Hermitian within 1e-10 (relative to its largest entry); it is symmetrized.
    RVec radiation_pattern(const ArrayGeometry &geometry, const CMat &w, double phi, const RVec &theta_grid);
}

#endif
