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

#ifndef ISACBF_PRIOR_HPP
#define ISACBF_PRIOR_HPP

#include "common.hpp"

#include <vector>

namespace isacbf
{
    // Exponentially scaled modified Bessel function of the first kind, exp(-x) I_n(x), x >= 0.
    //
    // Evaluated from the integral representation (1/pi) int_0^pi exp(x (cos t - 1)) cos(n t) dt
    // with a trapezoidal rule. The integrand is smooth and periodic, so the rule converges
    // exponentially; the node count grows with sqrt(x) to resolve the peak at t = 0.
    // Arguments up to 15 use the power series instead.
    double bessel_i_scaled(int order, double x);

    struct VonMisesComponent
    {
        double weight = 1.0;
        double mean_rad = 0.0;
        double kappa = 0.0;
    };

    // Von-Mises mixture density of the target azimuth.
    class PriorModel
    {
    public:
        PriorModel() = default;
        explicit PriorModel(std::vector<VonMisesComponent> components);

        const std::vector<VonMisesComponent> &components() const { return components_; }
        size_t size() const { return components_.size(); }
        double max_kappa() const;

        double pdf(double theta) const;

        // d/dtheta ln p(theta)
        double log_pdf_derivative(double theta) const;

        // Rotates all component means by delta (wrapped to [-pi, pi)).
        PriorModel rotated(double delta) const;

    private:
        std::vector<VonMisesComponent> components_;
        std::vector<double> log_norm_; // -log(2 pi exp(-kappa) I0(kappa)) per component
    };

    // Maps theta onto [-pi, pi), the periodic extension used for the prior score.
    double wrap_angle(double theta);

    struct QuadratureGrid
    {
        RVec nodes;
        RVec weights;
        std::string rule;

        Eigen::Index size() const { return nodes.size(); }
    };

    // Uniform periodic trapezoidal rule on [-pi, pi), n >= 16.
    QuadratureGrid make_grid(int n);

    // E[(d ln p / d theta)^2] over the grid
    double prior_fisher(const PriorModel &prior, const QuadratureGrid &grid);

    // Grid argmax of the density; ties resolve to the smallest angle.
    double most_probable_angle(const PriorModel &prior, const QuadratureGrid &grid);
}

#endif
