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

#include "prior.hpp"

#include <algorithm>
#include <cmath>

namespace isacbf
{
    double bessel_i_scaled(int order, double x)
    {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::invalid_argument, "Bessel argument must be finite and non-negative.");
        if (order < 0)
            order = -order;

        // Small arguments: the quadrature cancels for n > 0, the power series does not.
        if (x <= 15.0)
        {
            const double q = 0.25 * x * x;
            double term = 1.0;
            for (int k = 1; k <= order; ++k)
                term *= 0.5 * x / double(k);
            double sum = term;
            for (int k = 1; k < 200 && term > 1e-18 * sum; ++k)
            {
                term *= q / (double(k) * double(k + order));
                sum += term;
            }
            return sum * std::exp(-x);
        }

        // Trapezoid over the full period [-pi, pi) of exp(x (cos t - 1)) cos(n t).
        // Aliasing error decays like I_{2N-n}(x)/I_n(x); N = 64 + 8 sqrt(x) + 2 n keeps
        // it far below machine precision for x up to several thousand.
        const int n_nodes = 64 + int(8.0 * std::sqrt(x)) + 2 * order;
        const double h = kTwoPi / double(n_nodes);
        double sum = 0.0;
        for (int i = 0; i < n_nodes; ++i)
        {
            const double t = -kPi + h * double(i);
            sum += std::exp(x * (std::cos(t) - 1.0)) * std::cos(double(order) * t);
        }
        return sum / double(n_nodes);
    }

    double wrap_angle(double theta)
    {
        return theta - kTwoPi * std::floor((theta + kPi) / kTwoPi);
    }

    PriorModel::PriorModel(std::vector<VonMisesComponent> components) : components_(std::move(components))
    {
        if (components_.empty())
            throw Error(ErrorCode::invalid_argument, "Prior needs at least one von-Mises component.");

        double total = 0.0;
        for (const auto &c : components_)
        {
            if (!(c.weight > 0.0 && c.weight <= 1.0))
                throw Error(ErrorCode::invalid_argument, "Mixture weights must lie in (0, 1].");
            if (!(c.kappa >= 0.0) || !std::isfinite(c.kappa))
                throw Error(ErrorCode::invalid_argument, "Concentration must be finite and non-negative.");
            if (!std::isfinite(c.mean_rad))
                throw Error(ErrorCode::invalid_argument, "Component mean must be finite.");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw Error(ErrorCode::invalid_argument, "Mixture weights must sum to one.");

        log_norm_.reserve(components_.size());
        for (const auto &c : components_)
            log_norm_.push_back(-std::log(kTwoPi * bessel_i_scaled(0, c.kappa)));
    }

    double PriorModel::max_kappa() const
    {
        double k = 0.0;
        for (const auto &c : components_)
            k = std::max(k, c.kappa);
        return k;
    }

    // Component density exp(kappa (cos(theta - mu) - 1)) / (2 pi I0e(kappa)); never overflows.
    double PriorModel::pdf(double theta) const
    {
        double p = 0.0;
        for (size_t m = 0; m < components_.size(); ++m)
        {
            const auto &c = components_[m];
            p += c.weight * std::exp(c.kappa * (std::cos(theta - c.mean_rad) - 1.0) + log_norm_[m]);
        }
        return p;
    }

    double PriorModel::log_pdf_derivative(double theta) const
    {
        theta = wrap_angle(theta);

        // Normalize by the dominant log-density to keep the ratio finite far from all modes.
        double max_log = -INFINITY;
        std::vector<double> logs(components_.size());
        for (size_t m = 0; m < components_.size(); ++m)
        {
            const auto &c = components_[m];
            logs[m] = std::log(c.weight) + c.kappa * (std::cos(theta - c.mean_rad) - 1.0) + log_norm_[m];
            max_log = std::max(max_log, logs[m]);
        }
        double num = 0.0, den = 0.0;
        for (size_t m = 0; m < components_.size(); ++m)
        {
            const auto &c = components_[m];
            const double w = std::exp(logs[m] - max_log);
            num += w * (-c.kappa * std::sin(theta - c.mean_rad));
            den += w;
        }
        return num / den;
    }

    PriorModel PriorModel::rotated(double delta) const
    {
        auto comps = components_;
        for (auto &c : comps)
            c.mean_rad = wrap_angle(c.mean_rad + delta);
        return PriorModel(std::move(comps));
    }

    QuadratureGrid make_grid(int n)
    {
        if (n < 16)
            throw Error(ErrorCode::invalid_argument, "Quadrature grid needs at least 16 nodes.");
        QuadratureGrid g;
        g.nodes.resize(n);
        g.weights.setConstant(n, kTwoPi / double(n));
        for (int i = 0; i < n; ++i)
            g.nodes[i] = -kPi + kTwoPi * double(i) / double(n);
        g.rule = "periodic-trapezoid";
        return g;
    }

    double prior_fisher(const PriorModel &prior, const QuadratureGrid &grid)
    {
        double j = 0.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i)
        {
            const double s = prior.log_pdf_derivative(grid.nodes[i]);
            j += grid.weights[i] * s * s * prior.pdf(grid.nodes[i]);
        }
        return j;
    }

    double most_probable_angle(const PriorModel &prior, const QuadratureGrid &grid)
    {
        double best = -1.0;
        double arg = 0.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i)
        {
            const double p = prior.pdf(grid.nodes[i]);
            if (p > best)
            {
                best = p;
                arg = grid.nodes[i];
            }
        }
        return arg;
    }
}
