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

#include "fim.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <iomanip>

namespace isacbf
{
    FisherMatrices build_fisher(const Scenario &scenario, const QuadratureGrid &grid)
    {
        const double kappa_max = scenario.prior.max_kappa();
        if (kappa_max > 0.0 && grid.size() > 0)
        {
            const double spacing = kTwoPi / double(grid.size());
            const double width = 1.0 / std::sqrt(kappa_max);
            if (spacing > 0.5 * width)
                throw Error(ErrorCode::invalid_argument, "Quadrature grid does not resolve the prior.");
            if (spacing > 0.1 * width)
                spdlog::warn("Quadrature spacing {:.3g} rad is coarse for kappa = {:.4g}", spacing, kappa_max);
        }

        const auto &g = scenario.geometry;
        const int nt = g.n_tx();
        const double nr = double(g.n_rx());
        const double phi = scenario.target_elevation();

        FisherMatrices fm;
        fm.A1 = CMat::Zero(nt, nt);
        fm.A2 = CMat::Zero(nt, nt);
        fm.A3 = CMat::Zero(nt, nt);
        fm.echo_gain = scenario.target.echo_gain;

        for (Eigen::Index i = 0; i < grid.size(); ++i)
        {
            const double theta = grid.nodes[i];
            const double w = grid.weights[i] * scenario.prior.pdf(theta);
            if (w == 0.0)
                continue;
            const SteeringSet s = steering_set(g, phi, theta);
            const double bdot2 = s.b_dot.squaredNorm();
            fm.A1.noalias() += (w * bdot2) * s.a * s.a.adjoint() + (w * nr) * s.a_dot * s.a_dot.adjoint();
            fm.A2.noalias() += (w * nr) * s.a_dot * s.a.adjoint();
            fm.A3.noalias() += (w * nr) * s.a * s.a.adjoint();
        }
        fm.A1 = hermitian_part(fm.A1);
        fm.A3 = hermitian_part(fm.A3);
        fm.j_prior = prior_fisher(scenario.prior, grid);
        return fm;
    }

    FisherMatrices build_fisher(const Scenario &scenario)
    {
        return build_fisher(scenario, make_grid(scenario.quadrature_points));
    }

    FisherMatrices build_point_fisher(const Scenario &scenario, double theta)
    {
        const auto &g = scenario.geometry;
        const double nr = double(g.n_rx());
        const SteeringSet s = steering_set(g, scenario.target_elevation(), theta);

        FisherMatrices fm;
        fm.A1 = hermitian_part(s.b_dot.squaredNorm() * s.a * s.a.adjoint() + nr * s.a_dot * s.a_dot.adjoint());
        fm.A2 = nr * s.a_dot * s.a.adjoint();
        fm.A3 = hermitian_part(nr * s.a * s.a.adjoint());
        fm.j_prior = 0.0;
        fm.echo_gain = scenario.target.echo_gain;
        return fm;
    }

    double effective_fisher(const FisherMatrices &fm, const CMat &rx)
    {
        const double a3 = re_trace_product(fm.A3, rx);
        const double scale = std::max(fm.A3.norm() * rx.norm(), 1e-300);
        if (!(a3 > 1e-14 * scale))
            throw Error(ErrorCode::numerical, "Degenerate illumination: tr(A3 R) is not positive.");
        const double a1 = re_trace_product(fm.A1, rx);
        const cdouble a2 = trace_product(fm.A2, rx);
        return a1 - std::norm(a2) / a3;
    }

    double pcrb_from_information(const FisherMatrices &fm, double t_eff)
    {
        const double info = fm.j_prior + fm.echo_gain * t_eff;
        if (!(info > 0.0))
            return 2.0;
        return 2.0 - 2.0 / std::sqrt(1.0 + 1.0 / info);
    }

    double pcrb_periodic(const FisherMatrices &fm, const CMat &rx)
    {
        return pcrb_from_information(fm, effective_fisher(fm, rx));
    }

    Eigen::Matrix2cd schur_block(const FisherMatrices &fm, const CMat &rx, double t)
    {
        const cdouble a2 = trace_product(fm.A2, rx);
        Eigen::Matrix2cd b;
        b(0, 0) = re_trace_product(fm.A1, rx) - t;
        b(0, 1) = a2;
        b(1, 0) = std::conj(a2);
        b(1, 1) = re_trace_product(fm.A3, rx);
        return b;
    }

    CMat d_matrix(const FisherMatrices &fm, cdouble z2)
    {
        CMat d = fm.A1 + z2 * fm.A2.adjoint() + std::conj(z2) * fm.A2 + std::norm(z2) * fm.A3;
        return hermitian_part(d);
    }

    CMat d_bar(const ArrayGeometry &geometry, double phi, double theta, cdouble z2)
    {
        const SteeringSet s = steering_set(geometry, phi, theta);
        const double nr = double(geometry.n_rx());

        CMat basis(s.a.size(), 2);
        basis.col(0) = s.a;
        basis.col(1) = s.a_dot;
        Eigen::Matrix2cd core;
        core(0, 0) = s.b_dot.squaredNorm() + std::norm(z2) * nr;
        core(0, 1) = z2 * nr;
        core(1, 0) = std::conj(z2) * nr;
        core(1, 1) = nr;
        return basis * core * basis.adjoint();
    }

    void dump_fisher(std::ostream &os, const FisherMatrices &fm)
    {
        auto put = [&os](const char *name, const CMat &m)
        {
            os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
            for (Eigen::Index r = 0; r < m.rows(); ++r)
            {
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                    os << (c ? " " : "") << m(r, c).real() << ' ' << m(r, c).imag();
                os << '\n';
            }
        };
        const auto flags = os.flags();
        const auto prec = os.precision();
        os << std::setprecision(17);
        put("A1", fm.A1);
        put("A2", fm.A2);
        put("A3", fm.A3);
        os << "j_prior " << fm.j_prior << '\n';
        os << "echo_gain " << fm.echo_gain << '\n';
        os.flags(flags);
        os.precision(prec);
    }
}
