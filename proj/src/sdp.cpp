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

#include "sdp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace isacbf::sdp
{
    const char *to_string(SdpStatus status)
    {
        switch (status)
        {
        case SdpStatus::optimal:
            return "optimal";
        case SdpStatus::primal_infeasible:
            return "primal_infeasible";
        case SdpStatus::dual_infeasible:
            return "dual_infeasible";
        case SdpStatus::max_iterations:
            return "max_iterations";
        case SdpStatus::numerical_error:
            return "numerical_error";
        }
        return "unknown";
    }

    RMat real_embedding(const CMat &h)
    {
        if (h.rows() != h.cols())
            throw Error(ErrorCode::invalid_argument, "Real embedding needs a square matrix.");
        const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
        if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw Error(ErrorCode::invalid_argument, "Real embedding needs a Hermitian matrix.");
        const Eigen::Index n = h.rows();
        RMat m(2 * n, 2 * n);
        m.topLeftCorner(n, n) = h.real();
        m.topRightCorner(n, n) = -h.imag();
        m.bottomLeftCorner(n, n) = h.imag();
        m.bottomRightCorner(n, n) = h.real();
        return m;
    }

    CMat real_unembedding(const RMat &m)
    {
        if (m.rows() != m.cols() || m.rows() % 2 != 0)
            throw Error(ErrorCode::invalid_argument, "Real unembedding needs an even square matrix.");
        const Eigen::Index n = m.rows() / 2;
        const RMat re = 0.5 * (m.topLeftCorner(n, n) + m.bottomRightCorner(n, n));
        const RMat im = 0.5 * (m.bottomLeftCorner(n, n) - m.topRightCorner(n, n));
        CMat h(n, n);
        h.real() = re;
        h.imag() = im;
        return h;
    }

    namespace
    {
        bool has(const std::vector<CMat> &coef, size_t j) { return j < coef.size() && coef[j].size() > 0; }

        void check_affine(const std::vector<CMat> &coef, const std::vector<int> &sizes, const char *what)
        {
            if (coef.size() > sizes.size())
                throw Error(ErrorCode::invalid_argument, std::string(what) + ": too many block coefficients.");
            for (size_t j = 0; j < coef.size(); ++j)
                if (coef[j].size() > 0 && (coef[j].rows() != sizes[j] || coef[j].cols() != sizes[j]))
                    throw Error(ErrorCode::invalid_argument, std::string(what) + ": coefficient size mismatch.");
        }

        void check_hermitian(const std::vector<CMat> &coef, const char *what)
        {
            for (const auto &c : coef)
                if (c.size() > 0)
                {
                    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
                    if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                        throw Error(ErrorCode::invalid_argument, std::string(what) + ": coefficient is not Hermitian.");
                }
        }
    }

    void SdpProblem::validate() const
    {
        for (int n : block_sizes)
            if (n < 1)
                throw Error(ErrorCode::invalid_argument, "SDP blocks must have positive size.");
        check_affine(objective.block_coef, block_sizes, "objective");
        check_hermitian(objective.block_coef, "objective");
        for (const auto &g : inequalities)
        {
            check_affine(g.block_coef, block_sizes, "inequality");
            check_hermitian(g.block_coef, "inequality");
        }
        for (const auto &h : equalities)
        {
            check_affine(h.block_coef, block_sizes, "equality");
            check_hermitian(h.block_coef, "equality");
        }
        if (lmi)
        {
            check_affine(lmi->f11.block_coef, block_sizes, "LMI (1,1)");
            check_affine(lmi->f12.block_coef, block_sizes, "LMI (1,2)");
            check_affine(lmi->f22.block_coef, block_sizes, "LMI (2,2)");
            check_hermitian(lmi->f11.block_coef, "LMI (1,1)");
            check_hermitian(lmi->f22.block_coef, "LMI (2,2)");
        }
        if (!has_t)
        {
            bool uses_t = objective.t_coef != 0.0;
            for (const auto &g : inequalities)
                uses_t = uses_t || g.t_coef != 0.0;
            for (const auto &h : equalities)
                uses_t = uses_t || h.t_coef != 0.0;
            if (lmi)
                uses_t = uses_t || lmi->f11.t_coef != 0.0 || lmi->f12.t_coef != 0.0 || lmi->f22.t_coef != 0.0;
            if (uses_t)
                throw Error(ErrorCode::invalid_argument, "Problem references t but declares no scalar variable.");
        }
    }

    double evaluate(const AffineReal &f, const std::vector<CMat> &blocks, double t)
    {
        double v = f.constant + f.t_coef * t;
        for (size_t j = 0; j < blocks.size(); ++j)
            if (has(f.block_coef, j))
                v += re_trace_product(f.block_coef[j], blocks[j]);
        return v;
    }

    cdouble evaluate(const AffineComplex &f, const std::vector<CMat> &blocks, double t)
    {
        cdouble v = f.constant + f.t_coef * t;
        for (size_t j = 0; j < blocks.size(); ++j)
            if (has(f.block_coef, j))
                v += trace_product(f.block_coef[j], blocks[j]);
        return v;
    }

    Eigen::Matrix2cd evaluate(const Lmi2 &lmi, const std::vector<CMat> &blocks, double t)
    {
        Eigen::Matrix2cd f;
        f(0, 0) = evaluate(lmi.f11, blocks, t);
        f(0, 1) = evaluate(lmi.f12, blocks, t);
        f(1, 0) = std::conj(f(0, 1));
        f(1, 1) = evaluate(lmi.f22, blocks, t);
        return f;
    }

    namespace
    {
        // ------------------------------------------------------------------
        // Complex standard form:  min sum Re tr(C_j X_j) + c_lp' x + c_t t
        //                         s.t. sum Re tr(H_rj X_j) + a_r' x + t_r t = rhs_r
        // Blocks: user blocks, then the 2x2 LMI slack Y when present. x are LP slacks.
        // ------------------------------------------------------------------
        struct Row
        {
            std::vector<CMat> h;
            RVec lp;
            double t = 0.0;
            double rhs = 0.0;
        };

        struct ComplexForm
        {
            std::vector<int> sizes;
            int n_lp = 0;
            std::vector<CMat> cost;
            RVec cost_lp;
            double cost_t = 0.0;
            double cost_const = 0.0;
            std::vector<Row> rows;

            int ineq_begin = 0, eq_begin = 0, lmi_begin = -1;
            int y_block = -1;
            int pivot = -1; // row used to eliminate t
        };

        Row make_row(const ComplexForm &cf)
        {
            Row r;
            r.h.resize(cf.sizes.size());
            r.lp = RVec::Zero(cf.n_lp);
            return r;
        }

        void add_coef(Row &r, const std::vector<CMat> &coef)
        {
            for (size_t j = 0; j < coef.size(); ++j)
                if (coef[j].size() > 0)
                {
                    const CMat hc = hermitian_part(coef[j]);
                    if (r.h[j].size() == 0)
                        r.h[j] = hc;
                    else
                        r.h[j] += hc;
                }
        }

        CMat unit(int n, int i, int k, cdouble v)
        {
            CMat e = CMat::Zero(n, n);
            e(i, k) = v;
            return e;
        }

        ComplexForm to_complex_form(const SdpProblem &p)
        {
            ComplexForm cf;
            cf.sizes = p.block_sizes;
            if (p.lmi)
            {
                cf.y_block = int(cf.sizes.size());
                cf.sizes.push_back(2);
            }
            cf.n_lp = int(p.inequalities.size());

            cf.cost.resize(cf.sizes.size());
            for (size_t j = 0; j < p.objective.block_coef.size(); ++j)
                if (p.objective.block_coef[j].size() > 0)
                    cf.cost[j] = -hermitian_part(p.objective.block_coef[j]);
            cf.cost_lp = RVec::Zero(cf.n_lp);
            cf.cost_t = -p.objective.t_coef;
            cf.cost_const = -p.objective.constant;

            cf.ineq_begin = 0;
            for (size_t i = 0; i < p.inequalities.size(); ++i)
            {
                const auto &g = p.inequalities[i];
                Row r = make_row(cf);
                add_coef(r, g.block_coef);
                r.lp[Eigen::Index(i)] = -1.0;
                r.t = g.t_coef;
                r.rhs = -g.constant;
                cf.rows.push_back(std::move(r));
            }
            cf.eq_begin = int(cf.rows.size());
            for (const auto &h : p.equalities)
            {
                Row r = make_row(cf);
                add_coef(r, h.block_coef);
                r.t = h.t_coef;
                r.rhs = -h.constant;
                cf.rows.push_back(std::move(r));
            }
            if (p.lmi)
            {
                const int yb = cf.y_block;
                cf.lmi_begin = int(cf.rows.size());
                const auto &l = *p.lmi;

                Row r11 = make_row(cf);
                add_coef(r11, l.f11.block_coef);
                r11.h[yb] = -unit(2, 0, 0, 1.0);
                r11.t = l.f11.t_coef;
                r11.rhs = -l.f11.constant;

                // Re f12 = Re tr(C X), Im f12 = Re tr(-j C X); Y12 = tr(E21 Y)
                std::vector<CMat> re_coef(l.f12.block_coef.size()), im_coef(l.f12.block_coef.size());
                for (size_t j = 0; j < l.f12.block_coef.size(); ++j)
                    if (l.f12.block_coef[j].size() > 0)
                    {
                        re_coef[j] = l.f12.block_coef[j];
                        im_coef[j] = cdouble(0.0, -1.0) * l.f12.block_coef[j];
                    }
                Row rre = make_row(cf);
                add_coef(rre, re_coef);
                rre.h[yb] = -hermitian_part(unit(2, 1, 0, 1.0));
                rre.t = l.f12.t_coef.real();
                rre.rhs = -l.f12.constant.real();

                Row rim = make_row(cf);
                add_coef(rim, im_coef);
                rim.h[yb] = -hermitian_part(unit(2, 1, 0, cdouble(0.0, -1.0)));
                rim.t = l.f12.t_coef.imag();
                rim.rhs = -l.f12.constant.imag();

                Row r22 = make_row(cf);
                add_coef(r22, l.f22.block_coef);
                r22.h[yb] = -unit(2, 1, 1, 1.0);
                r22.t = l.f22.t_coef;
                r22.rhs = -l.f22.constant;

                cf.rows.push_back(std::move(r11));
                cf.rows.push_back(std::move(rre));
                cf.rows.push_back(std::move(rim));
                cf.rows.push_back(std::move(r22));
            }
            return cf;
        }

        // Substitutes t from the pivot row into every other row and the cost.
        ComplexForm eliminate_t(const ComplexForm &cf)
        {
            int pivot = -1;
            double best = 0.0;
            for (size_t r = 0; r < cf.rows.size(); ++r)
                if (std::abs(cf.rows[r].t) > best)
                {
                    best = std::abs(cf.rows[r].t);
                    pivot = int(r);
                }
            if (pivot < 0)
            {
                if (cf.cost_t != 0.0)
                    throw Error(ErrorCode::invalid_argument, "Objective depends on t but no constraint bounds it.");
                ComplexForm out = cf;
                out.pivot = -1;
                return out;
            }

            ComplexForm out = cf;
            out.pivot = pivot;
            const Row &pr = cf.rows[size_t(pivot)];
            auto axpy = [&](std::vector<CMat> &h, RVec &lp, double &rhs, double factor)
            {
                for (size_t j = 0; j < h.size(); ++j)
                    if (pr.h[j].size() > 0)
                    {
                        if (h[j].size() == 0)
                            h[j] = CMat::Zero(pr.h[j].rows(), pr.h[j].cols());
                        h[j] -= factor * pr.h[j];
                    }
                lp -= factor * pr.lp;
                rhs -= factor * pr.rhs;
            };
            for (size_t r = 0; r < out.rows.size(); ++r)
            {
                if (int(r) == pivot)
                    continue;
                Row &row = out.rows[r];
                if (row.t == 0.0)
                    continue;
                axpy(row.h, row.lp, row.rhs, row.t / pr.t);
                row.t = 0.0;
            }
            if (cf.cost_t != 0.0)
            {
                double neg_rhs = 0.0; // cost constant gains +cost_t * rhs / t_p
                axpy(out.cost, out.cost_lp, neg_rhs, cf.cost_t / pr.t);
                out.cost_const -= neg_rhs;
                out.cost_t = 0.0;
            }
            return out;
        }

        // ------------------------------------------------------------------
        // Real standard form:  min <C, X> s.t. <A_r, X> = b_r, X >= 0
        // ------------------------------------------------------------------
        struct RealForm
        {
            std::vector<int> n;
            int n_lp = 0;
            std::vector<RMat> C;
            RVec c_lp;
            std::vector<std::vector<RMat>> A; // [row][block], empty = zero
            RMat A_lp;                        // rows x n_lp
            RVec b;

            int m() const { return int(b.size()); }
        };

        RealForm to_real_form(const ComplexForm &cf, std::vector<int> &row_map)
        {
            RealForm rf;
            const size_t nb = cf.sizes.size();
            for (int s : cf.sizes)
                rf.n.push_back(2 * s);
            rf.n_lp = cf.n_lp;

            rf.C.resize(nb);
            for (size_t j = 0; j < nb; ++j)
                rf.C[j] = cf.cost[j].size() > 0 ? RMat(0.5 * real_embedding(hermitian_part(cf.cost[j])))
                                               : RMat::Zero(rf.n[j], rf.n[j]);
            rf.c_lp = cf.cost_lp;

            row_map.clear();
            for (size_t r = 0; r < cf.rows.size(); ++r)
                if (int(r) != cf.pivot)
                    row_map.push_back(int(r));

            const int m = int(row_map.size());
            rf.A.resize(size_t(m));
            rf.A_lp = RMat::Zero(m, rf.n_lp);
            rf.b.resize(m);
            for (int i = 0; i < m; ++i)
            {
                const Row &row = cf.rows[size_t(row_map[size_t(i)])];
                rf.A[size_t(i)].resize(nb);
                for (size_t j = 0; j < nb; ++j)
                    if (row.h[j].size() > 0 && row.h[j].cwiseAbs().maxCoeff() > 0.0)
                        rf.A[size_t(i)][j] = 0.5 * real_embedding(hermitian_part(row.h[j]));
                if (rf.n_lp > 0)
                    rf.A_lp.row(i) = row.lp.transpose();
                rf.b[i] = row.rhs;
            }
            return rf;
        }

        // Projection onto the image of the real embedding
        RMat project_embedded(const RMat &m)
        {
            const Eigen::Index n = m.rows() / 2;
            const RMat s = 0.5 * (m + m.transpose());
            const RMat a = 0.5 * (s.topLeftCorner(n, n) + s.bottomRightCorner(n, n));
            const RMat q = 0.5 * (s.topRightCorner(n, n) - s.bottomLeftCorner(n, n));
            RMat out(2 * n, 2 * n);
            out.topLeftCorner(n, n) = a;
            out.bottomRightCorner(n, n) = a;
            out.topRightCorner(n, n) = q;
            out.bottomLeftCorner(n, n) = -q;
            return out;
        }

        double inner(const RMat &a, const RMat &b) { return (a.array() * b.array()).sum(); }

        struct Point
        {
            std::vector<RMat> X;
            RVec x;
            RVec y;
            std::vector<RMat> S;
            RVec s;
        };

        // Largest step along d keeping M + alpha d PSD (capped at 1e30)
        double max_step(const RMat &m, const RMat &d)
        {
            Eigen::GeneralizedSelfAdjointEigenSolver<RMat> es(d, m, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
            if (es.info() != Eigen::Success)
                return 0.0;
            const double lmin = es.eigenvalues().minCoeff();
            return lmin >= 0.0 ? 1e30 : -1.0 / lmin;
        }

        double max_step_lp(const RVec &v, const RVec &d)
        {
            double a = 1e30;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (d[i] < 0.0)
                    a = std::min(a, -v[i] / d[i]);
            return a;
        }

        class Ipm
        {
        public:
            Ipm(const RealForm &rf, const SdpOptions &opt) : rf_(rf), opt_(opt) {}

            struct Result
            {
                SdpStatus status;
                Point point;
                double pobj, dobj, pinf, dinf, gap;
                int iterations;
            };

            Result run();

        private:
            RVec apply_A(const std::vector<RMat> &X, const RVec &x) const
            {
                RVec v = RVec::Zero(rf_.m());
                for (int r = 0; r < rf_.m(); ++r)
                {
                    double s = 0.0;
                    for (size_t j = 0; j < X.size(); ++j)
                        if (rf_.A[size_t(r)][j].size() > 0)
                            s += inner(rf_.A[size_t(r)][j], X[j]);
                    v[r] = s;
                }
                if (rf_.n_lp > 0)
                    v += rf_.A_lp * x;
                return v;
            }

            void apply_AT(const RVec &y, std::vector<RMat> &out, RVec &out_lp) const
            {
                out.resize(rf_.n.size());
                for (size_t j = 0; j < rf_.n.size(); ++j)
                    out[j] = RMat::Zero(rf_.n[j], rf_.n[j]);
                for (int r = 0; r < rf_.m(); ++r)
                    for (size_t j = 0; j < rf_.n.size(); ++j)
                        if (rf_.A[size_t(r)][j].size() > 0)
                            out[j] += y[r] * rf_.A[size_t(r)][j];
                out_lp = rf_.n_lp > 0 ? RVec(rf_.A_lp.transpose() * y) : RVec::Zero(0);
            }

            const RealForm &rf_;
            const SdpOptions &opt_;
        };

        Ipm::Result Ipm::run()
        {
            const size_t nb = rf_.n.size();
            const int m = rf_.m();
            int n_total = rf_.n_lp;
            for (int n : rf_.n)
                n_total += n;

            // Infeasible starting point, scaled to the data
            Point pt;
            pt.X.resize(nb);
            pt.S.resize(nb);
            for (size_t j = 0; j < nb; ++j)
            {
                const double n = double(rf_.n[j]);
                double xi = std::max(10.0, std::sqrt(n));
                double eta = std::max({10.0, std::sqrt(n), rf_.C[j].norm()});
                for (int r = 0; r < m; ++r)
                    if (rf_.A[size_t(r)][j].size() > 0)
                    {
                        const double an = rf_.A[size_t(r)][j].norm();
                        xi = std::max(xi, n * (1.0 + std::abs(rf_.b[r])) / (1.0 + an));
                        eta = std::max(eta, an);
                    }
                pt.X[j] = xi * RMat::Identity(rf_.n[j], rf_.n[j]);
                pt.S[j] = eta * RMat::Identity(rf_.n[j], rf_.n[j]);
            }
            {
                double xi = 10.0, eta = std::max(10.0, rf_.c_lp.size() ? rf_.c_lp.cwiseAbs().maxCoeff() : 0.0);
                for (int r = 0; r < m; ++r)
                    if (rf_.n_lp > 0)
                    {
                        const double an = rf_.A_lp.row(r).norm();
                        xi = std::max(xi, (1.0 + std::abs(rf_.b[r])) / (1.0 + an));
                        eta = std::max(eta, an);
                    }
                pt.x = RVec::Constant(rf_.n_lp, xi);
                pt.s = RVec::Constant(rf_.n_lp, eta);
            }
            pt.y = RVec::Zero(m);

            double norm_c = rf_.c_lp.squaredNorm();
            for (const auto &c : rf_.C)
                norm_c += c.squaredNorm();
            norm_c = std::sqrt(norm_c);
            const double norm_b = rf_.b.norm();

            Result res{SdpStatus::max_iterations, pt, 0, 0, 0, 0, 0, 0};
            int stall = 0;

            for (int it = 0; it <= opt_.max_iterations; ++it)
            {
                // Residuals and stopping tests
                const RVec rp = rf_.b - apply_A(pt.X, pt.x);
                std::vector<RMat> aty;
                RVec aty_lp;
                apply_AT(pt.y, aty, aty_lp);
                std::vector<RMat> rd(nb);
                double rd_norm2 = 0.0, pobj = 0.0, xs = 0.0;
                for (size_t j = 0; j < nb; ++j)
                {
                    rd[j] = rf_.C[j] - aty[j] - pt.S[j];
                    rd_norm2 += rd[j].squaredNorm();
                    pobj += inner(rf_.C[j], pt.X[j]);
                    xs += inner(pt.X[j], pt.S[j]);
                }
                RVec rd_lp = rf_.c_lp - aty_lp - pt.s;
                rd_norm2 += rd_lp.squaredNorm();
                pobj += rf_.c_lp.dot(pt.x);
                xs += pt.x.dot(pt.s);
                const double dobj = rf_.b.dot(pt.y);

                const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
                const double gap = std::max(std::abs(pobj - dobj), xs) / denom;
                const double pinf = rp.norm() / (1.0 + norm_b);
                const double dinf = std::sqrt(rd_norm2) / (1.0 + norm_c);

                res = Result{SdpStatus::max_iterations, pt, pobj, dobj, pinf, dinf, gap, it};
                spdlog::debug("sdp it {:3d}  pobj {: .10e}  dobj {: .10e}  gap {:.2e}  pinf {:.2e}  dinf {:.2e}",
                              it, pobj, dobj, gap, pinf, dinf);

                if (gap <= opt_.tol && pinf <= opt_.tol && dinf <= opt_.tol)
                {
                    res.status = SdpStatus::optimal;
                    return res;
                }
                // Diverging objectives; residuals are judged relative to the iterate size
                double x_norm2 = pt.x.squaredNorm(), s_norm2 = pt.s.squaredNorm();
                for (size_t j = 0; j < nb; ++j)
                {
                    x_norm2 += pt.X[j].squaredNorm();
                    s_norm2 += pt.S[j].squaredNorm();
                }
                const double x_norm = std::sqrt(x_norm2);
                const double ys_norm = std::sqrt(s_norm2 + pt.y.squaredNorm());
                if (dobj > 1e10 * (1.0 + norm_c) && (dinf < 1e-6 || std::sqrt(rd_norm2) < 1e-8 * ys_norm))
                {
                    res.status = SdpStatus::primal_infeasible;
                    return res;
                }
                if (-pobj > 1e10 * (1.0 + norm_b) && (pinf < 1e-6 || rp.norm() < 1e-8 * x_norm))
                {
                    res.status = SdpStatus::dual_infeasible;
                    return res;
                }
                if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(gap))
                {
                    res.status = SdpStatus::numerical_error;
                    return res;
                }
                if (it == opt_.max_iterations)
                    break;

                const double mu = xs / double(n_total);

                // Schur complement of the HKM direction
                std::vector<RMat> sinv(nb);
                for (size_t j = 0; j < nb; ++j)
                {
                    Eigen::LLT<RMat> llt(pt.S[j]);
                    if (llt.info() != Eigen::Success)
                    {
                        res.status = SdpStatus::numerical_error;
                        return res;
                    }
                    sinv[j] = llt.solve(RMat::Identity(rf_.n[j], rf_.n[j]));
                    sinv[j] = 0.5 * (sinv[j] + sinv[j].transpose());
                }
                RMat M = RMat::Zero(m, m);
                for (size_t j = 0; j < nb; ++j)
                    for (int c = 0; c < m; ++c)
                    {
                        if (rf_.A[size_t(c)][j].size() == 0)
                            continue;
                        const RMat g = pt.X[j] * rf_.A[size_t(c)][j] * sinv[j];
                        for (int r = 0; r < m; ++r)
                            if (rf_.A[size_t(r)][j].size() > 0)
                                M(r, c) += inner(rf_.A[size_t(r)][j], g);
                    }
                if (rf_.n_lp > 0)
                    M += rf_.A_lp * (pt.x.array() / pt.s.array()).matrix().asDiagonal() * rf_.A_lp.transpose();
                M = 0.5 * (M + M.transpose());

                Eigen::LDLT<RMat> schur(M);
                if (schur.info() != Eigen::Success)
                {
                    res.status = SdpStatus::numerical_error;
                    return res;
                }

                // X Rd S^-1 contributions are shared by predictor and corrector
                std::vector<RMat> xrds(nb);
                for (size_t j = 0; j < nb; ++j)
                    xrds[j] = pt.X[j] * rd[j] * sinv[j];
                const RVec xrds_lp = (pt.x.array() * rd_lp.array() / pt.s.array()).matrix();

                struct Dir
                {
                    std::vector<RMat> dX, dS;
                    RVec dx, ds, dy;
                };

                auto direction = [&](double target, const Dir *pred)
                {
                    Dir d;
                    std::vector<RMat> k(nb);
                    for (size_t j = 0; j < nb; ++j)
                    {
                        k[j] = target * sinv[j] - pt.X[j];
                        if (pred)
                            k[j] -= pred->dX[j] * pred->dS[j] * sinv[j];
                    }
                    RVec k_lp = (target / pt.s.array()).matrix() - pt.x;
                    if (pred && rf_.n_lp > 0)
                        k_lp -= (pred->dx.array() * pred->ds.array() / pt.s.array()).matrix();

                    const RVec rhs = rp - apply_A(k, k_lp) + apply_A(xrds, xrds_lp);
                    d.dy = schur.solve(rhs);

                    std::vector<RMat> atdy;
                    RVec atdy_lp;
                    apply_AT(d.dy, atdy, atdy_lp);
                    d.dX.resize(nb);
                    d.dS.resize(nb);
                    for (size_t j = 0; j < nb; ++j)
                    {
                        d.dS[j] = project_embedded(rd[j] - atdy[j]);
                        const RMat dx = k[j] - pt.X[j] * d.dS[j] * sinv[j];
                        d.dX[j] = project_embedded(dx);
                    }
                    d.ds = rd_lp - atdy_lp;
                    d.dx = k_lp - (pt.x.array() * d.ds.array() / pt.s.array()).matrix();
                    return d;
                };

                auto steps = [&](const Dir &d)
                {
                    double ap = 1e30, ad = 1e30;
                    for (size_t j = 0; j < nb; ++j)
                    {
                        ap = std::min(ap, max_step(pt.X[j], d.dX[j]));
                        ad = std::min(ad, max_step(pt.S[j], d.dS[j]));
                    }
                    ap = std::min(ap, max_step_lp(pt.x, d.dx));
                    ad = std::min(ad, max_step_lp(pt.s, d.ds));
                    return std::pair{ap, ad};
                };

                // Predictor
                const Dir pred = direction(0.0, nullptr);
                auto [ap_a, ad_a] = steps(pred);
                ap_a = std::min(1.0, ap_a);
                ad_a = std::min(1.0, ad_a);
                double xs_aff = 0.0;
                for (size_t j = 0; j < nb; ++j)
                    xs_aff += inner(pt.X[j] + ap_a * pred.dX[j], pt.S[j] + ad_a * pred.dS[j]);
                xs_aff += (pt.x + ap_a * pred.dx).dot(pt.s + ad_a * pred.ds);
                const double ratio = std::clamp(xs_aff / xs, 0.0, 1.0);
                const double sigma = std::pow(ratio, 3.0);

                // Corrector
                const Dir corr = direction(sigma * mu, &pred);
                auto [ap, ad] = steps(corr);
                const double tau = 0.98;
                ap = std::min(1.0, tau * ap);
                ad = std::min(1.0, tau * ad);

                for (size_t j = 0; j < nb; ++j)
                {
                    pt.X[j] = project_embedded(pt.X[j] + ap * corr.dX[j]);
                    pt.S[j] = project_embedded(pt.S[j] + ad * corr.dS[j]);
                }
                pt.x += ap * corr.dx;
                pt.s += ad * corr.ds;
                pt.y += ad * corr.dy;

                if (ap < 1e-9 && ad < 1e-9)
                {
                    if (++stall >= 3)
                    {
                        res.status = SdpStatus::numerical_error;
                        return res;
                    }
                }
                else
                    stall = 0;
            }
            return res;
        }
    }

    SdpSolution solve(const SdpProblem &problem, const SdpOptions &options)
    {
        problem.validate();

        const ComplexForm raw = to_complex_form(problem);
        const ComplexForm cf = problem.has_t ? eliminate_t(raw) : raw;
        std::vector<int> row_map;
        RealForm rf = to_real_form(cf, row_map);

        // Row and cost equilibration
        const int m = rf.m();
        RVec row_scale = RVec::Ones(m);
        for (int r = 0; r < m; ++r)
        {
            double s = rf.n_lp > 0 ? rf.A_lp.row(r).squaredNorm() : 0.0;
            for (const auto &a : rf.A[size_t(r)])
                if (a.size() > 0)
                    s += a.squaredNorm();
            s = std::sqrt(s);
            if (s > 0.0)
            {
                row_scale[r] = s;
                for (auto &a : rf.A[size_t(r)])
                    if (a.size() > 0)
                        a /= s;
                if (rf.n_lp > 0)
                    rf.A_lp.row(r) /= s;
                rf.b[r] /= s;
            }
        }
        double cost_scale = rf.c_lp.squaredNorm();
        for (const auto &c : rf.C)
            cost_scale += c.squaredNorm();
        cost_scale = std::max(std::sqrt(cost_scale), 1e-300);
        if (cost_scale > 0.0)
        {
            for (auto &c : rf.C)
                c /= cost_scale;
            rf.c_lp /= cost_scale;
        }

        Ipm ipm(rf, options);
        const Ipm::Result r = ipm.run();

        SdpSolution sol;
        sol.status = r.status;
        sol.iterations = r.iterations;
        sol.primal_residual = r.pinf;
        sol.dual_residual = r.dinf;
        sol.gap = r.gap;

        const int nb_user = problem.num_blocks();
        std::vector<CMat> all_blocks(cf.sizes.size());
        std::vector<CMat> all_duals(cf.sizes.size());
        for (size_t j = 0; j < cf.sizes.size(); ++j)
        {
            all_blocks[j] = hermitian_part(real_unembedding(r.point.X[j]));
            all_duals[j] = hermitian_part(2.0 * cost_scale * real_unembedding(r.point.S[j]));
        }
        sol.blocks.assign(all_blocks.begin(), all_blocks.begin() + nb_user);
        sol.block_duals.assign(all_duals.begin(), all_duals.begin() + nb_user);

        // Multipliers of the original (pre-elimination) rows
        RVec y_rows = RVec::Zero(Eigen::Index(raw.rows.size()));
        for (int i = 0; i < m; ++i)
            y_rows[row_map[size_t(i)]] = r.point.y[i] * cost_scale / row_scale[i];
        if (cf.pivot >= 0)
        {
            const Row &pr = raw.rows[size_t(cf.pivot)];
            double acc = raw.cost_t;
            for (size_t i = 0; i < raw.rows.size(); ++i)
                if (int(i) != cf.pivot)
                    acc -= y_rows[Eigen::Index(i)] * raw.rows[i].t;
            y_rows[cf.pivot] = acc / pr.t;

            double v = pr.rhs;
            for (size_t j = 0; j < pr.h.size(); ++j)
                if (pr.h[j].size() > 0)
                    v -= re_trace_product(pr.h[j], all_blocks[j]);
            v -= pr.lp.dot(r.point.x);
            sol.t = v / pr.t;
        }

        sol.ineq_duals = RVec(Eigen::Index(problem.inequalities.size()));
        for (size_t i = 0; i < problem.inequalities.size(); ++i)
            sol.ineq_duals[Eigen::Index(i)] = y_rows[raw.ineq_begin + Eigen::Index(i)];
        sol.eq_duals = RVec(Eigen::Index(problem.equalities.size()));
        for (size_t e = 0; e < problem.equalities.size(); ++e)
            sol.eq_duals[Eigen::Index(e)] = y_rows[raw.eq_begin + Eigen::Index(e)];
        if (problem.lmi)
        {
            // Z_B = -sum_r y_r H_rY over the four slack rows, i.e. the dual slack of Y
            // without its residual
            const Eigen::Index l0 = raw.lmi_begin;
            const cdouble z12(0.5 * y_rows[l0 + 1], 0.5 * y_rows[l0 + 2]);
            sol.z_lmi(0, 0) = y_rows[l0];
            sol.z_lmi(0, 1) = z12;
            sol.z_lmi(1, 0) = std::conj(z12);
            sol.z_lmi(1, 1) = y_rows[l0 + 3];
        }

        sol.objective = evaluate(problem.objective, sol.blocks, sol.t);
        // min-form dual value (scaled back) plus the constant moved out by the elimination
        sol.dual_objective = -(r.dobj * cost_scale + cf.cost_const);
        return sol;
    }

    KktResiduals kkt_residuals(const SdpProblem &problem, const SdpSolution &sol)
    {
        KktResiduals k;
        const int nb = problem.num_blocks();

        std::vector<CMat> grad(static_cast<size_t>(nb));
        for (int j = 0; j < nb; ++j)
        {
            grad[size_t(j)] = CMat::Zero(problem.block_sizes[size_t(j)], problem.block_sizes[size_t(j)]);
            if (has(problem.objective.block_coef, size_t(j)))
                grad[size_t(j)] += hermitian_part(problem.objective.block_coef[size_t(j)]);
        }
        double grad_t = problem.objective.t_coef;

        for (size_t i = 0; i < problem.inequalities.size(); ++i)
        {
            const auto &g = problem.inequalities[i];
            const double mu = sol.ineq_duals[Eigen::Index(i)];
            const double val = evaluate(g, sol.blocks, sol.t);
            k.ineq_slackness.push_back(std::abs(mu * val));
            k.max_ineq_violation = std::max(k.max_ineq_violation, -val);
            for (int j = 0; j < nb; ++j)
                if (has(g.block_coef, size_t(j)))
                    grad[size_t(j)] += mu * hermitian_part(g.block_coef[size_t(j)]);
            grad_t += mu * g.t_coef;
        }
        for (size_t e = 0; e < problem.equalities.size(); ++e)
        {
            const auto &h = problem.equalities[e];
            const double nu = sol.eq_duals[Eigen::Index(e)];
            k.max_eq_violation = std::max(k.max_eq_violation, std::abs(evaluate(h, sol.blocks, sol.t)));
            for (int j = 0; j < nb; ++j)
                if (has(h.block_coef, size_t(j)))
                    grad[size_t(j)] += nu * hermitian_part(h.block_coef[size_t(j)]);
            grad_t += nu * h.t_coef;
        }
        if (problem.lmi)
        {
            const auto &l = *problem.lmi;
            const Eigen::Matrix2cd f = evaluate(l, sol.blocks, sol.t);
            const Eigen::Matrix2cd &z = sol.z_lmi;
            k.lmi_slackness = std::abs((z * f).trace());
            k.lmi_min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd>(f).eigenvalues().minCoeff();
            k.z_lmi_determinant = (z(0, 0) * z(1, 1) - std::norm(z(0, 1))).real();
            const double z1 = z(0, 0).real(), z3 = z(1, 1).real();
            const cdouble z2 = z(0, 1);
            for (int j = 0; j < nb; ++j)
            {
                if (has(l.f11.block_coef, size_t(j)))
                    grad[size_t(j)] += z1 * hermitian_part(l.f11.block_coef[size_t(j)]);
                if (has(l.f22.block_coef, size_t(j)))
                    grad[size_t(j)] += z3 * hermitian_part(l.f22.block_coef[size_t(j)]);
                // tr(Z F) carries z2 conj(f12) + conj(z2) f12 = 2 Re(conj(z2) f12)
                if (has(l.f12.block_coef, size_t(j)))
                    grad[size_t(j)] += 2.0 * hermitian_part(std::conj(z2) * l.f12.block_coef[size_t(j)]);
            }
            grad_t += z1 * l.f11.t_coef + z3 * l.f22.t_coef + 2.0 * (std::conj(z2) * l.f12.t_coef).real();
        }
        for (int j = 0; j < nb; ++j)
        {
            k.block_slackness.push_back(std::abs(re_trace_product(sol.block_duals[size_t(j)], sol.blocks[size_t(j)])));
            k.block_stationarity.push_back((grad[size_t(j)] + sol.block_duals[size_t(j)]).norm());
        }
        k.t_stationarity = problem.has_t ? std::abs(grad_t) : 0.0;
        return k;
    }
}
