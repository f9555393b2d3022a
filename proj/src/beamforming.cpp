// SPDX-License-Identifier: Apache-2.0
#include "jsdm/beamforming.hpp"
#include "jsdm/linalg.hpp"

#include <string>

namespace jsdm {

namespace {

constexpr double cond_limit = 1e10;

} // namespace

CMatrix bd_prebeamformer(const Subspace& own, std::span<const Subspace> others, int streams)
{
    const Eigen::Index m = own.ambient_dim();
    if (streams < 1)
        throw InvalidParameter("bd_prebeamformer: need at least one stream");
    Eigen::Index stacked_cols = 0;
    for (const auto& s : others) {
        if (s.ambient_dim() != m)
            throw InvalidParameter("bd_prebeamformer: ambient dimensions differ");
        stacked_cols += s.rank();
    }
    CMatrix stacked(m, stacked_cols);
    Eigen::Index at = 0;
    for (const auto& s : others) {
        stacked.middleCols(at, s.rank()) = s.basis();
        at += s.rank();
    }

    const CMatrix null = null_space(CMatrix(stacked.adjoint()), 1e-10);
    if (null.cols() < streams) {
        // Report how much of the group's own subspace survives as well.
        Eigen::Index inter = 0;
        if (null.cols() > 0) {
            Eigen::JacobiSVD<CMatrix> svd(null.adjoint() * own.basis());
            for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
                if (svd.singularValues()(i) > 1.0 - 1e-6)
                    ++inter;
        }
        throw Infeasible("bd_prebeamformer: null space of the other groups has dimension " +
                         std::to_string(null.cols()) + " < " + std::to_string(streams) +
                         " requested streams (intersection with own subspace: " + std::to_string(inter) + ")");
    }
    const CMatrix proj = null.adjoint() * own.basis();
    const auto eig = hermitian_eig(CMatrix(proj * proj.adjoint()));
    return null * eig.vectors.leftCols(streams);
}

CMatrix bd_prebeamformer(const GroupLayout& layout, int g, int streams)
{
    if (g < 0 || g >= static_cast<int>(layout.group_subspaces.size()))
        throw InvalidParameter("bd_prebeamformer: group index out of range");
    const int pattern = layout.pattern_of_group.empty() ? 1 : layout.pattern_of_group[static_cast<std::size_t>(g)];
    std::vector<Subspace> others;
    for (std::size_t h = 0; h < layout.group_subspaces.size(); ++h) {
        const int ph = layout.pattern_of_group.empty() ? 1 : layout.pattern_of_group[h];
        if (static_cast<int>(h) != g && ph == pattern)
            others.push_back(layout.group_subspaces[h]);
    }
    return bd_prebeamformer(layout.group_subspaces[static_cast<std::size_t>(g)], others, streams);
}

ZfPrecoder zfbf_precoder(const CMatrix& heff, double load, int n, const CMatrix& b, bool tall_unitary)
{
    const Eigen::Index streams = heff.cols();
    if (streams == 0)
        throw InvalidParameter("zfbf_precoder: no streams");
    if (std::abs(load * n - static_cast<double>(streams)) > 1e-9)
        throw InvalidParameter("zfbf_precoder: load * N must equal the number of channel columns");
    if (!tall_unitary && b.cols() != heff.rows())
        throw InvalidParameter("zfbf_precoder: pre-beamformer needed for the general normalization");
    if (streams > heff.rows())
        throw Infeasible("zfbf_precoder: selection infeasible, " + std::to_string(streams) + " streams exceed " +
                         std::to_string(heff.rows()) + " effective dimensions");

    const CMatrix gram = heff.adjoint() * heff;
    const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > 0.0) || ev(ev.size() - 1) / ev(0) > cond_limit)
        throw Infeasible("zfbf_precoder: selection infeasible, effective channel Gram matrix is ill-conditioned");

    const Eigen::LLT<CMatrix> llt(gram);
    const CMatrix unscaled = llt.solve(heff.adjoint()).adjoint(); // H_eff G^{-1}
    double denom = 0.0;
    if (tall_unitary)
        denom = llt.solve(CMatrix::Identity(streams, streams)).trace().real();
    else
        denom = (b * unscaled).squaredNorm();
    ZfPrecoder out;
    out.zeta = std::sqrt(static_cast<double>(streams) / denom);
    out.precoder = out.zeta * unscaled;
    return out;
}

PrecoderStack build_zf_stack(std::vector<CMatrix> pre_beamformers, std::span<const CMatrix> channels, int n,
                             double total_power, bool tall_unitary)
{
    if (channels.size() != pre_beamformers.size())
        throw InvalidParameter("build_zf_stack: one channel block per group required");
    PrecoderStack stack;
    Eigen::Index total = 0;
    for (const auto& h : channels)
        total += h.cols();
    if (total == 0)
        throw InvalidParameter("build_zf_stack: no selected users");
    stack.per_stream_power = total_power / static_cast<double>(total);
    for (std::size_t g = 0; g < channels.size(); ++g) {
        const auto& h = channels[g];
        if (h.cols() == 0) {
            stack.mu_precoders.emplace_back(pre_beamformers[g].cols(), 0);
            stack.zeta.push_back(0.0);
            continue;
        }
        const CMatrix heff = pre_beamformers[g].adjoint() * h;
        const auto zf = zfbf_precoder(heff, static_cast<double>(h.cols()) / n, n, pre_beamformers[g], tall_unitary);
        stack.mu_precoders.push_back(zf.precoder);
        stack.zeta.push_back(zf.zeta);
    }
    stack.pre_beamformers = std::move(pre_beamformers);
    return stack;
}

double beam_sinr(const CVector& h, const PrecoderStack& stack, int g, int m)
{
    const auto& bg = stack.pre_beamformers.at(static_cast<std::size_t>(g));
    if (m < 0 || m >= bg.cols())
        throw InvalidParameter("beam_sinr: beam index out of range");
    const RVector own = (bg.adjoint() * h).cwiseAbs2();
    double interference = own.sum() - own(m);
    for (int gp = 0; gp < stack.num_groups(); ++gp)
        if (gp != g)
            interference += (stack.pre_beamformers[static_cast<std::size_t>(gp)].adjoint() * h).squaredNorm();
    return own(m) / (1.0 / stack.per_stream_power + interference);
}

RVector beam_sinrs(const CVector& h, const PrecoderStack& stack, int g)
{
    const auto& bg = stack.pre_beamformers.at(static_cast<std::size_t>(g));
    const RVector own = (bg.adjoint() * h).cwiseAbs2();
    double other = 0.0;
    for (int gp = 0; gp < stack.num_groups(); ++gp)
        if (gp != g)
            other += (stack.pre_beamformers[static_cast<std::size_t>(gp)].adjoint() * h).squaredNorm();
    const double base = 1.0 / stack.per_stream_power + other + own.sum();
    RVector out(own.size());
    for (Eigen::Index m = 0; m < own.size(); ++m)
        out(m) = own(m) / (base - own(m));
    return out;
}

double zf_sinr(std::span<const CMatrix> channels, const PrecoderStack& stack, int g, int n)
{
    const auto gi = static_cast<std::size_t>(g);
    if (g < 0 || gi >= channels.size() || n < 0 || n >= channels[gi].cols())
        throw InvalidParameter("zf_sinr: user is not in the active selection");
    const CVector h = channels[gi].col(n);
    const double pu = stack.per_stream_power;
    const cplx signal = (h.adjoint() * stack.pre_beamformers[gi] * stack.mu_precoders[gi].col(n))(0);
    double interference = 0.0;
    for (std::size_t gp = 0; gp < channels.size(); ++gp) {
        if (gp == gi || stack.mu_precoders[gp].cols() == 0)
            continue;
        interference += pu * (h.adjoint() * stack.pre_beamformers[gp] * stack.mu_precoders[gp]).squaredNorm();
    }
    return pu * std::norm(signal) / (1.0 + interference);
}

} // namespace jsdm
