// Copyright 2026 The duofm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>

#include <duofm/spectral.hpp>

namespace duofm {

enum class DescriptorKind { WKS, Refined };

struct DescriptorSet {
    Eigen::MatrixXd values; // n x d
    DescriptorKind kind = DescriptorKind::WKS;
    std::string provenance;

    Eigen::Index dimension() const noexcept { return values.cols(); }
};

/// Wave Kernel Signature sampling grid. The energy range is
/// [log l_2 + 2s, log l_k - 2s] sampled uniformly with s = sigma_scale * step;
/// the margin and the step couple, so the span solves
/// span = raw_range / (1 + 4*sigma_scale/(num_energies-1)).
struct WksParams {
    int num_energies = 128;
    double sigma_scale = 7.0;
};

/// WKS descriptor: normalized Gaussian bands of squared eigenfunctions over
/// log-eigenvalue energies. The constant mode is excluded.
inline DescriptorSet wks(const RealSpectralBasis& basis, const WksParams& params = {}) {
    if (params.num_energies < 2) throw SpectrumError("wks needs at least 2 energies");
    if (basis.size() < 8) throw SpectrumError("wks needs a basis of size >= 8");

    // Usable modes: strictly positive eigenvalues past the constant.
    std::vector<int> modes;
    for (Eigen::Index i = 1; i < basis.size(); ++i)
        if (basis.lambda[i] > 0.0) modes.push_back(static_cast<int>(i));
    if (modes.size() < 2) throw SpectrumError("wks needs at least 2 positive eigenvalues");
    const double log_min = std::log(basis.lambda[modes.front()]);
    const double log_max = std::log(basis.lambda[modes.back()]);
    if (!(log_max > log_min)) throw SpectrumError("wks energy range is empty");

    const int ne = params.num_energies;
    const double span = (log_max - log_min) / (1.0 + 4.0 * params.sigma_scale / (ne - 1));
    const double step = span / (ne - 1);
    const double sigma = params.sigma_scale * step;
    const double e0 = log_min + 2.0 * sigma;

    const Eigen::Index n = basis.num_vertices();
    Eigen::MatrixXd values(n, ne);
    Eigen::VectorXd sq(n);
    for (int e = 0; e < ne; ++e) {
        const double energy = e0 + e * step;
        double weight_sum = 0.0;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
        for (int m : modes) {
            const double d = energy - std::log(basis.lambda[m]);
            const double w = std::exp(-d * d / (2.0 * sigma * sigma));
            weight_sum += w;
            acc += w * basis.phi.col(m).array().square().matrix();
        }
        values.col(e) = acc / weight_sum;
    }
    DescriptorSet out;
    out.values = std::move(values);
    out.kind = DescriptorKind::WKS;
    out.provenance = "wks energies=" + std::to_string(ne) +
                     " sigma_scale=" + std::to_string(params.sigma_scale);
    return out;
}

/// Linear probe application: refined = base * W.
inline DescriptorSet apply_probe(const DescriptorSet& base, const Eigen::MatrixXd& probe) {
    if (base.values.cols() != probe.rows())
        throw DimensionError("apply_probe: probe rows must match descriptor dimension");
    DescriptorSet out;
    out.values = base.values * probe;
    out.kind = DescriptorKind::Refined;
    out.provenance = base.provenance + " -> probe " + std::to_string(probe.rows()) + "x" +
                     std::to_string(probe.cols());
    return out;
}

struct OrientationChannelParams {
    int num_gradient_channels = 4; // WKS columns whose gradients feed the channels
};

/// Appends orientation-aware channels to a descriptor set: the moduli of a
/// few WKS gradients (orientation-even) and the imaginary parts of products
/// of consecutive gradient pairs (orientation-odd). Both are invariant under
/// the per-vertex frame gauge; the odd channels change sign under an
/// orientation flip, which is what lets a linear probe produce non-symmetric
/// descriptors from symmetric inputs. Channels are normalized to unit
/// mass-weighted RMS.
inline DescriptorSet augment_with_gradient_channels(const DescriptorSet& base,
                                                    const SparseMatrixcd& grad,
                                                    const Eigen::VectorXd& mass,
                                                    const OrientationChannelParams& params = {}) {
    const int d = static_cast<int>(base.values.cols());
    const int count = std::min(params.num_gradient_channels, d);
    if (count < 2) throw DimensionError("gradient channels need at least 2 source columns");
    const Eigen::Index n = base.values.rows();
    const double area = mass.sum();

    std::vector<int> selected(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        selected[static_cast<std::size_t>(i)] = (count == 1) ? 0 : i * (d - 1) / (count - 1);

    Eigen::MatrixXcd gradients(n, count);
    for (int i = 0; i < count; ++i)
        gradients.col(i) = grad * base.values.col(selected[static_cast<std::size_t>(i)]).cast<Complex>();

    auto normalized = [&](Eigen::VectorXd channel) {
        const double rms = std::sqrt((channel.array().square() * mass.array()).sum() / area);
        if (rms > 1e-12) channel /= rms;
        return channel;
    };

    Eigen::MatrixXd values(n, d + count + (count - 1));
    values.leftCols(d) = base.values;
    for (int i = 0; i < count; ++i)
        values.col(d + i) = normalized(gradients.col(i).cwiseAbs());
    for (int i = 0; i + 1 < count; ++i) {
        Eigen::VectorXd odd =
            (gradients.col(i).conjugate().cwiseProduct(gradients.col(i + 1))).imag();
        values.col(d + count + i) = normalized(std::move(odd));
    }

    DescriptorSet out;
    out.values = std::move(values);
    out.kind = base.kind;
    out.provenance = base.provenance + " + grad channels(" + std::to_string(count) + ")";
    return out;
}

/// Channel count produced by augment_with_gradient_channels for a base of
/// dimension d.
inline int augmented_dimension(int base_dim, const OrientationChannelParams& params = {}) {
    const int count = std::min(params.num_gradient_channels, base_dim);
    return base_dim + count + (count - 1);
}

/// Index of the first orientation-odd channel in an augmented descriptor set.
inline int first_odd_channel(int base_dim, const OrientationChannelParams& params = {}) {
    const int count = std::min(params.num_gradient_channels, base_dim);
    return base_dim + count;
}

} // namespace duofm
