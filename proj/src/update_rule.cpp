// Copyright 2026 the dirmix authors
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

#include "dirmix/update_rule.hpp"

#include "dirmix/error.hpp"

namespace dirmix {

ProbabilityField ColumnSumRule::weights(const ProbabilityField& tau) const {
    ProbabilityField out(tau.rows(), tau.cols());
    for (Eigen::Index k = 0; k < tau.cols(); ++k) {
        double total = 0.0;
        for (Eigen::Index n = 0; n < tau.rows(); ++n) total += tau(n, k);
        out.col(k).setConstant(total);
    }
    return out;
}

ProbabilityField IdentityRule::weights(const ProbabilityField& tau) const { return tau; }

ConvolutionRule::ConvolutionRule(GridShape shape, std::vector<double> taps)
    : shape_(shape), taps_(std::move(taps)) {
    if (taps_.empty() || taps_.size() % 2 == 0) {
        throw Error(Errc::invalid_argument, "convolution taps must have odd length");
    }
    for (double t : taps_) {
        if (!(t >= 0.0)) throw Error(Errc::invalid_argument, "convolution taps must be nonnegative");
    }
}

ProbabilityField ConvolutionRule::weights(const ProbabilityField& tau) const {
    return convolve_field(tau, shape_, taps_);
}

FrozenPrecisionRule::FrozenPrecisionRule(GridShape shape, GaussianKernel kernel, Eigen::VectorXd variance)
    : shape_(shape), kernel_(std::move(kernel)), variance_(std::move(variance)) {
    if (static_cast<std::size_t>(variance_.size()) != shape_.size()) {
        throw Error(Errc::shape_mismatch, "variance map does not cover the lattice");
    }
}

ProbabilityField FrozenPrecisionRule::weights(const ProbabilityField& tau) const {
    ProbabilityField out = local_mean(tau, shape_, kernel_);
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
        out.col(k) = tau.col(k) + out.col(k).cwiseQuotient(variance_);
    }
    return out;
}

LocalPrecisionRule::LocalPrecisionRule(GridShape shape, GaussianKernel kernel, double floor)
    : shape_(shape), kernel_(std::move(kernel)), floor_(floor) {}

FrozenPrecisionRule LocalPrecisionRule::frozen(const ProbabilityField& tau) const {
    const ProbabilityField mean = local_mean(tau, shape_, kernel_);
    return FrozenPrecisionRule(shape_, kernel_, local_variance(tau, mean, shape_, kernel_, floor_));
}

ProbabilityField LocalPrecisionRule::weights(const ProbabilityField& tau) const {
    return frozen(tau).weights(tau);
}

}  // namespace dirmix
