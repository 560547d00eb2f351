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

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirmix/spatial.hpp"
#include "dirmix/types.hpp"

namespace dirmix {

/// Linear, nonnegativity-preserving map from responsibilities to raw mixing
/// weights f_{n,k}(τ_{·,k}). Column k of the output depends only on column k
/// of the input. The engine normalizes rows to obtain the next mixing field.
class UpdateRule {
public:
    virtual ~UpdateRule() = default;
    virtual std::string name() const = 0;
    virtual ProbabilityField weights(const ProbabilityField& tau) const = 0;
};

/// f_{n,k} = Σ_m τ_{m,k}: the standard mixture (one global weight vector).
class ColumnSumRule final : public UpdateRule {
public:
    std::string name() const override { return "column-sum"; }
    ProbabilityField weights(const ProbabilityField& tau) const override;
};

/// f_{n,k} = τ_{n,k}: mixing probabilities become the posteriors.
class IdentityRule final : public UpdateRule {
public:
    std::string name() const override { return "identity"; }
    ProbabilityField weights(const ProbabilityField& tau) const override;
};

/// f_{n,k} = (g ∗ τ_k)(l_n) on a lattice with a separable symmetric kernel
/// and reflect padding. A 1-d signal is a lattice of height 1.
class ConvolutionRule final : public UpdateRule {
public:
    ConvolutionRule(GridShape shape, std::vector<double> taps);
    ConvolutionRule(GridShape shape, const GaussianKernel& kernel) : ConvolutionRule(shape, kernel.taps) {}

    std::string name() const override { return "convolution"; }
    ProbabilityField weights(const ProbabilityField& tau) const override;

private:
    GridShape shape_;
    std::vector<double> taps_;
};

/// f_{n,k} = τ_{n,k} + m_{n,k}/s²_n with the local variance held fixed.
/// Linear in τ; this is the single-layer coupling of independent layers.
class FrozenPrecisionRule final : public UpdateRule {
public:
    FrozenPrecisionRule(GridShape shape, GaussianKernel kernel, Eigen::VectorXd variance);

    std::string name() const override { return "local-precision(frozen)"; }
    ProbabilityField weights(const ProbabilityField& tau) const override;

private:
    GridShape shape_;
    GaussianKernel kernel_;
    Eigen::VectorXd variance_;
};

/// Same weights as FrozenPrecisionRule, with the local variance recomputed
/// from the responsibilities it is applied to (the per-iteration use).
class LocalPrecisionRule final : public UpdateRule {
public:
    LocalPrecisionRule(GridShape shape, GaussianKernel kernel, double floor = variance_floor);

    std::string name() const override { return "local-precision"; }
    ProbabilityField weights(const ProbabilityField& tau) const override;
    FrozenPrecisionRule frozen(const ProbabilityField& tau) const;

private:
    GridShape shape_;
    GaussianKernel kernel_;
    double floor_;
};

}  // namespace dirmix
