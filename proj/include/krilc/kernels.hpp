#pragma once

#include <optional>
#include <string>
#include <vector>

#include "krilc/optim.hpp"
#include "krilc/types.hpp"

namespace krilc {

enum class KernelFamily { DC, TC, DI };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Parametric kernel description. eta layout: DC -> [c, alpha, beta],
// TC/DI -> [c, alpha]. Entry indices k, l are 1-based in the formulas.
struct KernelConfig {
    KernelFamily family = KernelFamily::DI;
    Index size = 0;
    Vec eta;
};

// Throws DomainError naming the violated bound if eta is outside the
// admissible box (c >= 0, 0 <= alpha < 1, |beta| <= 1 for DC).
void validate_kernel_config(const KernelConfig& config);

struct KernelMatrix {
    Mat values;
    std::optional<KernelConfig> config;

    Index size() const { return values.rows(); }
};

KernelMatrix build_kernel(const KernelConfig& config);

// Block-diagonal composition [pb 0; 0 pa]; input-side block leads to match
// the regressor ordering.
KernelMatrix block_diag_model_kernel(const KernelMatrix& pb, const KernelMatrix& pa);

// Natural-scale hyper-parameter search box for a family (c log-scaled,
// alpha logit-scaled, beta linear).
std::vector<ParamSpec> kernel_param_domain(KernelFamily family);

// Number of hyper-parameters of a family (3 for DC, 2 for TC/DI).
Index kernel_param_count(KernelFamily family);

// Square factor L with P = L L^T for a symmetric positive semidefinite P.
// Eigenvalues below rel_tol * max are treated as zero, so boundary kernels
// (c = 0 or alpha = 0) factor cleanly.
struct PsdFactor {
    Mat L;
    bool is_diagonal = false;
};
PsdFactor psd_sqrt_factor(const Mat& p, double rel_tol = 1e-12);

}  // namespace krilc
