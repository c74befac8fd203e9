#pragma once

#include <string>
#include <vector>

#include "fairgrade/seqnet.hpp"

namespace fairgrade {

// Loss variants exercised by the finite-difference oracle: the plain
// masked cross-entropy, the sigma/lambda weighted form, the adversarial
// objective split into its trunk and head parts, and the literal
// single-objective reading of the combined adversarial loss.
enum class GradVariant {
  MaskedCe,
  Weighted,
  AdversarialTrunk,
  AdversarialHead,
  LiteralCombined,
};

std::string to_string(GradVariant v);

struct GradCheckResult {
  GradVariant variant = GradVariant::MaskedCe;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckOptions {
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  // Negative control: corrupts the analytic gradient so the check must fail.
  bool corrupt = false;
};

// Builds a random small fixture for `dims`, computes analytic gradients via
// the backward pass, and compares them against central finite differences
// of the forward-only loss.
GradCheckResult gradcheck(const ModelDims& dims, std::uint64_t seed, GradVariant variant,
                          double alpha, const GradCheckOptions& options = {});

// The default acceptance sweep: all variants, alpha in {0.1, 1.0}, the
// given seeds, on a small net.
std::vector<GradCheckResult> gradcheck_sweep(const ModelDims& dims,
                                             const std::vector<std::uint64_t>& seeds,
                                             const GradCheckOptions& options = {});

}  // namespace fairgrade
