#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdw/common/rng.hpp"
#include "fdw/nn/layers.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::nn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
};

/// Compares analytic gradients (already accumulated in the param refs)
/// against central finite differences of `loss`, which must recompute the
/// scalar loss from the current parameter values. Samples at most
/// `max_params` entries across all tensors. Double precision only; callers
/// are responsible for freezing dropout/batchnorm stochasticity.
template <typename LossFn>
GradCheckResult grad_check(const std::vector<ParamRef<double>>& params, LossFn loss,
                           std::size_t max_params = 1000, std::uint64_t seed = 0,
                           double step = 1e-4) {
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k].value->size(); ++i) entries.push_back({k, i});
  Rng rng(seed);
  if (entries.size() > max_params) {
    rng.shuffle(entries);
    entries.resize(max_params);
  }

  GradCheckResult res;
  res.checked = entries.size();
  for (const auto& [k, i] : entries) {
    double& v = (*params[k].value)[i];
    const double keep = v;
    v = keep + step;
    const double up = loss();
    v = keep - step;
    const double down = loss();
    v = keep;
    const double fd = (up - down) / (2.0 * step);
    const double an = (*params[k].grad)[i];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
    const double rel = std::abs(fd - an) / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_param = params[k].name + "[" + std::to_string(i) + "]";
    }
  }
  return res;
}

}  // namespace fdw::nn
