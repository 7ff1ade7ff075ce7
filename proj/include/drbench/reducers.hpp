#pragma once

#include <string>
#include <vector>

#include "drbench/reducers/embedding.hpp"
#include "drbench/reducers/local_mds.hpp"
#include "drbench/reducers/pca.hpp"
#include "drbench/reducers/sammon.hpp"
#include "drbench/reducers/tsne.hpp"

namespace drbench {

inline const std::vector<std::string>& reducer_names() {
  static const std::vector<std::string> names{"pca", "sammon", "tsne", "lmds"};
  return names;
}

inline const std::vector<ParamSpec>& reducer_schema(const std::string& algorithm) {
  static const std::vector<ParamSpec> none;
  if (algorithm == "pca") return none;
  if (algorithm == "sammon") return sammon_schema();
  if (algorithm == "tsne") return tsne_schema();
  if (algorithm == "lmds") return local_mds_schema();
  fail("unknown algorithm '", algorithm, "' (expected pca, sammon, tsne or lmds)");
}

/// Runs `algorithm` on x. Parameters are validated against the algorithm's
/// schema; the output is mean-centered.
inline Embedding run_reducer(const std::string& algorithm, const PointSet& x, const HyperparamAssignment& params,
                             std::uint64_t seed, Eigen::Index p = 2) {
  if (algorithm == "pca") {
    resolve_params("pca", reducer_schema("pca"), params);
    auto e = pca(x, p);
    e.provenance.seed = seed;
    return e;
  }
  if (algorithm == "sammon") return sammon(x, params, seed, p);
  if (algorithm == "tsne") return tsne_exact(x, params, seed, p);
  if (algorithm == "lmds") return local_mds(x, params, seed, p);
  reducer_schema(algorithm);  // throws the unknown-algorithm error
  fail("unknown algorithm '", algorithm, "'");
}

}  // namespace drbench
