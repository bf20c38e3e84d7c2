#pragma once

#include "ria/aggregation.hpp"
#include "ria/linalg.hpp"

namespace ria {

struct MetricSpec {
  enum class Kind { pem, log_euclidean, euclidean };
  Kind kind = Kind::pem;
  double alpha = 0.5;

  static MetricSpec pem(double alpha) { return {Kind::pem, alpha}; }
  static MetricSpec log_euclidean() { return {Kind::log_euclidean, 0.0}; }
  static MetricSpec euclidean() { return {Kind::euclidean, 1.0}; }
};

/// pem(α): (1/α)·‖A^α − B^α‖_F
/// log_euclidean: ‖log A − log B‖_F
/// euclidean: ‖A − B‖_F
/// Matrix powers and logs go through the eigendecomposition.
double spd_distance(const SpdMatrix& a, const SpdMatrix& b, const MetricSpec& spec);

/// Dot product of two unit descriptors; equals the cosine of the underlying
/// symmetric matrices under the Frobenius inner product.
double descriptor_similarity(const GlobalDescriptor& a, const GlobalDescriptor& b);

/// ‖a − b‖₂.
double descriptor_distance(const GlobalDescriptor& a, const GlobalDescriptor& b);

}  // namespace ria
