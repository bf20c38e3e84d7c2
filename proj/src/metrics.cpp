#include "ria/metrics.hpp"

#include <cmath>
#include <sstream>

#include "ria/error.hpp"

namespace ria {

double spd_distance(const SpdMatrix& a, const SpdMatrix& b, const MetricSpec& spec) {
  if (a.dim() != b.dim()) {
    std::ostringstream msg;
    msg << "spd_distance: dims differ (" << a.dim() << " vs " << b.dim() << ")";
    throw Error(ErrorKind::dimension, msg.str());
  }
  switch (spec.kind) {
    case MetricSpec::Kind::euclidean:
      return frobenius_norm(a.sym().matrix() - b.sym().matrix());
    case MetricSpec::Kind::log_euclidean: {
      const SymMatrix la = matrix_function(a, MatrixFunction::log());
      const SymMatrix lb = matrix_function(b, MatrixFunction::log());
      return frobenius_norm(la.matrix() - lb.matrix());
    }
    case MetricSpec::Kind::pem: {
      if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) {
        throw Error(ErrorKind::config, "pem alpha must lie in (0, 1]");
      }
      const SymMatrix pa = matrix_function(a, MatrixFunction::power(spec.alpha));
      const SymMatrix pb = matrix_function(b, MatrixFunction::power(spec.alpha));
      return frobenius_norm(pa.matrix() - pb.matrix()) / spec.alpha;
    }
  }
  throw Error(ErrorKind::config, "unknown metric");
}

namespace {

void require_same_dim(const GlobalDescriptor& a, const GlobalDescriptor& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream msg;
    msg << "descriptor dims differ (" << a.dim() << " vs " << b.dim() << ")";
    throw Error(ErrorKind::dimension, msg.str());
  }
}

}  // namespace

double descriptor_similarity(const GlobalDescriptor& a, const GlobalDescriptor& b) {
  require_same_dim(a, b);
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values()[i] * b.values()[i];
  return dot;
}

double descriptor_distance(const GlobalDescriptor& a, const GlobalDescriptor& b) {
  require_same_dim(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a.values()[i] - b.values()[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

}  // namespace ria
