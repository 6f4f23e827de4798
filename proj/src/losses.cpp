#include "mgal/losses.hpp"

#include <cmath>

#include "mgal/errors.hpp"

namespace mgal {

namespace {

void require_same_finite(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) throw ValidationError(std::string(op) + ": dimension mismatch");
  if (!all_finite(a) || !all_finite(b)) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace

TripletTerm triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                         std::span<const double> negative, double margin) {
  require_same_finite(anchor, positive, "triplet_loss");
  require_same_finite(anchor, negative, "triplet_loss");
  if (!std::isfinite(margin)) throw NumericError("triplet_loss: non-finite margin");

  const std::size_t dim = anchor.size();
  TripletTerm out{0.0, Vector(dim, 0.0), Vector(dim, 0.0), Vector(dim, 0.0)};
  const double dp = euclidean_distance(anchor, positive);
  const double dn = euclidean_distance(anchor, negative);
  const double hinge = dp - dn + margin;
  if (hinge <= 0.0) return out;

  out.loss = hinge;
  for (std::size_t c = 0; c < dim; ++c) {
    const double up = dp > 0.0 ? (anchor[c] - positive[c]) / dp : 0.0;
    const double un = dn > 0.0 ? (anchor[c] - negative[c]) / dn : 0.0;
    out.grad_anchor[c] = up - un;
    out.grad_positive[c] = -up;
    out.grad_negative[c] = un;
  }
  return out;
}

AssociationTerm association_loss(std::span<const double> current, std::span<const double> next) {
  require_same_finite(current, next, "association_loss");
  const std::size_t dim = current.size();
  AssociationTerm out{0.0, Vector(dim, 0.0)};
  if (dim == 0) return out;
  const double inv = 1.0 / static_cast<double>(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const double d = current[c] - next[c];
    out.loss += d * d;
    out.grad_current[c] = 2.0 * inv * d;
  }
  out.loss *= inv;
  return out;
}

}  // namespace mgal
