#pragma once

#include <span>

#include "mgal/matrix.hpp"

namespace mgal {

struct TripletTerm {
  double loss = 0.0;
  Vector grad_anchor;
  Vector grad_positive;
  Vector grad_negative;
};

/// max(d(a, p) - d(a, n) + margin, 0) with Euclidean d. Gradients are zero
/// when the hinge is inactive; a distance of exactly zero contributes a zero
/// (sub)gradient.
TripletTerm triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                         std::span<const double> negative, double margin);

struct AssociationTerm {
  double loss = 0.0;
  Vector grad_current;
};

/// Mean squared error (1/D) sum (cur - next)^2; `next` is a constant target.
AssociationTerm association_loss(std::span<const double> current, std::span<const double> next);

}  // namespace mgal
