#pragma once

// Standard test families used across the suites:
//   FREE  — zero potential
//   BUMP  — smooth off-diagonal q supported on (0, 2)
//   GBUMP — smooth general (q1, q2) supported on (0, 2)
//   CONST — off-diagonal q = 0.5, the non-Szego negative control

#include "cansys/model.hpp"

namespace cansys::families {

inline PotentialSpec freeQ() { return PotentialSpec::makeZero(); }

inline PotentialSpec bump() {
  return PotentialSpec::makeOffDiagonal(ScalarLaw::makeBump(1.0, 1.0, 1.0));
}

inline PotentialSpec gbump() {
  return PotentialSpec::makeGeneral(ScalarLaw::makeBump(0.8, 1.0, 1.0),
                                    ScalarLaw::makeBump(-0.6, 1.0, 0.9));
}

inline PotentialSpec constQ() {
  return PotentialSpec::makeOffDiagonal(ScalarLaw::makeConstant(0.5));
}

}  // namespace cansys::families
