#ifndef GCAP_GRAD_CHECK_HPP_
#define GCAP_GRAD_CHECK_HPP_

#include "gcap/captioner.hpp"

namespace gcap {

// Relative error with a floor: true relative error for gradients of
// noticeable size, absolute error (scaled by 1/floor) near zero, so that
// finite-difference noise on genuinely zero gradients does not register.
double gradient_rel_err(double analytic, double numeric, double floor = 1e-3);

struct GradCheckReport {
  Variant variant = Variant::Att;
  uint64_t seed = 0;
  double max_rel_err = 0;
  std::string worst_param;
};

// Builds a tiny double-precision model of the given variant with a seeded
// random example (padded proposal rows included), unrolls the teacher-forced
// loss over `interior_tokens` steps and compares every parameter gradient of
// backward_sentence against central finite differences of the loss.
GradCheckReport gradient_check_variant(Variant variant, uint64_t seed,
                                       size_t interior_tokens = 5, double eps = 1e-5);

// Convenience sweep used by the CLI and the acceptance suite.
std::vector<GradCheckReport> gradient_check_suite(std::span<const Variant> variants,
                                                  size_t seeds, size_t interior_tokens = 5);

}  // namespace gcap

#endif  // GCAP_GRAD_CHECK_HPP_
