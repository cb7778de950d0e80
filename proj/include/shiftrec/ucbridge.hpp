#pragma once

#include "shiftrec/completion.hpp"

namespace shiftrec {

// Unit-consistent completion realized as the log-domain conjugate of scca:
// known entries must be strictly positive, imputations are
// exp(scca(log t)). Known entries pass through bit-exact. Reports label this
// method "UC (log-bridge)".
CompletionResult ucca(const SparseTensor& t, Index k, const ConvergenceConfig& cfg = {});

// Throws DomainError when any known entry is <= 0.
void require_positive(const SparseTensor& t);

}  // namespace shiftrec
