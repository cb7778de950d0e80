#include "shiftrec/ucbridge.hpp"

#include <cmath>
#include <sstream>

namespace shiftrec {

void require_positive(const SparseTensor& t) {
    for (Index e = 0; e < t.known_count(); ++e) {
        if (!(t.value(e) > 0.0)) {
            const auto c = t.coord(e);
            std::ostringstream os;
            os << "unit-consistent completion requires strictly positive entries; found "
               << t.value(e) << " at (";
            for (std::size_t j = 0; j < c.size(); ++j) os << (j ? "," : "") << c[j];
            os << ")";
            throw DomainError(os.str());
        }
    }
}

CompletionResult ucca(const SparseTensor& t, Index k, const ConvergenceConfig& cfg) {
    require_positive(t);
    std::vector<double> logs(t.values().begin(), t.values().end());
    for (double& v : logs) v = std::log(v);
    CanonicalResult canon = csa(t.with_values(std::move(logs)), k, cfg);
    CompletionDiagnostics diag;
    diag.sweeps_used = canon.sweeps_used;
    diag.final_sweep_variance = canon.final_sweep_variance;
    diag.residual = residual(canon.canonical, k);
    // source keeps the original values, so known entries pass through exactly
    return CompletionResult(t, std::move(canon.shifts), diag, ValueDomain::log_positive);
}

}  // namespace shiftrec
