#pragma once

#include <stdexcept>
#include <string>

namespace imtk {

// Base for every error thrown by the toolkit; callers can catch this one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define IMTK_DEFINE_ERROR(Name)                                        \
    struct Name : Error {                                              \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

// linear algebra
IMTK_DEFINE_ERROR(SingularMatrix);
IMTK_DEFINE_ERROR(NoConvergence);
IMTK_DEFINE_ERROR(DimensionError);

// model loading / construction
IMTK_DEFINE_ERROR(ParseError);
IMTK_DEFINE_ERROR(SchemaError);
IMTK_DEFINE_ERROR(LipschitzViolation);
IMTK_DEFINE_ERROR(UnsupportedNeutralTerm);

// certificate checks
IMTK_DEFINE_ERROR(OnDichotomyLine);
IMTK_DEFINE_ERROR(TailUnbounded);
IMTK_DEFINE_ERROR(KappaExceedsOne);
IMTK_DEFINE_ERROR(DegenerateGap);

// quadratic-form synthesis
IMTK_DEFINE_ERROR(HamiltonianEigsOnAxis);
IMTK_DEFINE_ERROR(XSingular);
IMTK_DEFINE_ERROR(InertiaMismatch);

// integration
IMTK_DEFINE_ERROR(NonFinite);
IMTK_DEFINE_ERROR(DerivativeUnavailable);

// manifold construction
IMTK_DEFINE_ERROR(NewtonDiverged);
IMTK_DEFINE_ERROR(AdmissibilityLost);
IMTK_DEFINE_ERROR(AnchorNotFound);
IMTK_DEFINE_ERROR(SubspaceStalled);
IMTK_DEFINE_ERROR(NotAdmissibleProjector);
IMTK_DEFINE_ERROR(ContainmentViolated);

// reduction / dynamics
IMTK_DEFINE_ERROR(LeftGrid);
IMTK_DEFINE_ERROR(Unbounded);
IMTK_DEFINE_ERROR(CertificateLostAtEpsilon);

#undef IMTK_DEFINE_ERROR

}  // namespace imtk
