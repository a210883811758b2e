#pragma once

#include <stdexcept>
#include <string>

namespace vnsplit {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define VNSPLIT_DEFINE_ERROR(NAME)                                  \
    struct NAME : Error {                                           \
        explicit NAME(const std::string& msg) : Error(msg) {}       \
    }

VNSPLIT_DEFINE_ERROR(DimensionMismatch);
VNSPLIT_DEFINE_ERROR(EmptySpan);
VNSPLIT_DEFINE_ERROR(NotSelfAdjointSpace);
VNSPLIT_DEFINE_ERROR(NotCommutative);
VNSPLIT_DEFINE_ERROR(DegenerateSampling);
VNSPLIT_DEFINE_ERROR(RefinementStall);
VNSPLIT_DEFINE_ERROR(NoConnector);
VNSPLIT_DEFINE_ERROR(NotHomomorphism);
VNSPLIT_DEFINE_ERROR(NotIsometry);
VNSPLIT_DEFINE_ERROR(NotBalanced);
VNSPLIT_DEFINE_ERROR(NotLean);
VNSPLIT_DEFINE_ERROR(NotFactor);
VNSPLIT_DEFINE_ERROR(NotNested);
VNSPLIT_DEFINE_ERROR(NotTracePreserving);
VNSPLIT_DEFINE_ERROR(NotCompletelyPositive);
VNSPLIT_DEFINE_ERROR(NotSameChannel);
VNSPLIT_DEFINE_ERROR(DimensionOrder);
VNSPLIT_DEFINE_ERROR(NotSemiCausal);
VNSPLIT_DEFINE_ERROR(NotUnitary);
VNSPLIT_DEFINE_ERROR(AlgebraMismatch);
VNSPLIT_DEFINE_ERROR(UnknownFixture);
VNSPLIT_DEFINE_ERROR(ParseError);

#undef VNSPLIT_DEFINE_ERROR

} // namespace vnsplit
