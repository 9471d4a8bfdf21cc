#pragma once

#include <stdexcept>
#include <string>

namespace gim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GIM_DEFINE_ERROR(Name)                 \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

// Input violates a documented precondition (probabilities, ranges).
GIM_DEFINE_ERROR(ValidationError);
GIM_DEFINE_ERROR(ShapeError);
GIM_DEFINE_ERROR(IndexError);
GIM_DEFINE_ERROR(ParamError);
GIM_DEFINE_ERROR(SelectorError);
GIM_DEFINE_ERROR(NotCommunicatingError);
GIM_DEFINE_ERROR(SchemaError);
GIM_DEFINE_ERROR(GenerationError);
GIM_DEFINE_ERROR(EmptyMaskError);
GIM_DEFINE_ERROR(ZeroMatrixError);
GIM_DEFINE_ERROR(InternalError);
GIM_DEFINE_ERROR(ConfigError);
GIM_DEFINE_ERROR(EmptyInputError);
GIM_DEFINE_ERROR(UnknownParameterError);
GIM_DEFINE_ERROR(IoError);

#undef GIM_DEFINE_ERROR

} // namespace gim
