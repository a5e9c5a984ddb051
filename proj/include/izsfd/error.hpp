#pragma once

// Exception hierarchy shared by every module. Each failure category named in
// the module contracts maps to one concrete type so callers (and tests) can
// catch precisely what they expect.

#include <stdexcept>
#include <string>

namespace izsfd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define IZSFD_DEFINE_ERROR(Name)                     \
    class Name : public Error {                      \
    public:                                          \
        explicit Name(const std::string& what)       \
            : Error(#Name ": " + what) {}            \
    }

IZSFD_DEFINE_ERROR(InvalidInput);
IZSFD_DEFINE_ERROR(SchemaMismatch);
IZSFD_DEFINE_ERROR(ContractViolation);
IZSFD_DEFINE_ERROR(InvalidAttribute);
IZSFD_DEFINE_ERROR(MissingPrototype);
IZSFD_DEFINE_ERROR(FrozenPrototype);
IZSFD_DEFINE_ERROR(InvalidPlan);
IZSFD_DEFINE_ERROR(ProtocolError);
IZSFD_DEFINE_ERROR(ConfigError);
IZSFD_DEFINE_ERROR(IngestionError);
IZSFD_DEFINE_ERROR(SpecError);
IZSFD_DEFINE_ERROR(UndefinedMetric);
IZSFD_DEFINE_ERROR(IoError);

#undef IZSFD_DEFINE_ERROR

}  // namespace izsfd
