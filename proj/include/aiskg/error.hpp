#pragma once

#include <stdexcept>
#include <string>

namespace aiskg {

// Base for every error raised by the library. Subclasses name the failure
// kind so callers can catch the ones they handle.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AISKG_DEFINE_ERROR(Name)                 \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(#Name ": " + what) {}            \
  }

AISKG_DEFINE_ERROR(InvalidArgument);
AISKG_DEFINE_ERROR(DegenerateBearing);
AISKG_DEFINE_ERROR(InvalidGeohash);
AISKG_DEFINE_ERROR(UnreadableSource);
AISKG_DEFINE_ERROR(DegenerateData);
AISKG_DEFINE_ERROR(SingularComponent);
AISKG_DEFINE_ERROR(UnknownCell);
AISKG_DEFINE_ERROR(NoRoute);
AISKG_DEFINE_ERROR(CorruptFile);
AISKG_DEFINE_ERROR(VersionMismatch);
AISKG_DEFINE_ERROR(EmptyInput);
AISKG_DEFINE_ERROR(InvalidSpec);

#undef AISKG_DEFINE_ERROR

}  // namespace aiskg
