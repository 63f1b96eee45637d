#pragma once

#include <stdexcept>
#include <string>

namespace abov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ABOV_DEFINE_ERROR(Name)                 \
  class Name : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  }

ABOV_DEFINE_ERROR(ShapeError);
ABOV_DEFINE_ERROR(NumericsError);
ABOV_DEFINE_ERROR(ConfigError);
ABOV_DEFINE_ERROR(RangeError);
ABOV_DEFINE_ERROR(OrderError);
ABOV_DEFINE_ERROR(SingularityError);
ABOV_DEFINE_ERROR(InternalError);
ABOV_DEFINE_ERROR(DataError);
ABOV_DEFINE_ERROR(IoError);
ABOV_DEFINE_ERROR(CorruptCheckpointError);
ABOV_DEFINE_ERROR(VersionError);

#undef ABOV_DEFINE_ERROR

}  // namespace abov
