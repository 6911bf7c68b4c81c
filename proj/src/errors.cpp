#include "semsteer/errors.hpp"

namespace semsteer {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

}  // namespace semsteer
