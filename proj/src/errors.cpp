#include "ksblow/errors.hpp"

namespace ksblow {

void throw_domain(const std::string& what) { throw DomainError(what); }
void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace ksblow
