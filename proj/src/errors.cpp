#include "fsgauge/errors.hpp"

namespace fsgauge {

void throw_invalid(const std::string& what) { throw InvalidArgument(what); }
void throw_data(const std::string& what) { throw DataError(what); }
void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace fsgauge
