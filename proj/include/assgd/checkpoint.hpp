#pragma once

#include <iosfwd>
#include <string>

#include "assgd/model.hpp"

namespace assgd {

// Text container, one token group per line:
//
//   assgd-checkpoint 1
//   kind <linear|mlp>
//   layers <L>
//   layer <k> <rows> <cols> <bias 0|1> <activation>
//   <rows lines of cols values, row-major>
//   <one line of rows bias values, only when bias is 1>
//
// Values use the shortest decimal form that round-trips a 64-bit double.
void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace assgd
