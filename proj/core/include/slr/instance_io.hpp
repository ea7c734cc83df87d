#ifndef SLR_INSTANCE_IO_HPP
#define SLR_INSTANCE_IO_HPP

#include <string>

#include "slr/driver.hpp"
#include "slr/gas.hpp"
#include "slr/model.hpp"

namespace slr::io {

std::string read_file(const std::string& path);

// Writes to a sibling temp file and renames over the target, so readers
// never observe a half-written file.
void write_file_atomic(const std::string& path, const std::string& content);

// Generic problem schema: variables (name/lower/upper/integral), dense
// objective, dense rows with sense ">=", "<=", or "=", and bindings that
// name a registered oracle plus its parameter object.
LipschitzMinlp problem_from_json(const std::string& text);
std::string problem_to_json(const LipschitzMinlp& problem);

gas::GasNetwork gas_network_from_json(const std::string& text);
std::string gas_network_to_json(const gas::GasNetwork& network);

// Run summary: status, objective, named point, iteration count, oracle
// call counters, and the final feasibility report.  Deterministic key
// order; no wall-clock fields.
std::string result_to_json(const RunResult& result,
                           const LipschitzMinlp& problem);

}  // namespace slr::io

#endif
