#pragma once

#include <string>
#include <vector>

#include "dualfl/engine.hpp"

namespace dualfl {

/// Per-round run log: a commented header block echoing the configuration and
/// derived constants, followed by one fixed-schema CSV row per round.
struct RunTrace {
  std::vector<std::string> header;  // rendered as "# <line>"
  std::vector<RoundRecord> rows;
};

/// The fixed CSV column header.
extern const char* const kTraceColumns;

/// 17-significant-digit rendering used for every real in the trace, so that
/// identical runs produce byte-identical files.
std::string format_real(double v);

std::string render_trace(const RunTrace& trace);

/// Writes the rendered trace; throws DataError on I/O failure.
void emit_trace(const RunTrace& trace, const std::string& path);

}  // namespace dualfl
