#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "mrn/federation.hpp"

namespace mrn {

// Metrics stream format: one header line, then one comma-delimited row per
// round. Doubles are printed with round-trip precision so that
// write(parse(s)) == s byte-for-byte. Lines starting with '#' are ignored by
// the parser (used for appended analysis records).
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const RoundMetrics& m);  // flushes
void write_metrics(std::ostream& os, std::span<const RoundMetrics> rows);

std::vector<RoundMetrics> parse_metrics(std::istream& is);

}  // namespace mrn
