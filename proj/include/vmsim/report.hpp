#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vmsim/fault_engine.hpp"

namespace vmsim {

enum class ReportFormat { Structured, Csv };

using MetaFields = std::vector<std::pair<std::string, std::string>>;

// Structured report: "[meta]" key=value config echo, "[series]" CSV
// (seq,host_vmas,sentry_vmas,allocated_bytes), "[fragmentation]" CSV
// snapshots and "[summary]" key=value totals. Field order is fixed.
void write_simulation_report(std::ostream& out, const MetaFields& meta, const SimulationReport& report,
                             ReportFormat format);

struct Comparison {
  SimulationReport legacy;
  SimulationReport fixed;

  double ratio() const;
  bool zero_activity() const;
};

// Same blocks per policy with a " legacy" / " fixed" suffix on the section
// name, followed by a "[comparison]" block with the legacy/fixed ratio.
void write_comparison_report(std::ostream& out, const MetaFields& meta, const Comparison& cmp,
                             ReportFormat format);

std::string format_ratio(double r);

}  // namespace vmsim
