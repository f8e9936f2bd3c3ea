#include "vmsim/report.hpp"

#include <cstdio>
#include <ostream>

namespace vmsim {
namespace {

void section(std::ostream& out, std::string_view name, std::string_view suffix) {
  out << '[' << name;
  if (!suffix.empty()) out << ' ' << suffix;
  out << "]\n";
}

void series_rows(std::ostream& out, const SimulationReport& r, std::string_view prefix) {
  for (const auto& s : r.series) {
    out << prefix << s.seq << ',' << s.host_vmas << ',' << s.sentry_vmas << ',' << s.allocated_bytes << '\n';
  }
}

void policy_blocks(std::ostream& out, const SimulationReport& r, std::string_view suffix) {
  section(out, "series", suffix);
  out << "seq,host_vmas,sentry_vmas,allocated_bytes\n";
  series_rows(out, r, "");

  section(out, "fragmentation", suffix);
  out << "seq,free_spans,largest_free_span,allocated_bytes\n";
  for (const auto& f : r.snapshots) {
    out << f.seq << ',' << f.stats.free_span_count << ',' << f.stats.largest_free_span << ','
        << f.stats.allocated_bytes << '\n';
  }

  section(out, "summary", suffix);
  out << "events_applied=" << r.series.size() << '\n'
      << "peak_host_vmas=" << r.peak_host_vmas << '\n'
      << "final_host_vmas=" << r.final_host_vmas << '\n'
      << "sentry_vmas=" << r.sentry_vmas << '\n'
      << "fault_count=" << r.fault_count << '\n'
      << "covered_faults=" << r.covered_faults << '\n'
      << "breaches=" << r.breaches.size() << '\n';
  for (const auto& b : r.breaches) {
    out << "breach=seq:" << b.seq << " count:" << b.count << " limit:" << b.limit << '\n';
  }
  out << "halted=" << (r.halted() ? 1 : 0) << '\n';
}

void meta_block(std::ostream& out, const MetaFields& meta) {
  section(out, "meta", "");
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

}  // namespace

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", r);
  return buf;
}

double Comparison::ratio() const {
  const auto l = static_cast<double>(legacy.final_host_vmas);
  const auto f = static_cast<double>(fixed.final_host_vmas);
  if (fixed.final_host_vmas == 0) return legacy.final_host_vmas == 0 ? 1.0 : l;
  return l / f;
}

bool Comparison::zero_activity() const { return legacy.fault_count == 0 && fixed.fault_count == 0; }

void write_simulation_report(std::ostream& out, const MetaFields& meta, const SimulationReport& report,
                             ReportFormat format) {
  if (format == ReportFormat::Csv) {
    out << "seq,host_vmas,sentry_vmas,allocated_bytes\n";
    series_rows(out, report, "");
    return;
  }
  meta_block(out, meta);
  policy_blocks(out, report, "");
}

void write_comparison_report(std::ostream& out, const MetaFields& meta, const Comparison& cmp,
                             ReportFormat format) {
  if (format == ReportFormat::Csv) {
    out << "policy,seq,host_vmas,sentry_vmas,allocated_bytes\n";
    series_rows(out, cmp.legacy, "legacy,");
    series_rows(out, cmp.fixed, "fixed,");
    return;
  }
  meta_block(out, meta);
  policy_blocks(out, cmp.legacy, "legacy");
  policy_blocks(out, cmp.fixed, "fixed");
  section(out, "comparison", "");
  out << "legacy_final_host_vmas=" << cmp.legacy.final_host_vmas << '\n'
      << "fixed_final_host_vmas=" << cmp.fixed.final_host_vmas << '\n'
      << "legacy_peak_host_vmas=" << cmp.legacy.peak_host_vmas << '\n'
      << "fixed_peak_host_vmas=" << cmp.fixed.peak_host_vmas << '\n'
      << "ratio=" << format_ratio(cmp.ratio()) << '\n'
      << "zero_activity=" << (cmp.zero_activity() ? 1 : 0) << '\n';
}

}  // namespace vmsim
