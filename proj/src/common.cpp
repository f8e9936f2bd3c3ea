#include "vmsim/common.hpp"

#include <cstdio>

namespace vmsim {

std::string to_string(Prot p) {
  std::string s;
  if (p.readable()) s += 'r';
  if (p.writable()) s += 'w';
  if (p.executable()) s += 'x';
  return s.empty() ? "-" : s;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string to_string(const VirtualRange& r) {
  return "[" + hex(r.start) + ", " + hex(r.end) + ")";
}

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfAddressSpace: return "OutOfAddressSpace";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NotAdjacent: return "NotAdjacent";
    case ErrorCode::IncompatibleAttributes: return "IncompatibleAttributes";
    case ErrorCode::FaultOutsideVma: return "FaultOutsideVma";
    case ErrorCode::StoreExhausted: return "StoreExhausted";
    case ErrorCode::NotAllocated: return "NotAllocated";
    case ErrorCode::MapCountExceeded: return "MapCountExceeded";
    case ErrorCode::DuplicatePage: return "DuplicatePage";
    case ErrorCode::AlreadyMapped: return "AlreadyMapped";
    case ErrorCode::MalformedTrace: return "MalformedTrace";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedClass: return "UnsupportedClass";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::InvalidSegment: return "InvalidSegment";
    case ErrorCode::OverlappingLoads: return "OverlappingLoads";
    case ErrorCode::FileRangeOutOfBounds: return "FileRangeOutOfBounds";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::ImageTooLarge: return "ImageTooLarge";
    case ErrorCode::NoDynamic: return "NoDynamic";
    case ErrorCode::MultipleDynamic: return "MultipleDynamic";
    case ErrorCode::DynamicUnmapped: return "DynamicUnmapped";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::NonMonotonicSeq: return "NonMonotonicSeq";
    case ErrorCode::ArenaExhausted: return "ArenaExhausted";
  }
  return "Unknown";
}

}  // namespace vmsim
