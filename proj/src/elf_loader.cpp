#include "vmsim/elf_loader.hpp"

#include <algorithm>

namespace vmsim::elf {
namespace {

constexpr std::uint64_t kMaxImageBytes = 1ull << 30;

std::uint64_t read_le(std::span<const std::byte> b, std::size_t at, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(b[at + i])) << (8 * i);
  }
  return v;
}

const ElfSegment& only_dynamic(std::span<const ElfSegment> segments) {
  const ElfSegment* dyn = nullptr;
  for (const auto& s : segments) {
    if (s.kind() != SegmentKind::Dynamic) continue;
    if (dyn) throw Error(ErrorCode::MultipleDynamic, "more than one PT_DYNAMIC");
    dyn = &s;
  }
  if (!dyn) throw Error(ErrorCode::NoDynamic, "no PT_DYNAMIC");
  return *dyn;
}

}  // namespace

std::string_view segment_type_name(std::uint32_t raw_type) {
  switch (raw_type) {
    case 0: return "NULL";
    case kPtLoad: return "LOAD";
    case kPtDynamic: return "DYNAMIC";
    case 3: return "INTERP";
    case 4: return "NOTE";
    case 6: return "PHDR";
    case 7: return "TLS";
    case 0x6474e550: return "GNU_EH_FRAME";
    case 0x6474e551: return "GNU_STACK";
    case 0x6474e552: return "GNU_RELRO";
    case 0x6474e553: return "GNU_PROPERTY";
    default: return "OTHER";
  }
}

std::vector<ElfSegment> parse_program_headers(std::span<const std::byte> file) {
  static constexpr std::uint8_t kMagic[4] = {0x7F, 'E', 'L', 'F'};
  if (file.size() < 4) throw Error(ErrorCode::BadMagic, "file shorter than ELF magic");
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::to_integer<std::uint8_t>(file[i]) != kMagic[i]) throw Error(ErrorCode::BadMagic, "not an ELF file");
  }
  if (file.size() < 16) throw Error(ErrorCode::TruncatedHeader, "e_ident truncated");
  const auto ei_class = std::to_integer<std::uint8_t>(file[4]);
  const auto ei_data = std::to_integer<std::uint8_t>(file[5]);
  if (ei_class != 2 || ei_data != 1) {
    throw Error(ErrorCode::UnsupportedClass, "only ELF64 little-endian is supported");
  }
  if (file.size() < kEhdrSize) throw Error(ErrorCode::TruncatedHeader, "ELF header truncated");

  const std::uint64_t phoff = read_le(file, 0x20, 8);
  const std::uint64_t phentsize = read_le(file, 0x36, 2);
  const std::uint64_t phnum = read_le(file, 0x38, 2);
  if (phnum == 0) return {};
  if (phentsize < kPhdrSize) throw Error(ErrorCode::TruncatedHeader, "e_phentsize too small");
  if (phoff > file.size() || phnum * phentsize > file.size() - phoff) {
    throw Error(ErrorCode::TruncatedHeader, "program header table runs past end of file");
  }

  std::vector<ElfSegment> out;
  out.reserve(phnum);
  for (std::uint64_t i = 0; i < phnum; ++i) {
    const std::size_t at = phoff + i * phentsize;
    ElfSegment s;
    s.raw_type = static_cast<std::uint32_t>(read_le(file, at + 0x00, 4));
    s.flags = static_cast<std::uint32_t>(read_le(file, at + 0x04, 4));
    s.file_offset = read_le(file, at + 0x08, 8);
    s.vaddr = read_le(file, at + 0x10, 8);
    s.file_siz = read_le(file, at + 0x20, 8);
    s.mem_siz = read_le(file, at + 0x28, 8);
    s.align = read_le(file, at + 0x30, 8);
    out.push_back(s);
  }
  return out;
}

std::string_view to_string(ZeroingMode m) {
  return m == ZeroingMode::LinuxSemantics ? "linux" : "legacy";
}

std::string_view to_string(DynamicPlacement p) {
  switch (p) {
    case DynamicPlacement::InsideLoad: return "InsideLoad";
    case DynamicPlacement::InAlignedExtension: return "InAlignedExtension";
    case DynamicPlacement::OutsideEntirely: return "OutsideEntirely";
  }
  return "?";
}

MemoryImage build_image(std::span<const ElfSegment> segments, std::span<const std::byte> file,
                        ZeroingMode mode, std::uint64_t page_size) {
  if (!is_power_of_two(page_size)) throw Error(ErrorCode::InvalidArgument, "page size");

  std::vector<ElfSegment> loads;
  for (const auto& s : segments) {
    if (s.kind() != SegmentKind::Load) continue;
    if (s.mem_siz < s.file_siz) throw Error(ErrorCode::InvalidSegment, "Load with mem_siz < file_siz");
    if (s.vaddr + s.mem_siz < s.vaddr || s.vaddr + s.mem_siz > ~std::uint64_t{0} - page_size) {
      throw Error(ErrorCode::InvalidSegment, "Load wraps the address space");
    }
    if (s.file_offset > file.size() || s.file_siz > file.size() - s.file_offset) {
      throw Error(ErrorCode::FileRangeOutOfBounds, "Load file range past end of file");
    }
    if (s.vaddr % page_size != s.file_offset % page_size) {
      throw Error(ErrorCode::AlignmentMismatch, "vaddr and offset not congruent modulo page size");
    }
    loads.push_back(s);
  }
  if (loads.empty()) throw Error(ErrorCode::InvalidSegment, "no Load segments");

  std::vector<ElfSegment> by_addr = loads;
  std::sort(by_addr.begin(), by_addr.end(),
            [](const ElfSegment& a, const ElfSegment& b) { return a.vaddr < b.vaddr; });
  for (std::size_t i = 1; i < by_addr.size(); ++i) {
    if (by_addr[i - 1].vaddr + by_addr[i - 1].mem_siz > by_addr[i].vaddr) {
      throw Error(ErrorCode::OverlappingLoads, "Load segments overlap in memory");
    }
  }

  Addr base = ~Addr{0};
  Addr end = 0;
  for (const auto& s : loads) {
    base = std::min(base, page_floor(s.vaddr, page_size));
    end = std::max(end, page_ceil(s.vaddr + s.mem_siz, page_size));
  }
  if (end - base > kMaxImageBytes) throw Error(ErrorCode::ImageTooLarge, "image exceeds 1 GiB");

  MemoryImage img;
  img.base = base;
  img.bytes.assign(end - base, std::byte{0});
  img.origin.assign(end - base, ByteOrigin::Unmapped);

  // Byte at address a of segment s lives at file offset s.file_offset + (a - s.vaddr).
  auto from_file = [&](const ElfSegment& s, Addr a) {
    const std::size_t i = a - base;
    const std::uint64_t off = s.file_offset + a - s.vaddr;
    if (off < file.size()) {
      img.bytes[i] = file[off];
      img.origin[i] = ByteOrigin::FromFile;
    } else {
      img.bytes[i] = std::byte{0};
      img.origin[i] = ByteOrigin::Zeroed;
    }
  };
  auto zero = [&](Addr a) {
    img.bytes[a - base] = std::byte{0};
    img.origin[a - base] = ByteOrigin::Zeroed;
  };

  // Implicit page-granular content first, declared content second, so one
  // Load's page tail never clobbers another Load's declared bytes.
  for (const auto& s : loads) {
    const Addr mem_end = s.vaddr + s.mem_siz;
    for (Addr a = page_floor(s.vaddr, page_size); a < s.vaddr; ++a) from_file(s, a);
    const Addr tail_end = page_ceil(mem_end, page_size);
    for (Addr a = mem_end; a < tail_end; ++a) {
      if (mode == ZeroingMode::LinuxSemantics) from_file(s, a);
      else zero(a);
    }
  }
  for (const auto& s : loads) {
    for (Addr a = s.vaddr; a < s.vaddr + s.file_siz; ++a) from_file(s, a);
    for (Addr a = s.vaddr + s.file_siz; a < s.vaddr + s.mem_siz; ++a) zero(a);
  }
  return img;
}

DynamicPlacement classify_dynamic(std::span<const ElfSegment> segments, std::uint64_t page_size) {
  const ElfSegment& dyn = only_dynamic(segments);
  const Addr lo = dyn.vaddr;
  const Addr hi = dyn.vaddr + dyn.mem_siz;
  bool in_extension = false;
  for (const auto& s : segments) {
    if (s.kind() != SegmentKind::Load) continue;
    if (lo >= s.vaddr && hi <= s.vaddr + s.mem_siz) return DynamicPlacement::InsideLoad;
    if (lo >= page_floor(s.vaddr, page_size) && hi <= page_ceil(s.vaddr + s.mem_siz, page_size)) {
      in_extension = true;
    }
  }
  return in_extension ? DynamicPlacement::InAlignedExtension : DynamicPlacement::OutsideEntirely;
}

IntegrityVerdict check_dynamic_integrity(std::span<const ElfSegment> segments, const MemoryImage& image,
                                         std::span<const std::byte> file) {
  const ElfSegment& dyn = only_dynamic(segments);
  if (dyn.file_offset > file.size() || dyn.file_siz > file.size() - dyn.file_offset) {
    throw Error(ErrorCode::FileRangeOutOfBounds, "Dynamic file range past end of file");
  }
  if (dyn.file_siz == 0) return {};
  if (!image.covers(dyn.vaddr) || !image.covers(dyn.vaddr + dyn.file_siz - 1)) {
    throw Error(ErrorCode::DynamicUnmapped, "Dynamic region outside the loaded image");
  }
  const std::size_t at = dyn.vaddr - image.base;
  for (std::uint64_t i = 0; i < dyn.file_siz; ++i) {
    if (image.origin[at + i] == ByteOrigin::Unmapped) {
      throw Error(ErrorCode::DynamicUnmapped, "Dynamic region crosses an unmapped gap");
    }
  }
  for (std::uint64_t i = 0; i < dyn.file_siz; ++i) {
    if (image.bytes[at + i] != file[dyn.file_offset + i]) return {false, i};
  }
  return {};
}

}  // namespace vmsim::elf
