#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vmsim/elf_loader.hpp"

namespace vmsim::elf {

// Builds minimal ELF64 little-endian files.
//
// Byte layout of every file the builder emits:
//   0x00  ELF header, 64 bytes: 7f 'E' 'L' 'F', ELFCLASS64, ELFDATA2LSB,
//         EV_CURRENT, e_type ET_DYN, e_machine EM_X86_64, e_phoff 0x40,
//         e_ehsize 64, e_phentsize 56, e_phnum = segment count, no sections.
//   0x40  program header table, 56 bytes per entry, in add_segment order.
//   ...   payload bytes at the offsets given to write()/fill(); gaps are zero.
// File length is the furthest of: end of the header table, end of any
// payload write, and min_size().
class FixtureBuilder {
 public:
  FixtureBuilder& add_segment(const ElfSegment& segment);
  FixtureBuilder& write(std::uint64_t offset, std::span<const std::byte> bytes);
  FixtureBuilder& fill(std::uint64_t offset, std::uint64_t length, std::byte value);
  FixtureBuilder& min_size(std::uint64_t size);

  std::vector<std::byte> build() const;

 private:
  struct Chunk {
    std::uint64_t offset;
    std::vector<std::byte> bytes;
  };
  std::vector<ElfSegment> segments_;
  std::vector<Chunk> chunks_;
  std::uint64_t min_size_ = 0;
};

// Eight-entry dynamic table (DT_NEEDED ... DT_NULL), 0x80 bytes, first byte
// nonzero.
std::vector<std::byte> sample_dynamic_table();

// Dynamic segment outside every Load but inside the page-aligned tail of the
// RW Load: [0x1000,0x1100) Load, [0x1180,0x1200) Dynamic at page 0x1000.
std::vector<std::byte> dynamic_in_extension_fixture();

// Same contents, but the RW Load's FileSiz/MemSiz cover the Dynamic segment.
std::vector<std::byte> dynamic_inside_load_fixture();

}  // namespace vmsim::elf
