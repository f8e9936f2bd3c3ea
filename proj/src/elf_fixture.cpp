#include "vmsim/elf_fixture.hpp"

#include <algorithm>
#include <cstring>
#include <string_view>

namespace vmsim::elf {
namespace {

void put_le(std::vector<std::byte>& out, std::size_t at, std::uint64_t v, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) out[at + i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
}

std::vector<std::byte> as_bytes(std::string_view s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

// RX Load over the headers, RW Load at 0x1000 holding a small string table,
// Dynamic table at file offset / vaddr 0x1180, plus a GNU_STACK entry.
std::vector<std::byte> two_load_fixture(std::uint64_t rw_size) {
  const auto strtab = as_bytes(std::string_view("\0libfixture.so\0libc.so.6\0", 25));
  FixtureBuilder b;
  b.add_segment({kPtLoad, kPfR | kPfX, 0x0, 0x0, 0x800, 0x800, 0x1000});
  b.add_segment({kPtLoad, kPfR | kPfW, 0x1000, 0x1000, rw_size, rw_size, 0x1000});
  b.add_segment({kPtDynamic, kPfR | kPfW, 0x1180, 0x1180, 0x80, 0x80, 8});
  b.add_segment({0x6474e551, kPfR | kPfW, 0, 0, 0, 0, 16});
  b.fill(0x200, 0x600, std::byte{0xC3});  // stand-in text
  b.write(0x1100, strtab);
  b.write(0x1180, sample_dynamic_table());
  b.min_size(0x1200);
  return b.build();
}

}  // namespace

FixtureBuilder& FixtureBuilder::add_segment(const ElfSegment& segment) {
  segments_.push_back(segment);
  return *this;
}

FixtureBuilder& FixtureBuilder::write(std::uint64_t offset, std::span<const std::byte> bytes) {
  chunks_.push_back({offset, {bytes.begin(), bytes.end()}});
  return *this;
}

FixtureBuilder& FixtureBuilder::fill(std::uint64_t offset, std::uint64_t length, std::byte value) {
  chunks_.push_back({offset, std::vector<std::byte>(length, value)});
  return *this;
}

FixtureBuilder& FixtureBuilder::min_size(std::uint64_t size) {
  min_size_ = size;
  return *this;
}

std::vector<std::byte> FixtureBuilder::build() const {
  std::uint64_t size = kEhdrSize + segments_.size() * kPhdrSize;
  for (const auto& c : chunks_) size = std::max<std::uint64_t>(size, c.offset + c.bytes.size());
  size = std::max(size, min_size_);

  std::vector<std::byte> out(size, std::byte{0});
  static constexpr std::uint8_t kIdent[8] = {0x7F, 'E', 'L', 'F', 2, 1, 1, 0};
  for (std::size_t i = 0; i < 8; ++i) out[i] = std::byte{kIdent[i]};
  put_le(out, 0x10, 3, 2);     // e_type ET_DYN
  put_le(out, 0x12, 0x3E, 2);  // e_machine EM_X86_64
  put_le(out, 0x14, 1, 4);     // e_version
  put_le(out, 0x20, kEhdrSize, 8);
  put_le(out, 0x34, kEhdrSize, 2);
  put_le(out, 0x36, kPhdrSize, 2);
  put_le(out, 0x38, segments_.size(), 2);

  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    const std::size_t at = kEhdrSize + i * kPhdrSize;
    put_le(out, at + 0x00, s.raw_type, 4);
    put_le(out, at + 0x04, s.flags, 4);
    put_le(out, at + 0x08, s.file_offset, 8);
    put_le(out, at + 0x10, s.vaddr, 8);
    put_le(out, at + 0x18, s.vaddr, 8);  // p_paddr
    put_le(out, at + 0x20, s.file_siz, 8);
    put_le(out, at + 0x28, s.mem_siz, 8);
    put_le(out, at + 0x30, s.align, 8);
  }
  // Payload may not overwrite the headers.
  const std::uint64_t header_end = kEhdrSize + segments_.size() * kPhdrSize;
  for (const auto& c : chunks_) {
    for (std::size_t i = 0; i < c.bytes.size(); ++i) {
      if (c.offset + i >= header_end) out[c.offset + i] = c.bytes[i];
    }
  }
  return out;
}

std::vector<std::byte> sample_dynamic_table() {
  static constexpr std::uint64_t kEntries[8][2] = {
      {1, 0x0f},       // DT_NEEDED -> "libc.so.6"
      {14, 0x01},      // DT_SONAME -> "libfixture.so"
      {4, 0x1140},     // DT_HASH
      {5, 0x1100},     // DT_STRTAB
      {6, 0x1120},     // DT_SYMTAB
      {10, 0x19},      // DT_STRSZ
      {11, 0x18},      // DT_SYMENT
      {0, 0},          // DT_NULL
  };
  std::vector<std::byte> out(sizeof kEntries);
  for (std::size_t i = 0; i < 8; ++i) {
    put_le(out, i * 16, kEntries[i][0], 8);
    put_le(out, i * 16 + 8, kEntries[i][1], 8);
  }
  return out;
}

std::vector<std::byte> dynamic_in_extension_fixture() { return two_load_fixture(0x100); }

std::vector<std::byte> dynamic_inside_load_fixture() { return two_load_fixture(0x200); }

}  // namespace vmsim::elf
