// Writes the ELF fixtures shipped under fixtures/.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vmsim/elf_fixture.hpp"

namespace {

bool write(const std::filesystem::path& path, const std::vector<std::byte>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "fixtures";
  std::filesystem::create_directories(dir);
  const bool ok = write(dir / "dynamic_in_extension.elf", vmsim::elf::dynamic_in_extension_fixture()) &&
                  write(dir / "dynamic_inside_load.elf", vmsim::elf::dynamic_inside_load_fixture());
  if (!ok) {
    std::cerr << "make_elf_fixtures: write failed under " << dir << '\n';
    return 1;
  }
  return 0;
}
