#include "trajscene/digest.hpp"

#include <array>

#include <fmt/format.h>
#include <openssl/sha.h>

#include "trajscene/interchange.hpp"

namespace trajscene {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md.data());
  std::string out;
  out.reserve(2 * md.size());
  for (unsigned char c : md) out += fmt::format("{:02x}", c);
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace trajscene
