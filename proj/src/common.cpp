#include "perfpd/common.hpp"

namespace perfpd {

Rng make_rng(std::uint64_t seed, std::uint64_t replica, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return Rng(seq);
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace perfpd
