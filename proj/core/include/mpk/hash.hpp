#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace mpk {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& digest);

/// Incremental SHA-256 for hashing large artifacts without a full copy.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view bytes);
    Digest finish();

private:
    void* ctx_;
};

}  // namespace mpk
