#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string_view>

namespace ulamsteer {

// FNV-1a over the little-endian byte image of the inputs. Used to tag
// artifacts with the partition and control grid they were built for.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void add(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        add_bytes(buf, 8);
    }
    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
    void add(std::span<const double> v) {
        add(static_cast<std::uint64_t>(v.size()));
        for (double x : v) add(x);
    }
    void add(std::string_view s) {
        add(static_cast<std::uint64_t>(s.size()));
        add_bytes(s.data(), s.size());
    }
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

} // namespace ulamsteer
