#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "mpk/error.hpp"

namespace mpk {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

/// Append-only little-endian encoder into an in-memory byte string.
class ByteWriter {
public:
    void magic(std::string_view four_cc) { bytes_.append(four_cc.substr(0, 4)); }
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(v); }
    void raw(std::span<const std::uint8_t> data) {
        bytes_.append(reinterpret_cast<const char*>(data.data()), data.size());
    }
    template <typename T>
    void array(std::span<const T> values) {
        bytes_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
    }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.append(s);
    }

    const std::string& bytes() const& { return bytes_; }
    std::string&& take() && { return std::move(bytes_); }

private:
    template <typename T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        bytes_.append(buf, sizeof(T));
    }
    std::string bytes_;
};

/// Bounds-checked little-endian decoder. Truncation and bad magic raise
/// InputError tagged with `what` (usually the file path).
class ByteReader {
public:
    ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    void expect_magic(std::string_view four_cc);
    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    double f64() { return get<double>(); }
    std::string str();
    template <typename T>
    void array(std::span<T> out) {
        need(out.size_bytes());
        std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
        pos_ += out.size_bytes();
    }
    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        std::array<std::uint8_t, N> out{};
        array(std::span<std::uint8_t>(out));
        return out;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    /// Throws unless every byte has been consumed.
    void expect_end() const;

private:
    void need(std::size_t n) const;
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
    std::string what_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary and rename, so readers never observe a
/// partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mpk
