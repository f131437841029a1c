#include "mpk/binary_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace mpk {

void ByteReader::need(std::size_t n) const {
    if (remaining() < n)
        throw InputError(what_ + ": truncated (need " + std::to_string(n) + " bytes, have " +
                         std::to_string(remaining()) + ")");
}

void ByteReader::expect_magic(std::string_view four_cc) {
    need(4);
    if (bytes_.substr(pos_, 4) != four_cc)
        throw InputError(what_ + ": bad magic, expected \"" + std::string(four_cc) + "\"");
    pos_ += 4;
}

std::string ByteReader::str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
}

void ByteReader::expect_end() const {
    if (remaining() != 0)
        throw InputError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path.string(), "read failed");
    return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string(), "cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError(tmp.string(), "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(path.string(), "rename failed");
    }
}

}  // namespace mpk
