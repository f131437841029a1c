#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpk/corpus.hpp"
#include "mpk/hash.hpp"

namespace mpk::cli {

struct ArtifactRef {
    std::string path;
    std::string sha256;
};

/// Append-only JSON-lines log of command runs.
class Manifest {
public:
    explicit Manifest(std::filesystem::path path);

    /// Hash recorded by the most recent entry that wrote `path`, if any.
    std::optional<std::string> recorded_hash(const std::string& path) const;

    void append(const std::string& command, const std::vector<ArtifactRef>& inputs,
                const std::vector<ArtifactRef>& outputs, std::uint64_t seed);

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::map<std::string, std::string> latest_;
};

/// Canonical string used to identify an artifact in the manifest.
std::string artifact_key(const std::filesystem::path& p);

/// One command execution. Inputs are hash-checked against the manifest as
/// they are read; outputs are buffered and only written by commit(), so a
/// failing command leaves no partial artifacts.
class Stage {
public:
    Stage(std::string command, Manifest& manifest, std::uint64_t seed, std::size_t workers);

    const std::string& command() const noexcept { return command_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t workers() const noexcept { return workers_; }

    std::string read(const std::filesystem::path& path);
    PackedCorpus read_corpus(const std::filesystem::path& path);

    void emit(const std::filesystem::path& path, std::string bytes);
    void emit_json(const std::filesystem::path& path, const nlohmann::json& doc);
    void emit_corpus(const std::filesystem::path& path, const PackedCorpus& corpus);

    /// Writes every buffered output atomically and appends the manifest entry.
    void commit();

private:
    std::string command_;
    Manifest& manifest_;
    std::uint64_t seed_;
    std::size_t workers_;
    std::vector<ArtifactRef> inputs_;
    std::map<std::string, std::string> read_cache_;
    std::vector<std::pair<std::filesystem::path, std::string>> outputs_;
    std::vector<std::filesystem::path> stale_;
};

}  // namespace mpk::cli
