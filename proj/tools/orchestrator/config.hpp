#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpk::cli {

inline constexpr int kSchemaVersion = 1;

/// Validated run configuration. Relative paths resolve against `base_dir`
/// (the directory holding the config file).
class RunConfig {
public:
    /// Parses and validates `text`; unknown sections or keys, wrong types and a
    /// missing or different schema_version raise ConfigError.
    static RunConfig parse(std::string_view text, std::filesystem::path base_dir);
    static RunConfig load(const std::filesystem::path& path);

    /// Applies one "section.key=value" (or "key=value" for top-level keys)
    /// override. The value is read as JSON when the schema expects a number,
    /// boolean or array, and verbatim otherwise.
    void apply_override(std::string_view assignment);

    const nlohmann::json& document() const noexcept { return doc_; }
    const std::filesystem::path& base_dir() const noexcept { return base_; }

    std::uint64_t seed() const;
    std::size_t workers() const;

    /// Typed section accessor for one command.
    class Section {
    public:
        Section(const RunConfig& owner, std::string name);

        bool has(std::string_view key) const;
        std::string string(std::string_view key, std::optional<std::string> fallback = std::nullopt) const;
        std::filesystem::path path(std::string_view key) const;
        std::optional<std::filesystem::path> optional_path(std::string_view key) const;
        std::vector<std::filesystem::path> paths(std::string_view key) const;
        double number(std::string_view key, std::optional<double> fallback = std::nullopt) const;
        std::uint64_t integer(std::string_view key, std::optional<std::uint64_t> fallback = std::nullopt) const;
        bool boolean(std::string_view key, std::optional<bool> fallback = std::nullopt) const;
        std::vector<double> numbers(std::string_view key) const;
        std::vector<std::uint64_t> integers(std::string_view key) const;
        const nlohmann::json& object(std::string_view key) const;
        const std::string& name() const noexcept { return name_; }

    private:
        const nlohmann::json* find(std::string_view key) const;
        const nlohmann::json& require(std::string_view key) const;

        const RunConfig& owner_;
        std::string name_;
    };

    Section section(std::string name) const { return Section(*this, std::move(name)); }

    std::filesystem::path resolve(const std::filesystem::path& p) const;

private:
    nlohmann::json doc_;
    std::filesystem::path base_;
};

/// "train-lm" -> "train_lm".
std::string section_name(std::string_view command);

}  // namespace mpk::cli
