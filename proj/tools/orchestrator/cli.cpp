#include "cli.hpp"

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "mpk/error.hpp"
#include "stage.hpp"

namespace mpk::cli {

namespace {

constexpr const char* kDefaultManifest = "mpk-manifest.jsonl";

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::input: return 3;
        case ErrorKind::numerical: return 4;
    }
    return 1;
}

std::string quoted(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out;
}

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << "error code=" << code << " kind=" << kind << " message=\"" << quoted(message) << "\"\n";
    return code;
}

std::string command_list() {
    std::string s;
    for (const auto& [name, fn] : commands()) s += "  " + name + "\n";
    return s;
}

std::size_t parse_workers(const std::string& text, const std::string& source) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || v < 1) throw ConfigError(source + " must be a positive integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Reference-model data selection and distillation toolkit"};
    app.allow_extras();
    app.set_help_flag();
    std::string command, config_path;
    std::string workers_flag;
    bool help = false;
    app.add_option("command", command, "Command to run");
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--workers", workers_flag, "Worker threads (overrides MPK_WORKERS and the config)");
    app.add_flag("-h,--help", help, "Show usage");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    if (help || command.empty()) {
        std::cout << "usage: mpk <command> [--config FILE] [--workers N] [--section.key=value ...]\n\ncommands:\n"
                  << command_list();
        return command.empty() && !help ? 2 : 0;
    }
    const auto& table = commands();
    const auto it = table.find(command);
    if (it == table.end()) throw ConfigError("unknown command '" + command + "'");

    auto cfg = config_path.empty() ? RunConfig::parse(R"({"schema_version": 1})", std::filesystem::current_path())
                                   : RunConfig::load(config_path);
    for (const auto& extra : app.remaining()) {
        if (extra.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + extra + "'");
        cfg.apply_override(std::string_view(extra).substr(2));
    }

    std::size_t workers = 0;
    if (!workers_flag.empty()) {
        workers = parse_workers(workers_flag, "--workers");
    } else if (const char* env = std::getenv("MPK_WORKERS"); env != nullptr && *env != '\0') {
        workers = parse_workers(env, "MPK_WORKERS");
    } else {
        workers = cfg.workers();
    }

    const auto& doc = cfg.document();
    Manifest manifest(doc.contains("manifest") ? cfg.resolve(doc["manifest"].get<std::string>())
                                               : cfg.resolve(kDefaultManifest));
    Stage stage(command, manifest, cfg.seed(), workers);
    const int status = it->second(cfg, stage);
    stage.commit();
    return status;
}

}  // namespace

int run(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const Error& e) {
        return fail(exit_code(e.kind()), to_string(e.kind()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(2, "config", e.what());
    } catch (const std::exception& e) {
        return fail(1, "internal", e.what());
    }
}

}  // namespace mpk::cli
