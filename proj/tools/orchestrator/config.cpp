#include "config.hpp"

#include <map>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"

namespace mpk::cli {

namespace {

using nlohmann::json;

enum class Type { string, path, integer, number, boolean, paths, numbers, integers, ngram };

using KeyTable = std::map<std::string, Type, std::less<>>;

const KeyTable& ngram_keys() {
    static const KeyTable t{{"order", Type::integer}, {"lambdas", Type::numbers}, {"add_k", Type::number}};
    return t;
}

const std::map<std::string, KeyTable, std::less<>>& schema() {
    static const std::map<std::string, KeyTable, std::less<>> s{
        {"ngram", ngram_keys()},
        {"neural",
         {{"dim", Type::integer}, {"learning_rate", Type::number}, {"epochs", Type::integer},
          {"batch_size", Type::integer}, {"init_scale", Type::number}}},
        {"synthetic",
         {{"world_seed", Type::integer}, {"count", Type::integer}, {"seq_len", Type::integer},
          {"vocab_words", Type::integer}, {"easy_frac", Type::number}, {"hard_frac", Type::number},
          {"noise_frac", Type::number}, {"teacher_count", Type::integer}, {"eval_count", Type::integer}}},
        {"ingest",
         {{"source", Type::string}, {"inputs", Type::paths}, {"vocab", Type::string}, {"vocab_from", Type::path},
          {"seq_len", Type::integer}, {"role", Type::string}, {"output", Type::path}, {"labels", Type::path},
          {"reference_fraction", Type::number}, {"reference_output", Type::path}, {"rest_output", Type::path},
          {"rest_labels", Type::path}}},
        {"train_lm",
         {{"corpus", Type::path}, {"kind", Type::string}, {"output", Type::path}, {"ngram", Type::ngram}}},
        {"score",
         {{"model", Type::path}, {"corpus", Type::path}, {"normalization", Type::string}, {"output", Type::path}}},
        {"reward", {{"teacher_scores", Type::path}, {"reference_scores", Type::path}, {"output", Type::path}}},
        {"sample", {{"rewards", Type::path}, {"alpha", Type::number}, {"k", Type::integer}, {"output", Type::path}}},
        {"partition",
         {{"rewards", Type::path}, {"selection", Type::path}, {"labels", Type::path}, {"hard_quantile", Type::number},
          {"output", Type::path}}},
        {"pretrain",
         {{"corpus", Type::path}, {"selection", Type::path}, {"eval", Type::path}, {"alpha", Type::number},
          {"epochs", Type::integer}, {"output_model", Type::path}, {"output_curve", Type::path}}},
        {"kd_train",
         {{"teacher", Type::path}, {"corpus", Type::path}, {"selection", Type::path}, {"eval", Type::path},
          {"epochs", Type::integer}, {"compute_budget", Type::integer}, {"budget_curve", Type::path},
          {"output_model", Type::path}, {"output_curve", Type::path}}},
        {"eval", {{"model", Type::path}, {"corpus", Type::path}, {"output", Type::path}}},
        {"fit_scaling",
         {{"curve", Type::path}, {"grid_points", Type::integer}, {"alpha_min", Type::number},
          {"alpha_max", Type::number}, {"huber", Type::boolean}, {"huber_delta", Type::number},
          {"output", Type::path}}},
        {"solve_data",
         {{"fit", Type::path}, {"target", Type::number}, {"repeat_cap", Type::number}, {"output", Type::path}}},
        {"prop1",
         {{"p1", Type::numbers}, {"p2", Type::numbers}, {"rewards", Type::numbers}, {"k", Type::integer},
          {"ladder", Type::integers}, {"trials", Type::integer}, {"output", Type::path}}},
        {"proxy",
         {{"corpus", Type::path}, {"rewards", Type::path}, {"model", Type::path}, {"features", Type::string},
          {"lambda", Type::number}, {"alpha", Type::number}, {"fit_fraction", Type::number},
          {"output_selection", Type::path}, {"output_features", Type::path}, {"output_report", Type::path}}},
        {"diversity", {{"corpora", Type::paths}, {"max_instances", Type::integer}, {"output", Type::path}}},
        {"pipeline",
         {{"source", Type::string}, {"inputs", Type::paths}, {"teacher_inputs", Type::paths},
          {"eval_inputs", Type::paths}, {"vocab", Type::string}, {"seq_len", Type::integer},
          {"workdir", Type::path}, {"reference_fraction", Type::number}, {"alpha", Type::number},
          {"epochs", Type::integer}, {"hard_quantile", Type::number}, {"baseline", Type::boolean},
          {"teacher", Type::ngram}, {"reference", Type::ngram}}},
        {"report", {{"inputs", Type::paths}, {"output", Type::path}}},
    };
    return s;
}

const KeyTable& top_level() {
    static const KeyTable t{
        {"schema_version", Type::integer}, {"seed", Type::integer}, {"workers", Type::integer},
        {"manifest", Type::path}};
    return t;
}

const char* type_name(Type t) {
    switch (t) {
        case Type::string: return "string";
        case Type::path: return "path string";
        case Type::integer: return "nonnegative integer";
        case Type::number: return "number";
        case Type::boolean: return "boolean";
        case Type::paths: return "array of path strings";
        case Type::numbers: return "array of numbers";
        case Type::integers: return "array of nonnegative integers";
        case Type::ngram: return "n-gram object";
    }
    return "?";
}

void check_type(const json& v, Type t, const std::string& where);

void check_object(const json& v, const KeyTable& keys, const std::string& where) {
    if (!v.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, child] : v.items()) {
        auto it = keys.find(k);
        if (it == keys.end()) throw ConfigError("unknown key '" + where + "." + k + "'");
        check_type(child, it->second, where + "." + k);
    }
}

void check_type(const json& v, Type t, const std::string& where) {
    auto all = [&](auto pred) {
        if (!v.is_array()) return false;
        for (const auto& e : v)
            if (!pred(e)) return false;
        return true;
    };
    bool ok = false;
    switch (t) {
        case Type::string:
        case Type::path: ok = v.is_string(); break;
        case Type::integer: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); break;
        case Type::number: ok = v.is_number(); break;
        case Type::boolean: ok = v.is_boolean(); break;
        case Type::paths: ok = all([](const json& e) { return e.is_string(); }); break;
        case Type::numbers: ok = all([](const json& e) { return e.is_number(); }); break;
        case Type::integers:
            ok = all([](const json& e) {
                return e.is_number_unsigned() || (e.is_number_integer() && e.get<std::int64_t>() >= 0);
            });
            break;
        case Type::ngram: check_object(v, ngram_keys(), where); return;
    }
    if (!ok) throw ConfigError(where + ": expected " + type_name(t));
}

void validate_document(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    if (!doc.contains("schema_version")) throw ConfigError("config: missing schema_version");
    for (const auto& [k, v] : doc.items()) {
        if (auto it = top_level().find(k); it != top_level().end()) {
            check_type(v, it->second, k);
            continue;
        }
        auto sec = schema().find(k);
        if (sec == schema().end()) throw ConfigError("unknown config section '" + k + "'");
        check_object(v, sec->second, k);
    }
    if (doc["schema_version"].get<std::int64_t>() != kSchemaVersion)
        throw ConfigError("config: unsupported schema_version " + doc["schema_version"].dump() + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
}

json parse_value(std::string_view raw, Type t, const std::string& where) {
    if (t == Type::string || t == Type::path) return std::string(raw);
    auto v = json::parse(raw, nullptr, false);
    if (v.is_discarded()) throw ConfigError("override " + where + ": cannot parse '" + std::string(raw) + "'");
    return v;
}

}  // namespace

std::string section_name(std::string_view command) {
    std::string s(command);
    for (auto& c : s)
        if (c == '-') c = '_';
    return s;
}

RunConfig RunConfig::parse(std::string_view text, std::filesystem::path base_dir) {
    RunConfig cfg;
    cfg.doc_ = json::parse(text, nullptr, false);
    if (cfg.doc_.is_discarded()) throw ConfigError("config: not valid JSON");
    validate_document(cfg.doc_);
    cfg.base_ = std::move(base_dir);
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const InputError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse(text, base);
}

void RunConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
    const std::string key(assignment.substr(0, eq));
    const auto raw = assignment.substr(eq + 1);
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        auto it = top_level().find(key);
        if (it == top_level().end()) throw ConfigError("unknown config key '" + key + "'");
        doc_[key] = parse_value(raw, it->second, key);
    } else {
        const auto sec = key.substr(0, dot);
        const auto rest = key.substr(dot + 1);
        auto s = schema().find(sec);
        if (s == schema().end()) throw ConfigError("unknown config section '" + sec + "'");
        const auto inner = rest.find('.');
        const auto field = rest.substr(0, inner);
        auto k = s->second.find(field);
        if (k == s->second.end()) throw ConfigError("unknown key '" + key + "'");
        if (inner != std::string::npos) {
            if (k->second != Type::ngram) throw ConfigError("key '" + sec + "." + field + "' has no sub-keys");
            const auto sub = rest.substr(inner + 1);
            auto n = ngram_keys().find(sub);
            if (n == ngram_keys().end()) throw ConfigError("unknown key '" + key + "'");
            doc_[sec][field][sub] = parse_value(raw, n->second, key);
        } else {
            doc_[sec][field] = parse_value(raw, k->second, key);
        }
    }
    validate_document(doc_);
}

std::uint64_t RunConfig::seed() const { return doc_.value("seed", std::uint64_t{0}); }

std::size_t RunConfig::workers() const {
    const auto w = doc_.value("workers", std::uint64_t{1});
    if (w < 1) throw ConfigError("workers must be >= 1");
    return static_cast<std::size_t>(w);
}

std::filesystem::path RunConfig::resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_ / p;
}

RunConfig::Section::Section(const RunConfig& owner, std::string name) : owner_(owner), name_(std::move(name)) {}

const nlohmann::json* RunConfig::Section::find(std::string_view key) const {
    auto s = owner_.doc_.find(name_);
    if (s == owner_.doc_.end()) return nullptr;
    auto k = s->find(std::string(key));
    return k == s->end() ? nullptr : &*k;
}

const nlohmann::json& RunConfig::Section::require(std::string_view key) const {
    const auto* v = find(key);
    if (!v) throw ConfigError("missing required key '" + name_ + "." + std::string(key) + "'");
    return *v;
}

bool RunConfig::Section::has(std::string_view key) const { return find(key) != nullptr; }

std::string RunConfig::Section::string(std::string_view key, std::optional<std::string> fallback) const {
    if (const auto* v = find(key)) return v->get<std::string>();
    if (fallback) return *fallback;
    return require(key).get<std::string>();
}

std::filesystem::path RunConfig::Section::path(std::string_view key) const {
    return owner_.resolve(require(key).get<std::string>());
}

std::optional<std::filesystem::path> RunConfig::Section::optional_path(std::string_view key) const {
    if (const auto* v = find(key)) return owner_.resolve(v->get<std::string>());
    return std::nullopt;
}

std::vector<std::filesystem::path> RunConfig::Section::paths(std::string_view key) const {
    std::vector<std::filesystem::path> out;
    for (const auto& e : require(key)) out.push_back(owner_.resolve(e.get<std::string>()));
    return out;
}

double RunConfig::Section::number(std::string_view key, std::optional<double> fallback) const {
    if (const auto* v = find(key)) return v->get<double>();
    if (fallback) return *fallback;
    return require(key).get<double>();
}

std::uint64_t RunConfig::Section::integer(std::string_view key, std::optional<std::uint64_t> fallback) const {
    if (const auto* v = find(key)) return v->get<std::uint64_t>();
    if (fallback) return *fallback;
    return require(key).get<std::uint64_t>();
}

bool RunConfig::Section::boolean(std::string_view key, std::optional<bool> fallback) const {
    if (const auto* v = find(key)) return v->get<bool>();
    if (fallback) return *fallback;
    return require(key).get<bool>();
}

std::vector<double> RunConfig::Section::numbers(std::string_view key) const {
    return require(key).get<std::vector<double>>();
}

std::vector<std::uint64_t> RunConfig::Section::integers(std::string_view key) const {
    return require(key).get<std::vector<std::uint64_t>>();
}

const nlohmann::json& RunConfig::Section::object(std::string_view key) const {
    static const nlohmann::json empty = nlohmann::json::object();
    const auto* v = find(key);
    return v ? *v : empty;
}

}  // namespace mpk::cli
