#include "stage.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"

namespace mpk::cli {

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json refs_json(const std::vector<ArtifactRef>& refs) {
    auto out = nlohmann::json::array();
    for (const auto& r : refs) out.push_back({{"path", r.path}, {"sha256", r.sha256}});
    return out;
}

}  // namespace

std::string artifact_key(const std::filesystem::path& p) {
    return std::filesystem::weakly_canonical(std::filesystem::absolute(p)).string();
}

Manifest::Manifest(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto entry = nlohmann::json::parse(line, nullptr, false);
        if (entry.is_discarded() || !entry.contains("outputs"))
            throw InputError(path_.string() + ":" + std::to_string(lineno) + ": malformed manifest entry");
        for (const auto& o : entry["outputs"]) latest_[o.at("path").get<std::string>()] = o.at("sha256");
    }
}

std::optional<std::string> Manifest::recorded_hash(const std::string& path) const {
    auto it = latest_.find(path);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
}

void Manifest::append(const std::string& command, const std::vector<ArtifactRef>& inputs,
                      const std::vector<ArtifactRef>& outputs, std::uint64_t seed) {
    nlohmann::json entry = {
        {"command", command}, {"inputs", refs_json(inputs)}, {"outputs", refs_json(outputs)},
        {"seed", seed},       {"timestamp", utc_timestamp()},
    };
    if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError(path_.string(), "cannot append to manifest");
    out << entry.dump() << '\n';
    if (!out) throw IoError(path_.string(), "manifest write failed");
    for (const auto& o : outputs) latest_[o.path] = o.sha256;
}

Stage::Stage(std::string command, Manifest& manifest, std::uint64_t seed, std::size_t workers)
    : command_(std::move(command)), manifest_(manifest), seed_(seed), workers_(workers) {}

std::string Stage::read(const std::filesystem::path& path) {
    const auto key = artifact_key(path);
    if (auto it = read_cache_.find(key); it != read_cache_.end()) return it->second;
    auto bytes = read_file(path);
    const auto hash = to_hex(sha256(bytes));
    if (auto recorded = manifest_.recorded_hash(key); recorded && *recorded != hash)
        throw InputError(path.string() + ": content hash " + hash.substr(0, 12) +
                         "... does not match the manifest record " + recorded->substr(0, 12) + "...");
    inputs_.push_back({key, hash});
    read_cache_.emplace(key, bytes);
    return bytes;
}

PackedCorpus Stage::read_corpus(const std::filesystem::path& path) {
    const auto bytes = read(path);
    const auto sidecar = vocab_sidecar_path(path);
    VocabularyPtr vocab;
    if (std::filesystem::exists(sidecar))
        vocab = std::make_shared<const Vocabulary>(Vocabulary::from_sidecar(read(sidecar), sidecar.string()));
    else
        vocab = std::make_shared<const Vocabulary>(Vocabulary::bytes());
    return decode_corpus(bytes, std::move(vocab), path.string());
}

void Stage::emit(const std::filesystem::path& path, std::string bytes) {
    for (auto& [p, b] : outputs_)
        if (artifact_key(p) == artifact_key(path)) {
            b = std::move(bytes);
            return;
        }
    outputs_.emplace_back(path, std::move(bytes));
}

void Stage::emit_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    emit(path, doc.dump(2) + "\n");
}

void Stage::emit_corpus(const std::filesystem::path& path, const PackedCorpus& corpus) {
    emit(path, encode_corpus(corpus));
    if (corpus.vocabulary().kind() == VocabKind::word)
        emit(vocab_sidecar_path(path), corpus.vocabulary().to_sidecar());
    else
        stale_.push_back(vocab_sidecar_path(path));
}

void Stage::commit() {
    for (const auto& p : stale_) {
        std::error_code ec;
        std::filesystem::remove(p, ec);
    }
    std::vector<ArtifactRef> outs;
    for (const auto& [path, bytes] : outputs_) {
        write_file_atomic(path, bytes);
        outs.push_back({artifact_key(path), to_hex(sha256(bytes))});
    }
    manifest_.append(command_, inputs_, outs, seed_);
}

}  // namespace mpk::cli
