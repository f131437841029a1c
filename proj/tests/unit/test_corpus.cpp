#include <doctest.h>

#include <fstream>
#include <numeric>

#include "frozen_values.hpp"
#include "mpk/binary_io.hpp"
#include "mpk/corpus.hpp"
#include "mpk/error.hpp"
#include "mpk/random.hpp"
#include "temp_dir.hpp"

using namespace mpk;
using mpk::test::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

PackedCorpus byte_corpus(std::uint32_t seq_len, std::vector<TokenId> tokens) {
    return PackedCorpus(std::make_shared<const Vocabulary>(Vocabulary::bytes()), seq_len, std::move(tokens));
}

}  // namespace

TEST_CASE("byte vocabulary layout") {
    const auto v = Vocabulary::bytes();
    CHECK(v.size() == 259);
    CHECK(v.bos() == 256);
    CHECK(v.eos() == 257);
    CHECK(v.pad() == 258);
    CHECK_FALSE(v.unk().has_value());
    CHECK(decode_bytes(encode_bytes("h\xffi")) == "h\xffi");
}

TEST_CASE("word vocabulary rejects duplicates and maps unknown words to UNK") {
    CHECK_THROWS_AS(Vocabulary::words({"a", "a"}), InputError);
    const auto v = Vocabulary::words({"x", "y"});
    CHECK(v.size() == 6);
    CHECK(v.encode_word("y") == 1);
    CHECK(v.encode_word("zzz") == *v.unk());
    const auto back = Vocabulary::from_sidecar(v.to_sidecar(), "sidecar");
    CHECK(back == v);
}

TEST_CASE("ingest inserts EOS between non-empty documents only") {
    TempDir dir;
    write_text(dir / "a.txt", "ab");
    write_text(dir / "empty.txt", "");
    write_text(dir / "b.txt", "c");
    const std::vector<std::filesystem::path> paths{dir / "a.txt", dir / "empty.txt", dir / "b.txt"};
    const auto s = ingest_and_tokenize(paths, VocabKind::byte);
    const std::vector<TokenId> expected{'a', 'b', 257, 'c'};
    CHECK(s.tokens == expected);
}

TEST_CASE("word ingest ranks by frequency with lexicographic ties and is worker independent") {
    TempDir dir;
    write_text(dir / "1.txt", "b a c b\n");
    write_text(dir / "2.txt", "c b d");
    const std::vector<std::filesystem::path> paths{dir / "1.txt", dir / "2.txt"};
    const auto one = ingest_and_tokenize(paths, VocabKind::word, 1);
    const auto many = ingest_and_tokenize(paths, VocabKind::word, 4);
    CHECK(one.tokens == many.tokens);
    CHECK(*one.vocab == *many.vocab);
    const auto words = one.vocab->word_list();
    REQUIRE(words.size() == 4);
    CHECK(words[0] == "b");
    CHECK(words[1] == "c");
    CHECK(words[2] == "a");
    CHECK(words[3] == "d");
}

TEST_CASE("ingest of a missing file is an input error") {
    TempDir dir;
    const std::vector<std::filesystem::path> paths{dir / "nope.txt"};
    CHECK_THROWS_AS(ingest_and_tokenize(paths, VocabKind::byte), InputError);
}

TEST_CASE("pack_sequences drops the trailing partial instance") {
    TokenStream s{std::make_shared<const Vocabulary>(Vocabulary::bytes()), std::vector<TokenId>(11)};
    std::iota(s.tokens.begin(), s.tokens.end(), 0);
    const auto packed = pack_sequences(s, 4);
    CHECK(packed.corpus.size() == 2);
    CHECK(packed.dropped == 3);
    CHECK(packed.corpus.instance(1)[0] == 4);
    CHECK_THROWS_AS(pack_sequences(s, 0), ConfigError);
}

TEST_CASE("uniform_split matches the Python reference and partitions the corpus") {
    std::vector<TokenId> tokens(20 * 2);
    std::iota(tokens.begin(), tokens.end(), 0);
    const auto corpus = byte_corpus(2, tokens);
    const auto split = uniform_split(corpus, {0.25, stream_seed(1, "split")});
    CHECK(std::equal(split.reference_indices.begin(), split.reference_indices.end(),
                     std::begin(oracle::kSplit20Reference), std::end(oracle::kSplit20Reference)));
    CHECK(split.reference.size() + split.rest.size() == corpus.size());
    std::vector<std::size_t> all(split.reference_indices);
    all.insert(all.end(), split.rest_indices.begin(), split.rest_indices.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    CHECK(split.rest.instance(0)[0] == corpus.instance(split.rest_indices[0])[0]);
}

TEST_CASE("corpus digest is SHA-256 of the documented layout") {
    std::vector<TokenId> tokens(12);
    std::iota(tokens.begin(), tokens.end(), 0);
    CHECK(to_hex(corpus_digest(byte_corpus(4, tokens))) == oracle::kTinyCorpusSha256);
}

TEST_CASE("corpus files round-trip byte-identically, with a word sidecar") {
    TempDir dir;
    const auto synth = synth_corpus(SyntheticMix{.count = 50, .seq_len = 16});
    save_corpus(dir / "c.mpkc", synth.corpus);
    CHECK(std::filesystem::exists(dir / "c.mpkc.vocab"));
    const auto loaded = load_corpus(dir / "c.mpkc");
    CHECK(encode_corpus(loaded) == encode_corpus(synth.corpus));
    CHECK(loaded.vocabulary() == synth.corpus.vocabulary());

    // Overwriting with a byte corpus removes the stale sidecar.
    save_corpus(dir / "c.mpkc", byte_corpus(2, {1, 2, 3, 4}));
    CHECK_FALSE(std::filesystem::exists(dir / "c.mpkc.vocab"));
    CHECK(load_corpus(dir / "c.mpkc").vocabulary().kind() == VocabKind::byte);
}

TEST_CASE("corrupted corpus files are rejected") {
    const auto bytes = encode_corpus(byte_corpus(2, {1, 2, 3, 4}));
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::bytes());
    CHECK_THROWS_AS(decode_corpus(bytes.substr(0, bytes.size() - 1), vocab, "t"), InputError);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_corpus(bad_magic, vocab, "t"), InputError);
    auto bad_token = bytes;
    bad_token[bytes.size() - 2] = '\x7f';
    CHECK_THROWS_AS(decode_corpus(bad_token, vocab, "t"), InputError);
}

TEST_CASE("labels round-trip") {
    const std::vector<InstanceLabel> labels{InstanceLabel::easy, InstanceLabel::noise, InstanceLabel::hard};
    CHECK(decode_labels(encode_labels(labels), "l") == labels);
    CHECK_THROWS_AS(decode_labels("easy\nweird\n", "l"), InputError);
}

TEST_CASE("synthetic fixture honours the mix and is seed deterministic") {
    SyntheticMix mix;
    mix.count = 400;
    mix.seed = 9;
    const auto a = synth_corpus(mix);
    const auto b = synth_corpus(mix);
    CHECK(encode_corpus(a.corpus) == encode_corpus(b.corpus));
    CHECK(a.labels == b.labels);
    CHECK(std::count(a.labels.begin(), a.labels.end(), InstanceLabel::noise) == 60);
    CHECK(std::count(a.labels.begin(), a.labels.end(), InstanceLabel::hard) == 200);
    mix.seed = 10;
    CHECK(encode_corpus(synth_corpus(mix).corpus) != encode_corpus(a.corpus));
    mix.noise_frac = 0.5;
    CHECK_THROWS_AS(synth_corpus(mix), ConfigError);
}
