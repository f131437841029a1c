#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpk/corpus.hpp"
#include "mpk/error.hpp"
#include "mpk/random.hpp"

namespace mpk {

namespace {

constexpr std::size_t kMotifLength = 4;
constexpr double kMotifSubstitution = 0.03;
constexpr std::size_t kTopicCount = 16;
constexpr std::uint32_t kTopicSize = 12;

// A hard "topic": a second-order chain over a word subset. The next word is the
// first-order successor of prev1 with probability first_weight, else the
// successor of (prev2, prev1). Positions index into `words`.
struct Topic {
    std::vector<TokenId> words;
    std::vector<std::uint32_t> first_order;
    std::vector<std::uint32_t> second_order;
    double first_weight = 0.6;
};

struct World {
    std::uint32_t words = 0;
    std::uint32_t pool = 0;
    std::vector<std::vector<TokenId>> motifs;
    std::vector<Topic> topics;
};

World make_world(std::uint64_t world_seed, std::uint32_t words) {
    World w;
    w.words = words;
    w.pool = std::max<std::uint32_t>(4, words / 12);
    Rng rng(stream_seed(world_seed, "synthetic/world"));

    // Disjoint cycles over the shuffled pool, so each easy token is fixed by its predecessor.
    std::vector<TokenId> pool_ids(w.pool);
    std::iota(pool_ids.begin(), pool_ids.end(), TokenId{0});
    rng.shuffle(pool_ids.begin(), pool_ids.end());
    for (std::size_t start = 0; start + kMotifLength <= pool_ids.size(); start += kMotifLength)
        w.motifs.emplace_back(pool_ids.begin() + static_cast<std::ptrdiff_t>(start),
                              pool_ids.begin() + static_cast<std::ptrdiff_t>(start + kMotifLength));
    // Topics draw from the words outside the easy pool (all words if too few).
    std::vector<TokenId> rest(words - w.pool);
    std::iota(rest.begin(), rest.end(), w.pool);
    if (rest.size() < 4) {
        rest.resize(words);
        std::iota(rest.begin(), rest.end(), TokenId{0});
    }
    const auto size = std::min<std::uint32_t>(kTopicSize, static_cast<std::uint32_t>(rest.size()));
    for (std::size_t t = 0; t < kTopicCount; ++t) {
        Topic topic;
        rng.shuffle(rest.begin(), rest.end());
        topic.words.assign(rest.begin(), rest.begin() + size);
        topic.first_order.resize(size);
        for (auto& x : topic.first_order) x = static_cast<std::uint32_t>(rng.uniform_index(size));
        topic.second_order.resize(static_cast<std::size_t>(size) * size);
        for (auto& x : topic.second_order) x = static_cast<std::uint32_t>(rng.uniform_index(size));
        topic.first_weight = 0.4 + 0.4 * rng.uniform();
        w.topics.push_back(std::move(topic));
    }
    return w;
}

void fill_easy(const World& w, Rng& rng, std::span<TokenId> out) {
    const auto& motif = w.motifs[rng.uniform_index(w.motifs.size())];
    auto phase = rng.uniform_index(motif.size());
    for (auto& t : out) {
        t = motif[phase];
        phase = (phase + 1) % motif.size();
        if (rng.uniform() < kMotifSubstitution) t = static_cast<TokenId>(rng.uniform_index(w.pool));
    }
}

void fill_hard(const World& w, Rng& rng, std::span<TokenId> out) {
    const auto& topic = w.topics[rng.uniform_index(w.topics.size())];
    const auto size = topic.words.size();
    auto prev2 = static_cast<std::uint32_t>(rng.uniform_index(size));
    auto prev1 = static_cast<std::uint32_t>(rng.uniform_index(size));
    for (auto& t : out) {
        const auto next = rng.uniform() < topic.first_weight ? topic.first_order[prev1]
                                                              : topic.second_order[prev2 * size + prev1];
        t = topic.words[next];
        prev2 = prev1;
        prev1 = next;
    }
}

void fill_noise(const World& w, Rng& rng, std::span<TokenId> out) {
    for (auto& t : out) t = static_cast<TokenId>(rng.uniform_index(w.words));
}

}  // namespace

SyntheticCorpus synth_corpus(const SyntheticMix& mix) {
    if (mix.easy_frac < 0 || mix.hard_frac < 0 || mix.noise_frac < 0)
        throw ConfigError("synth_corpus: fractions must be nonnegative");
    if (std::abs(mix.easy_frac + mix.hard_frac + mix.noise_frac - 1.0) > 1e-9)
        throw ConfigError("synth_corpus: fractions must sum to 1");
    if (mix.vocab_words < 8) throw ConfigError("synth_corpus: vocab_words must be >= 8");
    if (mix.seq_len < 2) throw ConfigError("synth_corpus: seq_len must be >= 2");

    const auto n = mix.count;
    const auto n_noise = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(mix.noise_frac * n)));
    const auto n_hard =
        std::min<std::size_t>(n - n_noise, static_cast<std::size_t>(std::llround(mix.hard_frac * n)));
    std::vector<InstanceLabel> labels(n, InstanceLabel::easy);
    std::fill_n(labels.begin(), n_noise, InstanceLabel::noise);
    std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(n_noise), n_hard, InstanceLabel::hard);
    Rng order_rng(stream_seed(mix.seed, "synthetic/labels"));
    order_rng.shuffle(labels.begin(), labels.end());

    const World world = make_world(mix.world_seed, mix.vocab_words);
    std::vector<std::string> names(mix.vocab_words);
    for (std::uint32_t i = 0; i < mix.vocab_words; ++i) names[i] = "w" + std::to_string(i);
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::words(std::move(names)));

    std::vector<TokenId> tokens(n * mix.seq_len);
    const auto instance_base = stream_seed(mix.seed, "synthetic/instances");
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(instance_base, i));
        std::span<TokenId> out(tokens.data() + i * mix.seq_len, mix.seq_len);
        switch (labels[i]) {
            case InstanceLabel::easy: fill_easy(world, rng, out); break;
            case InstanceLabel::hard: fill_hard(world, rng, out); break;
            case InstanceLabel::noise: fill_noise(world, rng, out); break;
        }
    }
    return SyntheticCorpus{PackedCorpus(std::move(vocab), mix.seq_len, std::move(tokens)), std::move(labels)};
}

}  // namespace mpk
