#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include "mpk/analysis.hpp"
#include "mpk/binary_io.hpp"
#include "mpk/difference_sampler.hpp"
#include "mpk/error.hpp"
#include "mpk/random.hpp"
#include "mpk/scaling_law.hpp"
#include "mpk/scoring.hpp"
#include "mpk/student_training.hpp"
#include "mpk/topk_theory.hpp"

namespace mpk::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// --- shared parameter readers ------------------------------------------------

NGramParams ngram_params(const RunConfig& cfg, const json& local) {
    NGramParams p;
    auto apply = [&](const json& o) {
        if (o.contains("order")) {
            p.order = o["order"].get<std::uint32_t>();
            if (p.order < 1) throw ConfigError("ngram.order must be >= 1");
            if (!o.contains("lambdas")) p.lambdas.assign(p.order, 1.0 / p.order);
        }
        if (o.contains("lambdas")) p.lambdas = o["lambdas"].get<std::vector<double>>();
        if (o.contains("add_k")) p.add_k = o["add_k"].get<double>();
    };
    apply(cfg.document().value("ngram", json::object()));
    apply(local);
    validate(p);
    return p;
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
    const auto s = cfg.section("neural");
    TrainConfig c;
    c.dim = static_cast<std::uint32_t>(s.integer("dim", c.dim));
    c.learning_rate = s.number("learning_rate", c.learning_rate);
    c.epochs = static_cast<std::uint32_t>(s.integer("epochs", c.epochs));
    c.batch_size = static_cast<std::uint32_t>(s.integer("batch_size", c.batch_size));
    c.init_scale = s.number("init_scale", c.init_scale);
    c.seed = seed;
    validate(c);
    return c;
}

VocabKind vocab_kind(const std::string& s) {
    if (s == "byte") return VocabKind::byte;
    if (s == "word") return VocabKind::word;
    throw ConfigError("vocab must be 'byte' or 'word', got '" + s + "'");
}

Normalization normalization(const std::string& s) {
    if (s == "total") return Normalization::total;
    if (s == "per_token") return Normalization::per_token;
    throw ConfigError("normalization must be 'total' or 'per_token', got '" + s + "'");
}

enum class Role { main, teacher, eval };

Role parse_role(const std::string& s) {
    if (s == "main") return Role::main;
    if (s == "teacher") return Role::teacher;
    if (s == "eval") return Role::eval;
    throw ConfigError("ingest.role must be main, teacher or eval, got '" + s + "'");
}

/// Fixture corpora: `main` follows the configured mix; `teacher` is the same
/// language without noise; `eval` is hard instances only.
SyntheticMix synthetic_mix(const RunConfig& cfg, Role role) {
    const auto s = cfg.section("synthetic");
    SyntheticMix m;
    m.world_seed = s.integer("world_seed", m.world_seed);
    m.count = s.integer("count", m.count);
    m.seq_len = static_cast<std::uint32_t>(s.integer("seq_len", m.seq_len));
    m.vocab_words = static_cast<std::uint32_t>(s.integer("vocab_words", m.vocab_words));
    m.easy_frac = s.number("easy_frac", m.easy_frac);
    m.hard_frac = s.number("hard_frac", m.hard_frac);
    m.noise_frac = s.number("noise_frac", m.noise_frac);
    switch (role) {
        case Role::main: m.seed = stream_seed(cfg.seed(), "synthetic/main"); break;
        case Role::teacher: {
            const double clean = m.easy_frac + m.hard_frac;
            if (!(clean > 0.0)) throw ConfigError("synthetic: teacher corpus needs easy or hard mass");
            m.easy_frac /= clean;
            m.hard_frac = 1.0 - m.easy_frac;
            m.noise_frac = 0.0;
            m.count = s.integer("teacher_count", 2 * m.count);
            m.seed = stream_seed(cfg.seed(), "synthetic/teacher");
            break;
        }
        case Role::eval:
            m.easy_frac = 0.0;
            m.hard_frac = 1.0;
            m.noise_frac = 0.0;
            m.count = s.integer("eval_count", 200);
            m.seed = stream_seed(cfg.seed(), "synthetic/eval");
            break;
    }
    if (m.count == 0) throw ConfigError("synthetic: instance count must be positive");
    return m;
}

SplitSpec split_spec(const RunConfig& cfg, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("reference_fraction must be in [0, 1)");
    return {fraction, stream_seed(cfg.seed(), "split")};
}

// --- artifact readers through the stage (hash-checked) ----------------------

std::unique_ptr<Scorer> read_model(Stage& st, const fs::path& p) { return decode_model(st.read(p), p.string()); }
ScoreVector read_scores(Stage& st, const fs::path& p) { return decode_scores(st.read(p), p.string()); }
RewardVector read_rewards(Stage& st, const fs::path& p) { return decode_rewards(st.read(p), p.string()); }
SelectionResult read_selection(Stage& st, const fs::path& p) { return decode_selection(st.read(p), p.string()); }
std::vector<InstanceLabel> read_labels(Stage& st, const fs::path& p) { return decode_labels(st.read(p), p.string()); }

std::vector<CurvePoint> read_curve(Stage& st, const fs::path& p) { return curve_from_csv(st.read(p), p.string()); }

json read_json(Stage& st, const fs::path& p) {
    auto doc = json::parse(st.read(p), nullptr, false);
    if (doc.is_discarded()) throw InputError(p.string() + ": not valid JSON");
    return doc;
}

PackedCorpus apply_selection(const PackedCorpus& corpus, const SelectionResult& sel, const std::string& what) {
    std::vector<std::size_t> idx(sel.indices.begin(), sel.indices.end());
    for (auto i : idx)
        if (i >= corpus.size())
            throw InputError(what + ": selected index " + std::to_string(i) + " outside corpus of " +
                             std::to_string(corpus.size()));
    return corpus.subset(idx);
}

void require_aligned(const PackedCorpus& corpus, const Digest& hash, const std::string& what) {
    if (corpus_digest(corpus) != hash) throw InputError(what + ": was computed on a different corpus");
}

double cutoff_of(std::span<const double> rewards, const SelectionResult& sel) {
    double c = std::numeric_limits<double>::infinity();
    for (auto i : sel.indices) {
        if (i >= rewards.size()) throw InputError("selection index outside the reward vector");
        c = std::min(c, rewards[i]);
    }
    return sel.indices.empty() ? 0.0 : c;
}

json run_json(const TrainingRun& run, std::uint64_t params) {
    json curve = json::array();
    for (const auto& p : run.curve) curve.push_back({p.compute_units, p.loss});
    return {
        {"method", to_string(run.method)}, {"epochs", run.epochs},          {"steps", run.steps},
        {"tokens", run.tokens},            {"compute_units", run.compute_units}, {"parameters", params},
        {"final_eval_loss", run.curve.empty() ? json(nullptr) : json(run.curve.back().loss)},
    };
}

void note(const std::string& msg) { std::cout << msg << '\n'; }

// --- commands ------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("ingest");
    const auto source = s.string("source", "files");
    std::optional<PackedCorpus> corpus;
    std::vector<InstanceLabel> labels;
    if (source == "files") {
        const auto inputs = s.paths("inputs");
        if (inputs.empty()) throw ConfigError("ingest.inputs is empty");
        for (const auto& p : inputs) st.read(p);
        VocabularyPtr fixed;
        if (auto from = s.optional_path("vocab_from")) fixed = st.read_corpus(*from).vocabulary_ptr();
        const auto kind = fixed ? fixed->kind() : vocab_kind(s.string("vocab", "byte"));
        const auto stream = ingest_and_tokenize(inputs, kind, st.workers(), fixed);
        auto packed = pack_sequences(stream, static_cast<std::uint32_t>(s.integer("seq_len", kDefaultSeqLen)));
        note("ingest: " + std::to_string(packed.corpus.size()) + " instances, " + std::to_string(packed.dropped) +
             " trailing tokens dropped");
        corpus.emplace(std::move(packed.corpus));
    } else if (source == "synthetic") {
        auto synth = synth_corpus(synthetic_mix(cfg, parse_role(s.string("role", "main"))));
        corpus.emplace(std::move(synth.corpus));
        labels = std::move(synth.labels);
    } else {
        throw ConfigError("ingest.source must be 'files' or 'synthetic', got '" + source + "'");
    }

    st.emit_corpus(s.path("output"), *corpus);
    if (auto p = s.optional_path("labels")) {
        if (labels.empty()) throw ConfigError("ingest.labels is only available for synthetic sources");
        st.emit(*p, encode_labels(labels));
    }
    const double fraction = s.number("reference_fraction", 0.0);
    if (fraction > 0.0) {
        const auto split = uniform_split(*corpus, split_spec(cfg, fraction));
        st.emit_corpus(s.path("reference_output"), split.reference);
        st.emit_corpus(s.path("rest_output"), split.rest);
        if (auto p = s.optional_path("rest_labels")) {
            if (labels.empty()) throw ConfigError("ingest.rest_labels is only available for synthetic sources");
            std::vector<InstanceLabel> rest;
            for (auto i : split.rest_indices) rest.push_back(labels[i]);
            st.emit(*p, encode_labels(rest));
        }
    }
    return 0;
}

int cmd_train_lm(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("train_lm");
    const auto corpus = st.read_corpus(s.path("corpus"));
    const auto kind = s.string("kind", "ngram");
    if (kind == "ngram") {
        const auto model = train_ngram(corpus, ngram_params(cfg, s.object("ngram")));
        st.emit(s.path("output"), encode_model(model));
    } else if (kind == "neural") {
        const auto result = train_neural(corpus, train_config(cfg, stream_seed(cfg.seed(), "train-lm")));
        st.emit(s.path("output"), encode_model(result.model));
    } else {
        throw ConfigError("train_lm.kind must be 'ngram' or 'neural', got '" + kind + "'");
    }
    return 0;
}

int cmd_score(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("score");
    const auto model = read_model(st, s.path("model"));
    const auto corpus = st.read_corpus(s.path("corpus"));
    const auto scores = score_corpus(*model, corpus, st.workers(), normalization(s.string("normalization", "total")));
    st.emit(s.path("output"), encode_scores(scores));
    return 0;
}

int cmd_reward(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("reward");
    const auto teacher = read_scores(st, s.path("teacher_scores"));
    const auto reference = read_scores(st, s.path("reference_scores"));
    st.emit(s.path("output"), encode_rewards(compute_rewards(teacher, reference)));
    return 0;
}

SamplingConfig sampling(const RunConfig::Section& s) {
    SamplingConfig c;
    c.alpha = s.number("alpha", 0.5);
    if (s.has("k")) c.k = s.integer("k");
    return c;
}

int cmd_sample(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("sample");
    const auto rewards = read_rewards(st, s.path("rewards"));
    const auto sel = select_topk_sharded(rewards.values, sampling(s), st.workers());
    note("sample: kept " + std::to_string(sel.k) + " of " + std::to_string(rewards.values.size()));
    st.emit(s.path("output"), encode_selection(sel));
    return 0;
}

int cmd_partition(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("partition");
    const auto rewards = read_rewards(st, s.path("rewards"));
    auto sel = read_selection(st, s.path("selection"));
    sel.cutoff = cutoff_of(rewards.values, sel);
    std::vector<InstanceLabel> labels;
    if (auto p = s.optional_path("labels")) labels = read_labels(st, *p);
    const auto part = partition_regions(rewards.values, sel, s.number("hard_quantile", kDefaultHardQuantile));
    st.emit_json(s.path("output"), selection_report(rewards.values, sel, part, labels));
    return 0;
}

std::optional<PackedCorpus> optional_corpus(Stage& st, const std::optional<fs::path>& p) {
    if (!p) return std::nullopt;
    return st.read_corpus(*p);
}

void emit_training(Stage& st, const RunConfig::Section& s, const StudentResult& r) {
    st.emit(s.path("output_model"), encode_model(r.model));
    if (auto p = s.optional_path("output_curve")) st.emit(*p, curve_to_csv(r.run.curve));
}

int cmd_pretrain(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("pretrain");
    auto corpus = st.read_corpus(s.path("corpus"));
    if (auto p = s.optional_path("selection")) corpus = apply_selection(corpus, read_selection(st, *p), p->string());
    const auto eval = optional_corpus(st, s.optional_path("eval"));
    TrainOptions o;
    o.config = train_config(cfg, stream_seed(cfg.seed(), "pretrain"));
    if (s.has("epochs")) o.config.epochs = static_cast<std::uint32_t>(s.integer("epochs"));
    else if (s.has("alpha")) o.config.epochs = default_epochs(s.number("alpha"));
    o.eval = eval ? &*eval : nullptr;
    o.eval_workers = st.workers();
    const auto r = pretrain_ce(corpus, o);
    emit_training(st, s, r);
    return 0;
}

int cmd_kd_train(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("kd_train");
    const auto teacher = read_model(st, s.path("teacher"));
    auto corpus = st.read_corpus(s.path("corpus"));
    if (auto p = s.optional_path("selection")) corpus = apply_selection(corpus, read_selection(st, *p), p->string());
    const auto eval = optional_corpus(st, s.optional_path("eval"));
    TrainOptions o;
    o.config = train_config(cfg, stream_seed(cfg.seed(), "kd-train"));
    if (s.has("epochs")) o.config.epochs = static_cast<std::uint32_t>(s.integer("epochs"));
    o.eval = eval ? &*eval : nullptr;
    o.eval_workers = st.workers();
    if (s.has("compute_budget")) {
        o.compute_budget = s.integer("compute_budget");
    } else if (auto p = s.optional_path("budget_curve")) {
        const auto curve = read_curve(st, *p);
        if (curve.empty()) throw InputError(p->string() + ": curve has no points");
        o.compute_budget = curve.back().compute_units;
    }
    const auto r = train_forward_kld(*teacher, corpus, o);
    note("kd-train: " + std::to_string(r.run.steps) + " steps, " + std::to_string(r.run.compute_units) +
         " compute units");
    emit_training(st, s, r);
    return 0;
}

int cmd_eval(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("eval");
    const auto model = read_model(st, s.path("model"));
    const auto corpus = st.read_corpus(s.path("corpus"));
    const double loss = eval_loss(*model, corpus, st.workers());
    st.emit_json(s.path("output"), {{"loss_nats_per_token", loss},
                                    {"instances", corpus.size()},
                                    {"tokens", corpus.token_count()},
                                    {"model_kind", std::string(model->kind_name())},
                                    {"parameters", model->parameter_count()}});
    return 0;
}

int cmd_fit_scaling(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("fit_scaling");
    const auto curve = read_curve(st, s.path("curve"));
    FitOptions o;
    o.grid_points = s.integer("grid_points", o.grid_points);
    o.alpha_min = s.number("alpha_min", o.alpha_min);
    o.alpha_max = s.number("alpha_max", o.alpha_max);
    o.huber = s.boolean("huber", o.huber);
    o.huber_delta = s.number("huber_delta", o.huber_delta);
    std::vector<double> c, l;
    for (const auto& p : curve) {
        c.push_back(static_cast<double>(p.compute_units));
        l.push_back(p.loss);
    }
    const auto fit = fit_power_law(c, l, o);
    st.emit_json(s.path("output"), fit_report(fit, o, curve.size()));
    if (fit.degenerate) {
        std::cerr << "fit-scaling: degenerate fit (amplitude clamped to zero)\n";
        return 4;
    }
    return 0;
}

int cmd_solve_data(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("solve_data");
    const auto doc = read_json(st, s.path("fit"));
    PowerLawFit fit;
    try {
        fit.l_inf = doc.at("l_inf").get<double>();
        fit.a = doc.at("a").get<double>();
        fit.alpha = doc.at("alpha").get<double>();
    } catch (const json::exception&) {
        throw InputError(s.path("fit").string() + ": not a fit report");
    }
    const auto req = solve_data_constrained(fit, s.number("target"), s.number("repeat_cap", 4.0));
    st.emit_json(s.path("output"), {{"target", s.number("target")},
                                    {"tokens", req.tokens},
                                    {"unique_tokens", req.unique_tokens},
                                    {"repeat_cap", req.repeat_cap}});
    return 0;
}

int cmd_prop1(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("prop1");
    DiscreteSpace space{s.numbers("p1"), s.numbers("p2"), s.numbers("rewards")};
    const auto ladder = s.integers("ladder");
    SweepOptions o;
    o.trials = s.integer("trials", o.trials);
    o.seed = stream_seed(cfg.seed(), "prop1");
    o.workers = st.workers();
    const auto rows = convergence_sweep(space, s.integer("k", 1), ladder, o);
    st.emit(s.path("output"), sweep_to_csv(rows));
    return 0;
}

int cmd_proxy(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("proxy");
    const auto corpus = st.read_corpus(s.path("corpus"));
    const auto rewards = read_rewards(st, s.path("rewards"));
    require_aligned(corpus, rewards.corpus_hash, s.path("rewards").string());
    const auto kind = parse_feature_kind(s.string("features", "counts"));
    std::unique_ptr<Scorer> model;
    if (auto p = s.optional_path("model")) model = read_model(st, *p);
    const auto features = extract_features(model.get(), corpus, kind, st.workers());

    // The head is fit on a seeded subset (all rows by default) and applied to every row.
    const double fraction = s.number("fit_fraction", 1.0);
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("proxy.fit_fraction must be in (0, 1]");
    std::vector<std::size_t> rows(corpus.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (fraction < 1.0) {
        Rng rng(stream_seed(cfg.seed(), "proxy/fit"));
        rng.shuffle(rows.begin(), rows.end());
        rows.resize(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * rows.size()))));
        std::sort(rows.begin(), rows.end());
    }
    FeatureMatrix fit_rows{features.kind, features.d, rows.size(), {}};
    std::vector<double> fit_targets;
    for (auto i : rows) {
        const auto r = features.row(i);
        fit_rows.values.insert(fit_rows.values.end(), r.begin(), r.end());
        fit_targets.push_back(rewards.values[i]);
    }
    const auto head = fit_linear_head(fit_rows, fit_targets, s.number("lambda", 1e-3));
    const auto predicted = predict_rewards(head, features);

    SamplingConfig sc;
    sc.alpha = s.number("alpha", 0.5);
    const auto proxy_sel = select_topk(predicted, sc);
    const auto true_sel = select_topk(rewards.values, sc);
    std::set<std::uint64_t> truth(true_sel.indices.begin(), true_sel.indices.end());
    std::size_t overlap = 0;
    for (auto i : proxy_sel.indices) overlap += truth.count(i);
    const auto corr = rank_correlation(predicted, rewards.values);

    st.emit(s.path("output_selection"), encode_selection(proxy_sel));
    if (auto p = s.optional_path("output_features")) st.emit(*p, encode_features(features));
    if (auto p = s.optional_path("output_report"))
        st.emit_json(*p, {{"features", to_string(kind)},
                          {"dim", features.d},
                          {"fit_rows", rows.size()},
                          {"lambda", head.lambda},
                          {"train_sse", head.sse},
                          {"bias", head.b},
                          {"pearson", corr.pearson},
                          {"spearman", corr.spearman},
                          {"k", proxy_sel.k},
                          {"topk_overlap", static_cast<double>(overlap) / static_cast<double>(proxy_sel.k)}});
    return 0;
}

double corpus_vendi(const PackedCorpus& corpus, std::size_t max_instances, std::uint64_t seed, std::size_t workers) {
    std::vector<std::size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (idx.size() > max_instances) {
        Rng rng(seed);
        rng.shuffle(idx.begin(), idx.end());
        idx.resize(max_instances);
        std::sort(idx.begin(), idx.end());
    }
    const auto sub = corpus.subset(idx);
    const auto f = extract_features(nullptr, sub, FeatureKind::counts, workers);
    return vendi_score(cosine_kernel(f), f.n);
}

int cmd_diversity(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("diversity");
    const auto paths = s.paths("corpora");
    const auto cap = s.integer("max_instances", kMaxVendiSize);
    if (cap < 1 || cap > kMaxVendiSize)
        throw ConfigError("diversity.max_instances must be in [1, " + std::to_string(kMaxVendiSize) + "]");
    json rows = json::array();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto corpus = st.read_corpus(paths[i]);
        const double vs = corpus_vendi(corpus, cap, derive_seed(stream_seed(cfg.seed(), "diversity"), i), st.workers());
        rows.push_back({{"name", paths[i].filename().string()},
                        {"instances", corpus.size()},
                        {"scored_instances", std::min<std::uint64_t>(corpus.size(), cap)},
                        {"vendi", vs}});
    }
    st.emit_json(s.path("output"), {{"kernel", "cosine/unigram-counts"}, {"corpora", rows}});
    return 0;
}

// --- pipeline ------------------------------------------------------------------

int cmd_pipeline(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("pipeline");
    const fs::path dir = s.optional_path("workdir").value_or(cfg.resolve("pipeline_out"));
    const auto source = s.string("source", "synthetic");
    const double alpha = s.number("alpha", 0.5);
    const double ref_fraction = s.number("reference_fraction", 0.1);
    if (!(ref_fraction > 0.0)) throw ConfigError("pipeline.reference_fraction must be positive");

    // Step 0: corpora.
    std::optional<PackedCorpus> corpus, teacher_corpus, eval_corpus;
    std::vector<InstanceLabel> labels;
    if (source == "synthetic") {
        auto main = synth_corpus(synthetic_mix(cfg, Role::main));
        corpus.emplace(std::move(main.corpus));
        labels = std::move(main.labels);
        teacher_corpus.emplace(synth_corpus(synthetic_mix(cfg, Role::teacher)).corpus);
        eval_corpus.emplace(synth_corpus(synthetic_mix(cfg, Role::eval)).corpus);
        st.emit(dir / "corpus.labels", encode_labels(labels));
    } else if (source == "files") {
        const auto seq_len = static_cast<std::uint32_t>(s.integer("seq_len", kDefaultSeqLen));
        auto load = [&](const std::vector<fs::path>& inputs, VocabKind kind, VocabularyPtr fixed) {
            for (const auto& p : inputs) st.read(p);
            return pack_sequences(ingest_and_tokenize(inputs, kind, st.workers(), std::move(fixed)), seq_len).corpus;
        };
        corpus.emplace(load(s.paths("inputs"), vocab_kind(s.string("vocab", "byte")), nullptr));
        const auto kind = corpus->vocabulary().kind();
        teacher_corpus.emplace(s.has("teacher_inputs")
                                   ? load(s.paths("teacher_inputs"), kind, corpus->vocabulary_ptr())
                                   : *corpus);
        if (s.has("eval_inputs")) eval_corpus.emplace(load(s.paths("eval_inputs"), kind, corpus->vocabulary_ptr()));
    } else {
        throw ConfigError("pipeline.source must be 'synthetic' or 'files', got '" + source + "'");
    }
    st.emit_corpus(dir / "corpus.mpkc", *corpus);
    if (eval_corpus) st.emit_corpus(dir / "eval.mpkc", *eval_corpus);

    // Step 1: uniform reference subset.
    const auto split = uniform_split(*corpus, split_spec(cfg, ref_fraction));
    if (split.reference.empty() || split.rest.empty())
        throw ConfigError("pipeline: reference_fraction leaves an empty reference or remainder");
    st.emit_corpus(dir / "reference.mpkc", split.reference);
    st.emit_corpus(dir / "rest.mpkc", split.rest);

    // Step 2: teacher and reference models.
    const auto teacher = train_ngram(*teacher_corpus, ngram_params(cfg, s.object("teacher")));
    const auto reference = train_ngram(split.reference, ngram_params(cfg, s.object("reference")));
    st.emit(dir / "teacher.mpkm", encode_model(teacher));
    st.emit(dir / "reference.mpkm", encode_model(reference));

    // Step 3: difference sampling on D - D_ref.
    const auto t_scores = score_corpus(teacher, split.rest, st.workers());
    const auto r_scores = score_corpus(reference, split.rest, st.workers());
    const auto rewards = compute_rewards(t_scores, r_scores);
    const auto sel = select_topk_sharded(rewards.values, {alpha, {}}, st.workers());
    std::vector<InstanceLabel> rest_labels;
    for (auto i : split.rest_indices)
        if (!labels.empty()) rest_labels.push_back(labels[i]);
    const auto part = partition_regions(rewards.values, sel, s.number("hard_quantile", kDefaultHardQuantile));
    const auto report = selection_report(rewards.values, sel, part, rest_labels);
    st.emit(dir / "teacher_scores.mpks", encode_scores(t_scores));
    st.emit(dir / "reference_scores.mpks", encode_scores(r_scores));
    st.emit(dir / "rewards.mpkr", encode_rewards(rewards));
    st.emit(dir / "selection.mpki", encode_selection(sel));
    st.emit_json(dir / "selection_report.json", report);

    // Step 4: pre-train the student on D'.
    const auto refined = apply_selection(split.rest, sel, "pipeline");
    TrainOptions o;
    o.config = train_config(cfg, stream_seed(cfg.seed(), "pretrain"));
    o.config.epochs = s.has("epochs") ? static_cast<std::uint32_t>(s.integer("epochs")) : default_epochs(alpha);
    o.eval = eval_corpus ? &*eval_corpus : nullptr;
    o.eval_workers = st.workers();
    const auto student = pretrain_ce(refined, o);
    st.emit(dir / "student.mpkm", encode_model(student.model));
    st.emit(dir / "student_curve.csv", curve_to_csv(student.run.curve));

    json summary = {
        {"source", source},
        {"instances", corpus->size()},
        {"reference_instances", split.reference.size()},
        {"selected", sel.k},
        {"alpha", alpha},
        {"student", run_json(student.run, student.model.parameter_count())},
        {"regions", report["regions"]},
    };
    if (report.contains("labels")) summary["noise_excluded_rate"] = report["labels"]["noise"]["excluded_rate"];

    if (s.boolean("baseline", true)) {
        // Same-size uniform sample of D - D_ref, same schedule.
        std::vector<std::size_t> idx(split.rest.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(stream_seed(cfg.seed(), "baseline"));
        rng.shuffle(idx.begin(), idx.end());
        idx.resize(sel.k);
        std::sort(idx.begin(), idx.end());
        const auto base = pretrain_ce(split.rest.subset(idx), o);
        st.emit(dir / "baseline_student.mpkm", encode_model(base.model));
        st.emit(dir / "baseline_curve.csv", curve_to_csv(base.run.curve));
        summary["baseline"] = run_json(base.run, base.model.parameter_count());
    }
    st.emit_json(dir / "summary.json", summary);
    note("pipeline: selected " + std::to_string(sel.k) + " of " + std::to_string(split.rest.size()) +
         " instances; outputs in " + dir.string());
    return 0;
}

// --- report ----------------------------------------------------------------------

json describe(const std::string& name, const std::string& bytes) {
    json d = {{"name", name}, {"sha256", to_hex(sha256(bytes))}, {"bytes", bytes.size()}};
    const auto magic = bytes.substr(0, std::min<std::size_t>(4, bytes.size()));
    auto stats = [](const std::vector<double>& v) {
        if (v.empty()) return json{{"count", 0}};
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        return json{{"count", v.size()},
                    {"mean", std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size())},
                    {"min", *mn},
                    {"max", *mx}};
    };
    if (magic == "MPKS") {
        const auto s = decode_scores(bytes, name);
        d["kind"] = "scores";
        d["normalization"] = to_string(s.normalization);
        d["summary"] = stats(s.values);
    } else if (magic == "MPKR") {
        d["kind"] = "rewards";
        d["summary"] = stats(decode_rewards(bytes, name).values);
    } else if (magic == "MPKI") {
        d["kind"] = "selection";
        d["k"] = decode_selection(bytes, name).k;
    } else if (magic == "MPKC") {
        ByteReader r(bytes, name);
        r.expect_magic("MPKC");
        r.u32();
        d["kind"] = "corpus";
        d["vocab_size"] = r.u32();
        d["seq_len"] = r.u32();
        d["instances"] = r.u64();
    } else if (magic == "MPKM") {
        const auto m = decode_model(bytes, name);
        d["kind"] = "model";
        d["model_kind"] = std::string(m->kind_name());
        d["parameters"] = m->parameter_count();
    } else if (magic == "MPKF") {
        const auto f = decode_features(bytes, name);
        d["kind"] = "features";
        d["n"] = f.n;
        d["d"] = f.d;
    } else if (bytes.rfind("compute_units,", 0) == 0) {
        const auto curve = curve_from_csv(bytes, name);
        d["kind"] = "curve";
        d["points"] = curve.size();
        if (!curve.empty()) d["final"] = {curve.back().compute_units, curve.back().loss};
    } else if (auto doc = json::parse(bytes, nullptr, false); !doc.is_discarded()) {
        d["kind"] = "json";
        d["content"] = doc;
    } else {
        d["kind"] = "other";
    }
    return d;
}

int cmd_report(const RunConfig& cfg, Stage& st) {
    const auto s = cfg.section("report");
    json items = json::array();
    for (const auto& p : s.paths("inputs")) items.push_back(describe(p.filename().string(), st.read(p)));
    st.emit_json(s.path("output"), {{"artifacts", items}});
    return 0;
}

}  // namespace

const std::map<std::string, CommandFn>& commands() {
    static const std::map<std::string, CommandFn> table{
        {"ingest", cmd_ingest},       {"train-lm", cmd_train_lm},       {"score", cmd_score},
        {"reward", cmd_reward},       {"sample", cmd_sample},           {"partition", cmd_partition},
        {"pretrain", cmd_pretrain},   {"kd-train", cmd_kd_train},       {"eval", cmd_eval},
        {"fit-scaling", cmd_fit_scaling}, {"solve-data", cmd_solve_data}, {"prop1", cmd_prop1},
        {"proxy", cmd_proxy},         {"diversity", cmd_diversity},     {"pipeline", cmd_pipeline},
        {"report", cmd_report},
    };
    return table;
}

}  // namespace mpk::cli
