#include "mpk/student_training.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"
#include "mpk/random.hpp"

namespace mpk {

namespace {

StudentResult run_training(const PackedCorpus& corpus, const TrainOptions& options, TrainMethod method,
                           const Scorer* teacher) {
    validate(options.config);
    if (corpus.empty()) throw InputError("training corpus is empty");
    if (options.eval) require_same_vocabulary(options.eval->vocabulary(), corpus.vocabulary(), "eval corpus");

    const std::uint64_t student_params =
        NeuralBigramModel(corpus.vocabulary_ptr(), options.config.dim).parameter_count();
    const std::uint64_t per_token =
        options.accounting.per_token(student_params, teacher ? teacher->parameter_count() : 0);
    const std::uint64_t steps_per_epoch = (corpus.size() + options.config.batch_size - 1) / options.config.batch_size;
    std::uint64_t planned = steps_per_epoch * options.config.epochs;
    if (options.compute_budget) {
        // Steps needed to reach the budget, each full batch costing the same.
        const std::uint64_t full = per_token * options.config.batch_size * corpus.seq_len();
        if (full > 0) planned = std::min(planned, (*options.compute_budget + full - 1) / full);
    }
    const auto schedule = eval_schedule(planned);

    TrainingRun run;
    run.method = method;
    run.config = options.config;
    run.epochs = options.config.epochs;
    std::size_t next_eval = 0;

    StepHook hook = [&](const StepInfo& info, const NeuralBigramModel& model) {
        run.tokens += info.tokens;
        run.compute_units += per_token * info.tokens;
        run.steps = info.step;
        run.train_losses.push_back(info.loss);
        const bool budget_hit = options.compute_budget && run.compute_units >= *options.compute_budget;
        const bool last = info.step == info.total_steps || budget_hit;
        if (options.eval) {
            while (next_eval < schedule.size() && schedule[next_eval] < info.step) ++next_eval;
            const bool scheduled = next_eval < schedule.size() && schedule[next_eval] == info.step;
            if (scheduled || last) {
                run.curve.push_back({run.compute_units, eval_loss(model, *options.eval, options.eval_workers)});
                if (scheduled) ++next_eval;
            }
        }
        return !budget_hit;
    };

    auto trained = train_neural(corpus, options.config, hook,
                                method == TrainMethod::forward_kld ? LossKind::forward_kld : LossKind::cross_entropy,
                                teacher);
    return StudentResult{std::move(trained.model), std::move(run)};
}

}  // namespace

const char* to_string(TrainMethod m) noexcept {
    return m == TrainMethod::cross_entropy ? "ce" : "forward_kld";
}

std::uint32_t default_epochs(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("default_epochs: alpha must be in (0, 1]");
    return static_cast<std::uint32_t>(std::max<long long>(1, std::llround(1.0 / alpha)));
}

std::vector<std::uint64_t> eval_schedule(std::uint64_t total_steps) {
    std::vector<std::uint64_t> out;
    if (total_steps == 0) return out;
    for (std::uint64_t j = 1; j <= 10; ++j) {
        const std::uint64_t s = std::max<std::uint64_t>(1, total_steps * j / 10);
        if (out.empty() || s > out.back()) out.push_back(s);
    }
    if (out.back() != total_steps) out.push_back(total_steps);
    return out;
}

StudentResult pretrain_ce(const PackedCorpus& corpus, const TrainOptions& options) {
    return run_training(corpus, options, TrainMethod::cross_entropy, nullptr);
}

StudentResult train_forward_kld(const Scorer& teacher, const PackedCorpus& corpus, const TrainOptions& options) {
    require_same_vocabulary(teacher.vocabulary(), corpus.vocabulary(), "train_forward_kld");
    return run_training(corpus, options, TrainMethod::forward_kld, &teacher);
}

double eval_loss(const Scorer& model, const PackedCorpus& eval, std::size_t workers) {
    require_same_vocabulary(model.vocabulary(), eval.vocabulary(), "eval_loss");
    return per_token_loss(model, eval, workers);
}

PackedCorpus generate_corpus(const Scorer& teacher, std::size_t count, std::uint32_t seq_len, std::uint64_t seed) {
    if (count == 0) throw ConfigError("generate_corpus: count must be positive");
    std::vector<TokenId> tokens;
    tokens.reserve(count * seq_len);
    for (std::size_t i = 0; i < count; ++i) {
        const auto seq = generate(teacher, {}, seq_len, derive_seed(seed, i));
        tokens.insert(tokens.end(), seq.begin(), seq.end());
    }
    return PackedCorpus(teacher.vocabulary_ptr(), seq_len, std::move(tokens));
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "compute_units,loss_nats_per_token\n";
    char buf[64];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%llu,%.17g\n", static_cast<unsigned long long>(p.compute_units), p.loss);
        out += buf;
    }
    return out;
}

std::vector<CurvePoint> curve_from_csv(std::string_view text, const std::string& what) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "compute_units,loss_nats_per_token")
        throw InputError(what + ": missing curve CSV header");
    std::vector<CurvePoint> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError(what + ":" + std::to_string(lineno) + ": expected 2 fields");
        try {
            std::size_t used = 0;
            CurvePoint p;
            p.compute_units = std::stoull(line.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("trailing");
            const auto rest = line.substr(comma + 1);
            p.loss = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("trailing");
            out.push_back(p);
        } catch (const std::logic_error&) {
            throw InputError(what + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return out;
}

void save_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
    write_file_atomic(path, curve_to_csv(curve));
}

std::vector<CurvePoint> load_curve(const std::filesystem::path& path) {
    return curve_from_csv(read_file(path), path.string());
}

}  // namespace mpk
