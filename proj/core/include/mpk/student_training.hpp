#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpk/corpus.hpp"
#include "mpk/language_model.hpp"

namespace mpk {

/// Abstract compute units: per trained token a student costs
/// (forward + backward) * N_student and, when distilling, the teacher adds
/// teacher_forward * N_teacher. Defaults give 6N and 6N + 2N_teacher.
struct ComputeAccounting {
    std::uint64_t forward_multiplier = 2;
    std::uint64_t backward_multiplier = 4;
    std::uint64_t teacher_forward_multiplier = 2;

    std::uint64_t per_token(std::uint64_t student_params, std::uint64_t teacher_params = 0) const noexcept {
        return (forward_multiplier + backward_multiplier) * student_params +
               teacher_forward_multiplier * teacher_params;
    }
};

enum class TrainMethod : std::uint8_t { cross_entropy, forward_kld };

const char* to_string(TrainMethod m) noexcept;

struct CurvePoint {
    std::uint64_t compute_units = 0;
    double loss = 0.0;  // held-out nats per token
};

struct TrainingRun {
    TrainMethod method = TrainMethod::cross_entropy;
    TrainConfig config;
    std::uint32_t epochs = 1;
    std::uint64_t steps = 0;
    std::uint64_t tokens = 0;
    std::uint64_t compute_units = 0;
    std::vector<double> train_losses;  // one per optimizer step
    std::vector<CurvePoint> curve;
};

struct StudentResult {
    NeuralBigramModel model;
    TrainingRun run;
};

/// Epoch count that spends roughly one unselected-corpus pass: max(1, round(1/alpha)).
std::uint32_t default_epochs(double alpha);

struct TrainOptions {
    TrainConfig config;
    const PackedCorpus* eval = nullptr;     // held-out corpus; no curve when null
    ComputeAccounting accounting;
    /// Stop after the first step whose cumulative units reach this budget.
    std::optional<std::uint64_t> compute_budget;
    std::size_t eval_workers = 1;
};

/// Optimizer steps after which the held-out loss is recorded: every 10% of
/// the planned steps, plus the final step.
std::vector<std::uint64_t> eval_schedule(std::uint64_t total_steps);

/// Cross-entropy pretraining on `corpus` for `epochs` epochs. With epochs = 1
/// the parameters equal train_neural(corpus, options.config).
StudentResult pretrain_ce(const PackedCorpus& corpus, const TrainOptions& options);

/// Token-level forward-KL distillation from `teacher`; compute includes the
/// teacher's forward pass on every trained token.
StudentResult train_forward_kld(const Scorer& teacher, const PackedCorpus& corpus, const TrainOptions& options);

/// Held-out loss in nats per token (same definition as per_token_loss).
double eval_loss(const Scorer& model, const PackedCorpus& eval, std::size_t workers = 1);

/// Teacher-generated corpus for the sequence-level distillation baseline:
/// `count` sequences of length `seq_len`, sequence i drawn with derive_seed(seed, i).
PackedCorpus generate_corpus(const Scorer& teacher, std::size_t count, std::uint32_t seq_len, std::uint64_t seed);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> curve_from_csv(std::string_view text, const std::string& what);
void save_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> load_curve(const std::filesystem::path& path);

}  // namespace mpk
