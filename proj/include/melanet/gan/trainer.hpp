#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "melanet/dataset.hpp"
#include "melanet/gan/discriminator.hpp"
#include "melanet/gan/generator.hpp"
#include "melanet/gan/losses.hpp"
#include "melanet/image.hpp"
#include "melanet/nn/optim.hpp"

namespace melanet::gan {

struct CycleGanConfig {
    double lambda_cyc = 10.0;
    double learning_rate = 0.0002;
    int batch_size = 1;
    int epochs = 0;
    double beta1 = 0.5;
    double beta2 = 0.999;
    GanLossForm loss_form = GanLossForm::log;
    uint64_t seed = 0;
    int checkpoint_interval = 0;  // epochs between checkpoint hooks; 0 = final only

    void validate() const;
};

enum class Direction { B_to_M, M_to_B };

struct EpochLosses {
    int epoch;
    double adv_bm;
    double adv_mb;
    double cycle;
    double total;
};

// Two generators and two patch discriminators trained with alternating
// updates: discriminators first, then both generators jointly against the
// refreshed discriminators. All randomness derives from (seed, epoch), so
// resuming from a checkpoint replays the exact uninterrupted trajectory.
class CycleGan {
  public:
    CycleGan(const GeneratorSpec& gen_spec, const DiscriminatorSpec& disc_spec,
             const CycleGanConfig& config, int image_side);

    using CheckpointHook = std::function<void(int epoch, CycleGan& model)>;

    // Inputs are tanh-range image batches of shape {1, C, side, side}.
    void train(const std::vector<Tensor>& benign, const std::vector<Tensor>& malignant,
               const CheckpointHook& on_checkpoint = nullptr);

    std::vector<ImageTensor> translate(const std::vector<ImageTensor>& images,
                                       Direction direction);

    void save(const std::filesystem::path& path);
    static CycleGan load(const std::filesystem::path& path);

    const std::vector<EpochLosses>& history() const { return history_; }
    int epoch() const { return epoch_; }
    int image_side() const { return image_side_; }
    const CycleGanConfig& config() const { return config_; }
    void set_epochs(int epochs) { config_.epochs = epochs; }

    UNetGenerator& generator_b2m() { return gen_b2m_; }
    UNetGenerator& generator_m2b() { return gen_m2b_; }
    nn::Sequential& discriminator_m() { return disc_m_; }
    nn::Sequential& discriminator_b() { return disc_b_; }

    // One alternated update on a single batch pair; returns the recorded
    // loss terms. Exposed so behaviour is testable below full epochs.
    EpochLosses train_step(const Tensor& real_b, const Tensor& real_m, int epoch, int step);

  private:
    Tensor stack_batch(const std::vector<Tensor>& pool, const std::vector<int>& order, int start,
                       int count) const;

    GeneratorSpec gen_spec_;
    DiscriminatorSpec disc_spec_;
    CycleGanConfig config_;
    int image_side_;

    UNetGenerator gen_b2m_;
    UNetGenerator gen_m2b_;
    nn::Sequential disc_m_;
    nn::Sequential disc_b_;
    nn::Adam opt_gb2m_, opt_gm2b_, opt_dm_, opt_db_;

    int epoch_ = 0;
    std::vector<EpochLosses> history_;
};

// Dataset-level entry point. Both sets must be non-empty, equal-sized
// (balanced beforehand), square, one shared side, tanh range.
CycleGan train_cyclegan(const LabelledDataset& benign, const LabelledDataset& malignant,
                        const GeneratorSpec& gen_spec, const DiscriminatorSpec& disc_spec,
                        const CycleGanConfig& config,
                        const CycleGan::CheckpointHook& on_checkpoint = nullptr);

// Loss history as a comma-separated table (epoch, adv_BM, adv_MB, cycle, total).
void write_loss_history_csv(const std::vector<EpochLosses>& history,
                            const std::filesystem::path& path);

}  // namespace melanet::gan
