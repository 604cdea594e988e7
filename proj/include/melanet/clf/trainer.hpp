#pragma once

#include <filesystem>
#include <vector>

#include "melanet/clf/focal.hpp"
#include "melanet/clf/model.hpp"
#include "melanet/dataset.hpp"

namespace melanet::clf {

struct ClassifierTrainConfig {
    double learning_rate = 0.001;
    int batch_size = 16;
    double plateau_factor = 0.1;
    int plateau_patience = 5;
    int early_stop_patience = 10;
    int max_epochs = 0;
    uint64_t seed = 0;
    double holdout_fraction = 0.0;  // >0 monitors a held-out split instead of train loss
    double min_improvement = 1e-4;
    double adadelta_rho = 0.95;
    double adadelta_eps = 1e-6;

    void validate() const;
};

struct TrainEpochLog {
    int epoch;
    double mean_focal_loss;  // the monitored loss
    double learning_rate;
};

struct TrainSummary {
    std::vector<TrainEpochLog> history;
    int best_epoch = 0;
    double best_loss = 0.0;
    bool early_stopped = false;
    std::string monitor;  // "train" or "holdout"
};

// Minimizes batch-mean focal loss with Adadelta over seeded mini-batch
// epochs; reduces the learning rate on plateaus, stops early once the
// monitored loss stalls, and restores the best-epoch weights.
TrainSummary train_classifier(Classifier& model, const LabelledDataset& train,
                              const FocalLossParams& focal, const ClassifierTrainConfig& config);

void write_train_log_csv(const std::vector<TrainEpochLog>& history,
                         const std::filesystem::path& path);

}  // namespace melanet::clf
