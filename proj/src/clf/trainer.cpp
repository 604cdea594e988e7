#include "melanet/clf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "melanet/errors.hpp"
#include "melanet/nn/optim.hpp"

namespace melanet::clf {

void ClassifierTrainConfig::validate() const {
    if (learning_rate <= 0) throw ConfigError("classifier training: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("classifier training: batch_size must be >= 1");
    if (plateau_factor <= 0 || plateau_factor >= 1)
        throw ConfigError("classifier training: plateau_factor must be in (0,1)");
    if (plateau_patience < 1 || early_stop_patience < 1)
        throw ConfigError("classifier training: patience values must be >= 1");
    if (max_epochs < 0) throw ConfigError("classifier training: max_epochs must be >= 0");
    if (holdout_fraction < 0 || holdout_fraction >= 1)
        throw ConfigError("classifier training: holdout_fraction must be in [0,1)");
}

namespace {

struct Prepared {
    std::vector<Tensor> images;  // {1,3,side,side} each
    std::vector<int> labels;
};

Prepared prepare(const LabelledDataset& ds, int side) {
    Prepared out;
    out.images.reserve(ds.samples.size());
    out.labels.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        if (s.image.range_tag != RangeTag::standardized_0_1)
            throw DataError("classifier training: sample '" + s.id +
                            "' is not standardized to [0,1]");
        if (s.image.height != side || s.image.width != side)
            throw DataError("classifier training: sample '" + s.id + "' is " +
                            std::to_string(s.image.height) + "x" +
                            std::to_string(s.image.width) + ", model expects " +
                            std::to_string(side));
        out.images.push_back(image_to_chw(s.image));
        out.labels.push_back(s.label == ClassLabel::malignant ? 1 : 0);
    }
    return out;
}

Tensor stack(const std::vector<Tensor>& pool, const std::vector<int>& order, int start,
             int count) {
    const Tensor& first = pool[static_cast<size_t>(order[start])];
    Tensor batch({count, first.shape[1], first.shape[2], first.shape[3]});
    size_t stride = first.data.size();
    for (int i = 0; i < count; ++i)
        std::copy_n(pool[static_cast<size_t>(order[start + i])].data.data(), stride,
                    batch.data.data() + i * stride);
    return batch;
}

double mean_loss_no_grad(Classifier& model, const Prepared& data, const FocalLossParams& focal) {
    double acc = 0.0;
    for (size_t i = 0; i < data.images.size(); ++i) {
        Tensor z = model.logits(data.images[i], 0, false);
        auto pr = Classifier::softmax2(z.data[0], z.data[1]);
        acc += focal_loss(pr[1], data.labels[i], focal);
    }
    return acc / static_cast<double>(data.images.size());
}

}  // namespace

TrainSummary train_classifier(Classifier& model, const LabelledDataset& train,
                              const FocalLossParams& focal,
                              const ClassifierTrainConfig& config) {
    config.validate();
    focal.validate();
    if (train.samples.empty()) throw DataError("classifier training: empty dataset");

    // optional monitoring split, carved off deterministically
    LabelledDataset train_part = train;
    LabelledDataset holdout_part;
    if (config.holdout_fraction > 0) {
        int n = static_cast<int>(train.samples.size());
        int n_hold = std::max(1, static_cast<int>(std::llround(config.holdout_fraction * n)));
        if (n_hold >= n)
            throw ConfigError("classifier training: holdout fraction leaves no training data");
        Rng rng(derive_seed(config.seed, "holdout_split"));
        std::vector<int> perm = rng.permutation(n);
        train_part.samples.clear();
        for (int i = 0; i < n; ++i) {
            const auto& s = train.samples[static_cast<size_t>(perm[i])];
            (i < n_hold ? holdout_part : train_part).samples.push_back(s);
        }
    }
    bool monitor_holdout = !holdout_part.samples.empty();

    Prepared data = prepare(train_part, model.input_side());
    Prepared holdout;
    if (monitor_holdout) holdout = prepare(holdout_part, model.input_side());

    int n = static_cast<int>(data.images.size());
    auto params = model.params();
    nn::Adadelta opt(config.learning_rate, config.adadelta_rho, config.adadelta_eps);

    TrainSummary summary;
    summary.monitor = monitor_holdout ? "holdout" : "train";
    double best_loss = std::numeric_limits<double>::infinity();
    std::map<std::string, std::vector<float>> best_weights;
    int best_epoch = 0;
    int since_improve = 0;
    int plateau_counter = 0;

    auto snapshot = [&] {
        best_weights.clear();
        for (const auto& p : params) best_weights[p.name] = p.value->data;
    };

    for (int e = 1; e <= config.max_epochs; ++e) {
        Rng rng(derive_seed(config.seed, "epoch:" + std::to_string(e)));
        std::vector<int> order = rng.permutation(n);

        double epoch_loss = 0.0;
        int covered = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            int count = std::min(config.batch_size, n - start);
            Tensor batch = stack(data.images, order, start, count);
            Tensor z = model.logits(batch, 0, true);

            Tensor grad_z(z.shape);
            double batch_loss = 0.0;
            for (int i = 0; i < count; ++i) {
                int label = data.labels[static_cast<size_t>(order[start + i])];
                auto pr = Classifier::softmax2(z.data[2 * i], z.data[2 * i + 1]);
                batch_loss += focal_loss(pr[1], label, focal);
                double dp = focal_loss_grad_p(pr[1], label, focal) / count;
                double dz1 = dp * pr[1] * (1.0 - pr[1]);  // softmax jacobian row
                grad_z.data[2 * i] = static_cast<float>(-dz1);
                grad_z.data[2 * i + 1] = static_cast<float>(dz1);
            }
            batch_loss /= count;
            if (!std::isfinite(batch_loss))
                throw TrainingError("non-finite focal loss at epoch " + std::to_string(e) +
                                    ", step " + std::to_string(start / config.batch_size));

            model.features_pre().zero_grad();
            model.features_post().zero_grad();
            model.head().zero_grad();
            Tensor g = model.head().backward(grad_z, 0);
            g = model.features_post().backward(g, 0);
            model.features_pre().backward(g, 0);
            opt.step(params);

            epoch_loss += batch_loss * count;
            covered += count;
        }
        epoch_loss /= covered;

        double monitored = monitor_holdout ? mean_loss_no_grad(model, holdout, focal)
                                           : epoch_loss;
        summary.history.push_back({e, monitored, opt.lr()});

        if (monitored < best_loss - config.min_improvement) {
            best_loss = monitored;
            best_epoch = e;
            since_improve = 0;
            plateau_counter = 0;
            snapshot();
        } else {
            ++since_improve;
            ++plateau_counter;
            if (plateau_counter >= config.plateau_patience) {
                opt.set_lr(opt.lr() * config.plateau_factor);
                plateau_counter = 0;
            }
            if (since_improve >= config.early_stop_patience) {
                summary.early_stopped = true;
                break;
            }
        }
    }

    if (!best_weights.empty()) {
        for (auto& p : params) p.value->data = best_weights.at(p.name);
    }
    summary.best_epoch = best_epoch;
    summary.best_loss = best_loss;
    return summary;
}

void write_train_log_csv(const std::vector<TrainEpochLog>& history,
                         const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    os << "epoch,mean_focal_loss,learning_rate\n";
    char buf[96];
    for (const auto& l : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", l.epoch, l.mean_focal_loss,
                      l.learning_rate);
        os << buf;
    }
}

}  // namespace melanet::clf
