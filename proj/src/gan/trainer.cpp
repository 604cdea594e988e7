#include "melanet/gan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "melanet/errors.hpp"
#include "melanet/nn/checkpoint.hpp"

namespace melanet::gan {

void CycleGanConfig::validate() const {
    if (lambda_cyc < 0) throw ConfigError("cyclegan: lambda_cyc must be >= 0");
    if (learning_rate <= 0) throw ConfigError("cyclegan: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("cyclegan: batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("cyclegan: epochs must be >= 0");
    if (checkpoint_interval < 0) throw ConfigError("cyclegan: checkpoint_interval must be >= 0");
}

CycleGan::CycleGan(const GeneratorSpec& gen_spec, const DiscriminatorSpec& disc_spec,
                   const CycleGanConfig& config, int image_side)
    : gen_spec_(gen_spec),
      disc_spec_(disc_spec),
      config_(config),
      image_side_(image_side),
      gen_b2m_([&] {
          Rng rng(derive_seed(config.seed, "init:gen_b2m"));
          return UNetGenerator(gen_spec, rng);
      }()),
      gen_m2b_([&] {
          Rng rng(derive_seed(config.seed, "init:gen_m2b"));
          return UNetGenerator(gen_spec, rng);
      }()),
      disc_m_([&] {
          Rng rng(derive_seed(config.seed, "init:disc_m"));
          return build_patch_discriminator(disc_spec, rng);
      }()),
      disc_b_([&] {
          Rng rng(derive_seed(config.seed, "init:disc_b"));
          return build_patch_discriminator(disc_spec, rng);
      }()),
      opt_gb2m_(config.learning_rate, config.beta1, config.beta2),
      opt_gm2b_(config.learning_rate, config.beta1, config.beta2),
      opt_dm_(config.learning_rate, config.beta1, config.beta2),
      opt_db_(config.learning_rate, config.beta1, config.beta2) {
    config_.validate();
    if (image_side_ % (1 << gen_spec_.depth) != 0)
        throw ConfigError("cyclegan: image side " + std::to_string(image_side_) +
                          " not divisible by 2^" + std::to_string(gen_spec_.depth));
    if (image_side_ < min_discriminator_input(disc_spec_))
        throw ConfigError("cyclegan: image side " + std::to_string(image_side_) +
                          " below discriminator minimum " +
                          std::to_string(min_discriminator_input(disc_spec_)));
}

Tensor CycleGan::stack_batch(const std::vector<Tensor>& pool, const std::vector<int>& order,
                             int start, int count) const {
    const Tensor& first = pool[static_cast<size_t>(order[start])];
    int c = first.shape[1], h = first.shape[2], w = first.shape[3];
    Tensor batch({count, c, h, w});
    size_t stride = static_cast<size_t>(c) * h * w;
    for (int i = 0; i < count; ++i) {
        const Tensor& img = pool[static_cast<size_t>(order[start + i])];
        std::copy_n(img.data.data(), stride, batch.data.data() + i * stride);
    }
    return batch;
}

EpochLosses CycleGan::train_step(const Tensor& real_b, const Tensor& real_m, int epoch,
                                 int step) {
    auto fail_if_bad = [&](double v, const char* what) {
        if (!std::isfinite(v))
            throw TrainingError(std::string("non-finite ") + what + " at epoch " +
                                std::to_string(epoch) + ", step " + std::to_string(step));
    };

    Tensor fake_m = gen_b2m_.forward(real_b, 0, true);
    Tensor fake_b = gen_m2b_.forward(real_m, 0, true);

    // discriminators first
    Tensor dm_real = disc_m_.forward(real_m, 0, true);
    Tensor dm_fake = disc_m_.forward(fake_m, 1, true);
    Tensor db_real = disc_b_.forward(real_b, 0, true);
    Tensor db_fake = disc_b_.forward(fake_b, 1, true);

    double adv_bm = adversarial_loss(dm_real, dm_fake);
    double adv_mb = adversarial_loss(db_real, db_fake);
    fail_if_bad(adv_bm, "adversarial loss (B->M)");
    fail_if_bad(adv_mb, "adversarial loss (M->B)");

    Tensor grad_real, grad_fake;
    double dm_loss = discriminator_loss(dm_real, dm_fake, config_.loss_form, &grad_real,
                                        &grad_fake);
    fail_if_bad(dm_loss, "discriminator loss (D_M)");
    disc_m_.zero_grad();
    disc_m_.backward(grad_real, 0);
    disc_m_.backward(grad_fake, 1);
    auto dm_params = disc_m_.params();
    opt_dm_.step(dm_params);

    double db_loss = discriminator_loss(db_real, db_fake, config_.loss_form, &grad_real,
                                        &grad_fake);
    fail_if_bad(db_loss, "discriminator loss (D_B)");
    disc_b_.zero_grad();
    disc_b_.backward(grad_real, 0);
    disc_b_.backward(grad_fake, 1);
    auto db_params = disc_b_.params();
    opt_db_.step(db_params);

    // generators jointly, scored against the updated discriminators
    Tensor rec_b = gen_m2b_.forward(fake_m, 1, true);
    Tensor rec_m = gen_b2m_.forward(fake_b, 1, true);
    Tensor dm_fake2 = disc_m_.forward(fake_m, 0, true);
    Tensor db_fake2 = disc_b_.forward(fake_b, 0, true);

    Tensor g_dm_fake, g_db_fake, g_rec_b, g_rec_m;
    double gen_adv_m = generator_adversarial_loss(dm_fake2, config_.loss_form, &g_dm_fake);
    double gen_adv_b = generator_adversarial_loss(db_fake2, config_.loss_form, &g_db_fake);
    double cyc = l1_mean(rec_b, real_b, &g_rec_b) + l1_mean(rec_m, real_m, &g_rec_m);
    fail_if_bad(gen_adv_m + gen_adv_b, "generator adversarial loss");
    fail_if_bad(cyc, "cycle-consistency loss");

    gen_b2m_.zero_grad();
    gen_m2b_.zero_grad();
    scale_inplace(g_rec_b, static_cast<float>(config_.lambda_cyc));
    scale_inplace(g_rec_m, static_cast<float>(config_.lambda_cyc));

    Tensor grad_fake_m = disc_m_.backward(g_dm_fake, 0);
    add_inplace(grad_fake_m, gen_m2b_.backward(g_rec_b, 1));
    gen_b2m_.backward(grad_fake_m, 0);

    Tensor grad_fake_b = disc_b_.backward(g_db_fake, 0);
    add_inplace(grad_fake_b, gen_b2m_.backward(g_rec_m, 1));
    gen_m2b_.backward(grad_fake_b, 0);

    auto gb_params = gen_b2m_.params();
    auto gm_params = gen_m2b_.params();
    opt_gb2m_.step(gb_params);
    opt_gm2b_.step(gm_params);

    return {epoch, adv_bm, adv_mb, cyc,
            total_objective(adv_bm, adv_mb, cyc, config_.lambda_cyc)};
}

void CycleGan::train(const std::vector<Tensor>& benign, const std::vector<Tensor>& malignant,
                     const CheckpointHook& on_checkpoint) {
    if (benign.empty() || malignant.empty())
        throw DataError("translation training requires non-empty domains");
    if (benign.size() != malignant.size())
        throw DataError("translation training requires balanced domains, got " +
                        std::to_string(benign.size()) + " vs " +
                        std::to_string(malignant.size()));
    int n = static_cast<int>(benign.size());
    if (config_.batch_size > n)
        throw ConfigError("cyclegan: batch_size " + std::to_string(config_.batch_size) +
                          " exceeds domain size " + std::to_string(n));

    int steps = n / config_.batch_size;
    for (int e = epoch_ + 1; e <= config_.epochs; ++e) {
        Rng rng(derive_seed(config_.seed, "epoch:" + std::to_string(e)));
        std::vector<int> order_b = rng.permutation(n);
        std::vector<int> order_m = rng.permutation(n);

        double adv_bm = 0, adv_mb = 0, cyc = 0;
        for (int s = 0; s < steps; ++s) {
            Tensor real_b = stack_batch(benign, order_b, s * config_.batch_size,
                                        config_.batch_size);
            Tensor real_m = stack_batch(malignant, order_m, s * config_.batch_size,
                                        config_.batch_size);
            EpochLosses l = train_step(real_b, real_m, e, s);
            adv_bm += l.adv_bm;
            adv_mb += l.adv_mb;
            cyc += l.cycle;
        }
        adv_bm /= steps;
        adv_mb /= steps;
        cyc /= steps;
        history_.push_back(
            {e, adv_bm, adv_mb, cyc, total_objective(adv_bm, adv_mb, cyc, config_.lambda_cyc)});
        epoch_ = e;

        bool at_interval = config_.checkpoint_interval > 0 && e % config_.checkpoint_interval == 0;
        if (on_checkpoint && (at_interval || e == config_.epochs)) on_checkpoint(e, *this);
    }
}

std::vector<ImageTensor> CycleGan::translate(const std::vector<ImageTensor>& images,
                                             Direction direction) {
    UNetGenerator& gen = direction == Direction::B_to_M ? gen_b2m_ : gen_m2b_;
    std::vector<ImageTensor> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        if (img.height != image_side_ || img.width != image_side_)
            throw DataError("translation: image is " + std::to_string(img.height) + "x" +
                            std::to_string(img.width) + " but the model was trained at " +
                            std::to_string(image_side_));
        if (img.range_tag != RangeTag::tanh_m1_1)
            throw DataError("translation: input must be in tanh range");
        Tensor y = gen.forward(image_to_chw(img), 0, false);
        out.push_back(chw_to_image(y, RangeTag::tanh_m1_1));
    }
    return out;
}

void CycleGan::save(const std::filesystem::path& path) {
    nn::Checkpoint ckpt;
    ckpt.metadata["kind"] = "cyclegan";
    ckpt.metadata["epoch"] = epoch_;
    ckpt.metadata["image_side"] = image_side_;
    ckpt.metadata["preprocessing"] = "standardize_then_tanh";
    ckpt.metadata["config"] = {{"lambda_cyc", config_.lambda_cyc},
                               {"learning_rate", config_.learning_rate},
                               {"batch_size", config_.batch_size},
                               {"epochs", config_.epochs},
                               {"beta1", config_.beta1},
                               {"beta2", config_.beta2},
                               {"loss_form", loss_form_name(config_.loss_form)},
                               {"seed", config_.seed},
                               {"checkpoint_interval", config_.checkpoint_interval}};
    ckpt.metadata["generator"] = {{"depth", gen_spec_.depth},
                                  {"base_filters", gen_spec_.base_filters},
                                  {"normalization", gen_spec_.normalization},
                                  {"in_channels", gen_spec_.in_channels}};
    ckpt.metadata["discriminator"] = {{"receptive_field", disc_spec_.receptive_field},
                                      {"base_filters", disc_spec_.base_filters},
                                      {"normalization", disc_spec_.normalization},
                                      {"in_channels", disc_spec_.in_channels}};

    auto dump_params = [&](const std::string& prefix, std::vector<nn::ParamRef> params) {
        for (const auto& p : params)
            ckpt.put_f32(prefix + "." + p.name, p.value->shape, p.value->data);
    };
    dump_params("gen_b2m", gen_b2m_.params());
    dump_params("gen_m2b", gen_m2b_.params());
    dump_params("disc_m", disc_m_.params());
    dump_params("disc_b", disc_b_.params());
    opt_gb2m_.save_into("adam.gen_b2m", ckpt);
    opt_gm2b_.save_into("adam.gen_m2b", ckpt);
    opt_dm_.save_into("adam.disc_m", ckpt);
    opt_db_.save_into("adam.disc_b", ckpt);

    std::vector<double> he, hbm, hmb, hc, ht;
    for (const auto& l : history_) {
        he.push_back(l.epoch);
        hbm.push_back(l.adv_bm);
        hmb.push_back(l.adv_mb);
        hc.push_back(l.cycle);
        ht.push_back(l.total);
    }
    int hn = static_cast<int>(history_.size());
    ckpt.put_f64("history.epoch", {hn}, he);
    ckpt.put_f64("history.adv_bm", {hn}, hbm);
    ckpt.put_f64("history.adv_mb", {hn}, hmb);
    ckpt.put_f64("history.cycle", {hn}, hc);
    ckpt.put_f64("history.total", {hn}, ht);

    ckpt.save(path);
}

CycleGan CycleGan::load(const std::filesystem::path& path) {
    nn::Checkpoint ckpt = nn::Checkpoint::load(path);
    if (!ckpt.metadata.contains("kind") || ckpt.metadata["kind"] != "cyclegan")
        throw DataError("checkpoint: '" + path.string() + "' is not a translation checkpoint");

    const auto& mc = ckpt.metadata["config"];
    CycleGanConfig config;
    config.lambda_cyc = mc["lambda_cyc"].get<double>();
    config.learning_rate = mc["learning_rate"].get<double>();
    config.batch_size = mc["batch_size"].get<int>();
    config.epochs = mc["epochs"].get<int>();
    config.beta1 = mc["beta1"].get<double>();
    config.beta2 = mc["beta2"].get<double>();
    config.loss_form = loss_form_from_name(mc["loss_form"].get<std::string>());
    config.seed = mc["seed"].get<uint64_t>();
    config.checkpoint_interval = mc["checkpoint_interval"].get<int>();

    const auto& mg = ckpt.metadata["generator"];
    GeneratorSpec gen_spec;
    gen_spec.depth = mg["depth"].get<int>();
    gen_spec.base_filters = mg["base_filters"].get<int>();
    gen_spec.normalization = mg["normalization"].get<std::string>();
    gen_spec.in_channels = mg["in_channels"].get<int>();

    const auto& md = ckpt.metadata["discriminator"];
    DiscriminatorSpec disc_spec;
    disc_spec.receptive_field = md["receptive_field"].get<int>();
    disc_spec.base_filters = md["base_filters"].get<int>();
    disc_spec.normalization = md["normalization"].get<std::string>();
    disc_spec.in_channels = md["in_channels"].get<int>();

    CycleGan model(gen_spec, disc_spec, config, ckpt.metadata["image_side"].get<int>());

    auto restore_params = [&](const std::string& prefix, std::vector<nn::ParamRef> params) {
        for (auto& p : params) {
            const auto& arr = ckpt.get_f32(prefix + "." + p.name);
            if (arr.shape != p.value->shape)
                throw DataError("checkpoint: shape mismatch for '" + prefix + "." + p.name +
                                "'");
            p.value->data = arr.data;
        }
    };
    restore_params("gen_b2m", model.gen_b2m_.params());
    restore_params("gen_m2b", model.gen_m2b_.params());
    restore_params("disc_m", model.disc_m_.params());
    restore_params("disc_b", model.disc_b_.params());
    model.opt_gb2m_.load_from("adam.gen_b2m", ckpt, model.gen_b2m_.params());
    model.opt_gm2b_.load_from("adam.gen_m2b", ckpt, model.gen_m2b_.params());
    model.opt_dm_.load_from("adam.disc_m", ckpt, model.disc_m_.params());
    model.opt_db_.load_from("adam.disc_b", ckpt, model.disc_b_.params());

    const auto& he = ckpt.get_f64("history.epoch");
    const auto& hbm = ckpt.get_f64("history.adv_bm");
    const auto& hmb = ckpt.get_f64("history.adv_mb");
    const auto& hc = ckpt.get_f64("history.cycle");
    const auto& ht = ckpt.get_f64("history.total");
    for (size_t i = 0; i < he.data.size(); ++i)
        model.history_.push_back({static_cast<int>(he.data[i]), hbm.data[i], hmb.data[i],
                                  hc.data[i], ht.data[i]});
    model.epoch_ = ckpt.metadata["epoch"].get<int>();
    if (static_cast<int>(model.history_.size()) != model.epoch_)
        throw DataError("checkpoint: corrupt field 'history' (length " +
                        std::to_string(model.history_.size()) + " does not match epoch " +
                        std::to_string(model.epoch_) + ")");
    return model;
}

CycleGan train_cyclegan(const LabelledDataset& benign, const LabelledDataset& malignant,
                        const GeneratorSpec& gen_spec, const DiscriminatorSpec& disc_spec,
                        const CycleGanConfig& config,
                        const CycleGan::CheckpointHook& on_checkpoint) {
    if (benign.samples.empty() || malignant.samples.empty())
        throw DataError("translation training requires non-empty domains");
    auto to_tensors = [](const LabelledDataset& ds) {
        std::vector<Tensor> out;
        out.reserve(ds.samples.size());
        for (const auto& s : ds.samples) {
            if (s.image.range_tag != RangeTag::tanh_m1_1)
                throw DataError("translation training: sample '" + s.id +
                                "' is not in tanh range");
            if (s.image.height != s.image.width)
                throw DataError("translation training: sample '" + s.id + "' is not square");
            out.push_back(image_to_chw(s.image));
        }
        return out;
    };
    std::vector<Tensor> b = to_tensors(benign);
    std::vector<Tensor> m = to_tensors(malignant);
    int side = benign.samples.front().image.height;
    for (const auto& ds : {&benign, &malignant})
        for (const auto& s : ds->samples)
            if (s.image.height != side)
                throw DataError("translation training: sample '" + s.id +
                                "' side differs from " + std::to_string(side));

    CycleGan model(gen_spec, disc_spec, config, side);
    model.train(b, m, on_checkpoint);
    return model;
}

void write_loss_history_csv(const std::vector<EpochLosses>& history,
                            const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    os << "epoch,adv_BM,adv_MB,cycle,total\n";
    char buf[160];
    for (const auto& l : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", l.epoch, l.adv_bm, l.adv_mb,
                      l.cycle, l.total);
        os << buf;
    }
}

}  // namespace melanet::gan
