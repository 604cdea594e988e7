#include "melanet/nn/optim.hpp"

#include <cmath>

#include "melanet/errors.hpp"

namespace melanet::nn {

void Adam::step(const std::vector<ParamRef>& params) {
    t_ += 1;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& p : params) {
        if (!p.grad) continue;
        Tensor& m = m_.try_emplace(p.name, Tensor(p.value->shape)).first->second;
        Tensor& v = v_.try_emplace(p.name, Tensor(p.value->shape)).first->second;
        for (size_t i = 0; i < p.value->data.size(); ++i) {
            float g = p.grad->data[i];
            m.data[i] = static_cast<float>(beta1_ * m.data[i] + (1.0 - beta1_) * g);
            v.data[i] = static_cast<float>(beta2_ * v.data[i] + (1.0 - beta2_) * g * g);
            double m_hat = m.data[i] / bc1;
            double v_hat = v.data[i] / bc2;
            p.value->data[i] -= static_cast<float>(lr_ * m_hat / (std::sqrt(v_hat) + eps_));
        }
    }
}

void Adam::save_into(const std::string& prefix, Checkpoint& ckpt) const {
    ckpt.metadata[prefix]["t"] = t_;
    for (const auto& [name, m] : m_) ckpt.put_f32(prefix + "." + name + ".m", m.shape, m.data);
    for (const auto& [name, v] : v_) ckpt.put_f32(prefix + "." + name + ".v", v.shape, v.data);
}

void Adam::load_from(const std::string& prefix, const Checkpoint& ckpt,
                     const std::vector<ParamRef>& params) {
    if (!ckpt.metadata.contains(prefix) || !ckpt.metadata[prefix].contains("t"))
        throw DataError("checkpoint: missing field '" + prefix + ".t'");
    t_ = ckpt.metadata[prefix]["t"].get<long long>();
    m_.clear();
    v_.clear();
    if (t_ == 0) return;  // no moments accumulated yet
    for (const auto& p : params) {
        if (!p.grad) continue;
        const auto& m = ckpt.get_f32(prefix + "." + p.name + ".m");
        const auto& v = ckpt.get_f32(prefix + "." + p.name + ".v");
        if (m.shape != p.value->shape || v.shape != p.value->shape)
            throw DataError("checkpoint: shape mismatch for '" + prefix + "." + p.name + "'");
        Tensor tm(m.shape), tv(v.shape);
        tm.data = m.data;
        tv.data = v.data;
        m_.emplace(p.name, std::move(tm));
        v_.emplace(p.name, std::move(tv));
    }
}

void Adadelta::step(const std::vector<ParamRef>& params) {
    for (const auto& p : params) {
        if (!p.grad) continue;
        Tensor& ag = accum_grad_.try_emplace(p.name, Tensor(p.value->shape)).first->second;
        Tensor& au = accum_update_.try_emplace(p.name, Tensor(p.value->shape)).first->second;
        for (size_t i = 0; i < p.value->data.size(); ++i) {
            double g = p.grad->data[i];
            double eg = rho_ * ag.data[i] + (1.0 - rho_) * g * g;
            double upd = std::sqrt((au.data[i] + eps_) / (eg + eps_)) * g;
            double eu = rho_ * au.data[i] + (1.0 - rho_) * upd * upd;
            ag.data[i] = static_cast<float>(eg);
            au.data[i] = static_cast<float>(eu);
            p.value->data[i] -= static_cast<float>(lr_ * upd);
        }
    }
}

void Adadelta::save_into(const std::string& prefix, Checkpoint& ckpt) const {
    ckpt.metadata[prefix]["lr"] = lr_;
    for (const auto& [name, t] : accum_grad_)
        ckpt.put_f32(prefix + "." + name + ".accum_grad", t.shape, t.data);
    for (const auto& [name, t] : accum_update_)
        ckpt.put_f32(prefix + "." + name + ".accum_update", t.shape, t.data);
}

void Adadelta::load_from(const std::string& prefix, const Checkpoint& ckpt,
                         const std::vector<ParamRef>& params) {
    if (!ckpt.metadata.contains(prefix) || !ckpt.metadata[prefix].contains("lr"))
        throw DataError("checkpoint: missing field '" + prefix + ".lr'");
    lr_ = ckpt.metadata[prefix]["lr"].get<double>();
    accum_grad_.clear();
    accum_update_.clear();
    for (const auto& p : params) {
        if (!p.grad) continue;
        std::string base = prefix + "." + p.name;
        if (!ckpt.has_f32(base + ".accum_grad")) continue;
        const auto& ag = ckpt.get_f32(base + ".accum_grad");
        const auto& au = ckpt.get_f32(base + ".accum_update");
        if (ag.shape != p.value->shape || au.shape != p.value->shape)
            throw DataError("checkpoint: shape mismatch for '" + base + "'");
        Tensor tg(ag.shape), tu(au.shape);
        tg.data = ag.data;
        tu.data = au.data;
        accum_grad_.emplace(p.name, std::move(tg));
        accum_update_.emplace(p.name, std::move(tu));
    }
}

}  // namespace melanet::nn
