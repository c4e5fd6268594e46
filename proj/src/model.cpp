#include "moedrive/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "moedrive/errors.hpp"

namespace moedrive {

using json = nlohmann::ordered_json;
using namespace dims;

void ImageEncoder::init(ParamSet& ps) {
    W1_ = &ps.add_matrix("enc.img.W1", kImgHidden1, kGridIn);
    b1_ = &ps.add_vector("enc.img.b1", kImgHidden1, kGridIn);
    W2_ = &ps.add_matrix("enc.img.W2", kImgHidden2, kImgHidden1);
    b2_ = &ps.add_vector("enc.img.b2", kImgHidden2, kImgHidden1);
    W3_ = &ps.add_matrix("enc.img.W3", kImgFeat, kImgHidden2);
    b3_ = &ps.add_vector("enc.img.b3", kImgFeat, kImgHidden2);
}

void ImageEncoder::forward(const std::vector<const Observation*>& batch, Cache& c) const {
    int B = int(batch.size());
    c.batch = B;
    c.x.assign(std::size_t(B) * kGridIn, 0.0);
    for (int i = 0; i < B; ++i) {
        batch[i]->validate();
        std::copy(batch[i]->grid.begin(), batch[i]->grid.end(), c.x.begin() + std::size_t(i) * kGridIn);
    }
    // weights are transposed per call so the GEMM streams rows
    std::vector<double> wt;
    auto layer = [B, &wt](const std::vector<double>& in, int nin, const Param& W, const Param& b,
                          std::vector<double>& out, int nout, bool act) {
        out.assign(std::size_t(B) * nout, 0.0);
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < nout; ++j) out[std::size_t(i) * nout + j] = b.value[j];
        transpose_into(nout, nin, W.value.data(), wt);
        gemm_acc(B, nin, nout, in.data(), wt.data(), out.data());
        if (act)
            for (double& v : out) v = std::tanh(v);
    };
    layer(c.x, kGridIn, *W1_, *b1_, c.h1, kImgHidden1, true);
    layer(c.h1, kImgHidden1, *W2_, *b2_, c.h2, kImgHidden2, true);
    layer(c.h2, kImgHidden2, *W3_, *b3_, c.out, kImgFeat, false);
}

Tensor1 ImageEncoder::feature_of(const Cache& c, int i) const {
    return Tensor1(c.out.begin() + std::size_t(i) * kImgFeat,
                   c.out.begin() + std::size_t(i + 1) * kImgFeat);
}

void ImageEncoder::backward(const Cache& c, const std::vector<Tensor1>& d_out) {
    int B = c.batch;
    std::vector<double> g(std::size_t(B) * kImgFeat, 0.0);
    for (int i = 0; i < B; ++i)
        std::copy(d_out[i].begin(), d_out[i].end(), g.begin() + std::size_t(i) * kImgFeat);

    std::vector<double> gt;
    auto backprop = [B, &gt](std::vector<double>& dout, int nout, const std::vector<double>& actv,
                             bool act_applied, const std::vector<double>& in, int nin, Param& W,
                             Param& b, bool want_din, std::vector<double>& din) {
        if (act_applied)
            for (std::size_t i = 0; i < dout.size(); ++i) dout[i] *= 1.0 - actv[i] * actv[i];
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < nout; ++j) b.grad[j] += dout[std::size_t(i) * nout + j];
        transpose_into(B, nout, dout.data(), gt); // nout x B
        gemm_acc(nout, B, nin, gt.data(), in.data(), W.grad.data());
        if (want_din) {
            din.assign(std::size_t(B) * nin, 0.0);
            gemm_acc(B, nout, nin, dout.data(), W.value.data(), din.data());
        }
    };
    std::vector<double> d2, d1, unused;
    backprop(g, kImgFeat, c.out, false, c.h2, kImgHidden2, *W3_, *b3_, true, d2);
    backprop(d2, kImgHidden2, c.h2, true, c.h1, kImgHidden1, *W2_, *b2_, true, d1);
    backprop(d1, kImgHidden1, c.h1, true, c.x, kGridIn, *W1_, *b1_, false, unused);
}

Model::Model(uint64_t seed) : params(seed), seed_(seed) {
    image_encoder.init(params);
    params.add_matrix("enc.meas.W1", kMeasHidden1, kMeasIn);
    params.add_vector("enc.meas.b1", kMeasHidden1, kMeasIn);
    params.add_matrix("enc.meas.W2", kMeasHidden2, kMeasHidden1);
    params.add_vector("enc.meas.b2", kMeasHidden2, kMeasHidden1);
    params.add_matrix("enc.meas.W3", kMeasFeat, kMeasHidden2);
    params.add_vector("enc.meas.b3", kMeasFeat, kMeasHidden2);

    auto expert_name = [](int i) {
        return i == 0 ? std::string("expert.global") : "expert.s" + std::to_string(i - 1);
    };
    for (int i = 0; i < kNumExperts; ++i) {
        std::string p = expert_name(i);
        ExpertParams e;
        e.down1W = &params.add_matrix(p + ".down1.W", kBottleneck, kFused);
        e.down1b = &params.add_vector(p + ".down1.b", kBottleneck, kFused);
        e.down2W = &params.add_matrix(p + ".down2.W", kBottleneck, kBottleneck);
        e.down2b = &params.add_vector(p + ".down2.b", kBottleneck, kBottleneck);
        e.h0W = &params.add_matrix(p + ".h0.W", kGruHidden, kBottleneck);
        e.h0b = &params.add_vector(p + ".h0.b", kGruHidden, kBottleneck);
        e.gru = make_gru(params, p + ".gru", kGruIn, kGruHidden);
        e.wpW = &params.add_matrix(p + ".wp.W", 2, kGruHidden);
        e.wpb = &params.add_vector(p + ".wp.b", 2, kGruHidden);
        e.valW = &params.add_matrix(p + ".value.W", 1, kBottleneck);
        e.valb = &params.add_vector(p + ".value.b", 1, kBottleneck);
        e.featW = &params.add_matrix(p + ".feat.W", kFeat, kBottleneck);
        e.featb = &params.add_vector(p + ".feat.b", kFeat, kBottleneck);
        experts_[i] = e;
    }

    routerW1_ = &params.add_matrix("router.W1", kRouterHidden, kFused);
    routerb1_ = &params.add_vector("router.b1", kRouterHidden, kFused);
    routerW2_ = &params.add_matrix("router.W2", kNumScenarios, kRouterHidden);
    routerb2_ = &params.add_vector("router.b2", kNumScenarios, kRouterHidden);
    speedW_ = &params.add_matrix("speed.W", 1, kFused);
    speedb_ = &params.add_vector("speed.b", 1, kFused);
}

std::size_t onehot_index(const Tensor1& onehot) {
    std::size_t idx = onehot.size();
    for (std::size_t i = 0; i < onehot.size(); ++i) {
        if (onehot[i] == 0.0) continue;
        if (onehot[i] != 1.0 || idx != onehot.size())
            throw std::invalid_argument("command must be one-hot");
        idx = i;
    }
    if (idx == onehot.size()) throw std::invalid_argument("command must be one-hot");
    return idx;
}

Tape::NodeId Model::measurement_feature(Tape& t, double speed, const Tensor1& command_onehot,
                                        double goal_x, double goal_y) {
    require_len(command_onehot, 6, "command one-hot");
    onehot_index(command_onehot);
    Tensor1 in;
    in.reserve(kMeasIn);
    in.push_back(speed / 10.0);
    in.insert(in.end(), command_onehot.begin(), command_onehot.end());
    in.push_back(goal_x / 50.0);
    in.push_back(goal_y / 50.0);
    auto x = t.input(std::move(in));
    auto h1 = t.tanh_op(t.linear(*params.find("enc.meas.W1"), *params.find("enc.meas.b1"), x));
    auto h2 = t.tanh_op(t.linear(*params.find("enc.meas.W2"), *params.find("enc.meas.b2"), h1));
    return t.linear(*params.find("enc.meas.W3"), *params.find("enc.meas.b3"), h2);
}

Tape::NodeId Model::measurement_feature(Tape& t, const Observation& obs) {
    Tensor1 onehot(6, 0.0);
    if (obs.command < 0 || obs.command > 5) throw std::invalid_argument("bad command id");
    onehot[obs.command] = 1.0;
    return measurement_feature(t, obs.speed, onehot, obs.goal_x, obs.goal_y);
}

Tape::NodeId Model::fuse(Tape& t, Tape::NodeId img_feat, Tape::NodeId meas_feat) {
    if (t.value(img_feat).size() != std::size_t(kImgFeat) ||
        t.value(meas_feat).size() != std::size_t(kMeasFeat))
        throw std::invalid_argument("fuse: feature length mismatch");
    return t.concat(img_feat, meas_feat);
}

ExpertNodes Model::expert_forward(Tape& t, int expert, Tape::NodeId fused) {
    const ExpertParams& e = experts_[expert];
    auto d1 = t.tanh_op(t.linear(*e.down1W, *e.down1b, fused));
    auto f = t.tanh_op(t.linear(*e.down2W, *e.down2b, d1));
    auto h = t.linear(*e.h0W, *e.h0b, f);
    ExpertNodes out;
    auto w_prev = t.input(Tensor1{0.0, 0.0});
    for (int k = 0; k < kWaypointCount; ++k) {
        h = t.gru_cell(e.gru, h, w_prev);
        auto delta = t.linear(*e.wpW, *e.wpb, h);
        w_prev = t.add(w_prev, delta); // cumulative waypoints
        out.waypoints[k] = w_prev;
    }
    out.value = t.linear(*e.valW, *e.valb, f);
    out.feature = t.linear(*e.featW, *e.featb, f);
    return out;
}

Tape::NodeId Model::router_logits(Tape& t, Tape::NodeId fused) {
    auto h = t.tanh_op(t.linear(*routerW1_, *routerb1_, fused));
    return t.linear(*routerW2_, *routerb2_, h);
}

Tape::NodeId Model::speed_head(Tape& t, Tape::NodeId fused) {
    return t.linear(*speedW_, *speedb_, fused);
}

Tensor1 Model::image_feature(const Observation& obs) const {
    ImageEncoder::Cache c;
    image_encoder.forward({&obs}, c);
    return image_encoder.feature_of(c, 0);
}

Tensor1 Model::fused_feature(const Observation& obs) {
    Tape t;
    auto img = t.input(image_feature(obs));
    auto meas = measurement_feature(t, obs);
    return t.value(fuse(t, img, meas));
}

ExpertOutput Model::run_expert(int expert, const Tensor1& fused) {
    Tape t;
    auto F = t.input(fused);
    ExpertNodes n = expert_forward(t, expert, F);
    ExpertOutput out;
    for (int k = 0; k < kWaypointCount; ++k)
        out.waypoints[k] = {t.value(n.waypoints[k])[0], t.value(n.waypoints[k])[1]};
    out.value = t.scalar(n.value);
    out.feature = t.value(n.feature);
    return out;
}

std::array<ExpertOutput, kNumExperts> Model::forward_all(const Tensor1& fused) {
    std::array<ExpertOutput, kNumExperts> out;
    for (int i = 0; i < kNumExperts; ++i) out[i] = run_expert(i, fused);
    return out;
}

Tensor1 Model::router_probs(const Tensor1& fused) {
    Tape t;
    return t.value(t.softmax_op(router_logits(t, t.input(fused))));
}

double Model::predict_speed(const Tensor1& fused) {
    Tape t;
    return t.scalar(speed_head(t, t.input(fused)));
}

void save_checkpoint(const Model& m, const CheckpointMeta& meta, const std::string& path) {
    json j;
    j["format_version"] = meta.format_version;
    j["variant"] = meta.variant;
    j["tau"] = meta.tau;
    j["seed"] = meta.seed;
    j["dataset_manifest_hash"] = meta.dataset_manifest_hash;
    j["dims"] = {{"img_feat", kImgFeat},   {"meas_feat", kMeasFeat}, {"fused", kFused},
                 {"bottleneck", kBottleneck}, {"gru_hidden", kGruHidden},
                 {"feat", kFeat},          {"experts", kNumExperts}, {"waypoints", kWaypointCount}};
    j["loss_weights"] = {{"traj", meta.w_traj},       {"feature", meta.w_feat},
                         {"value", meta.w_value},     {"global", meta.w_global},
                         {"adaptive", meta.w_adaptive}, {"scenario", meta.w_scenario},
                         {"speed", meta.w_speed}};
    json params;
    for (const Param& p : const_cast<Model&>(m).params) params[p.name] = p.value;
    j["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw ModelError("save_checkpoint: cannot open " + path);
    out << j.dump() << "\n";
}

Model load_checkpoint(const std::string& path, CheckpointMeta* meta_out) {
    std::ifstream in(path);
    if (!in) throw ModelError("load_checkpoint: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw ModelError("load_checkpoint: parse failure: " + std::string(e.what()));
    }
    if (j.at("format_version").get<int>() != 1)
        throw ModelError("load_checkpoint: unsupported format version");
    if (j.at("dims").at("fused").get<int>() != kFused ||
        j.at("dims").at("experts").get<int>() != kNumExperts)
        throw ModelError("load_checkpoint: dimension mismatch");
    CheckpointMeta meta;
    meta.variant = j.at("variant").get<std::string>();
    meta.tau = j.at("tau").get<double>();
    meta.seed = j.at("seed").get<uint64_t>();
    meta.dataset_manifest_hash = j.at("dataset_manifest_hash").get<std::string>();
    const json& lw = j.at("loss_weights");
    meta.w_traj = lw.at("traj").get<double>();
    meta.w_feat = lw.at("feature").get<double>();
    meta.w_value = lw.at("value").get<double>();
    meta.w_global = lw.at("global").get<double>();
    meta.w_adaptive = lw.at("adaptive").get<double>();
    meta.w_scenario = lw.at("scenario").get<double>();
    meta.w_speed = lw.at("speed").get<double>();
    if (meta_out) *meta_out = meta;

    Model m(meta.seed);
    const json& params = j.at("params");
    for (Param& p : m.params) {
        auto it = params.find(p.name);
        if (it == params.end()) throw ModelError("load_checkpoint: missing param " + p.name);
        if (it->size() != p.value.size())
            throw ModelError("load_checkpoint: size mismatch for " + p.name);
        for (std::size_t k = 0; k < p.value.size(); ++k) p.value[k] = (*it)[k].get<double>();
    }
    return m;
}

} // namespace moedrive
