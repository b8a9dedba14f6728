#include "pvd/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pvd {

namespace {

constexpr char kMagic[5] = {'P', 'V', 'D', 'W', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) {
            throw std::runtime_error("weight bundle: truncated file");
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    unsigned char byte() { return static_cast<unsigned char>(data_[pos_++]); }
    std::string data_;
    std::size_t pos_ = 0;
};

std::size_t shape_param_count(const std::vector<int>& widths) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        n += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
    }
    return n;
}

}  // namespace

void save_weights(const WeightBundle& bundle, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(bundle.method_key.size()));
    out.append(bundle.method_key);
    put_u32(out, static_cast<std::uint32_t>(bundle.shapes.size()));
    for (const auto& shape : bundle.shapes) {
        put_u32(out, static_cast<std::uint32_t>(shape.size()));
        for (int w : shape) put_u32(out, static_cast<std::uint32_t>(w));
    }
    put_u64(out, bundle.params.size());
    for (double d : bundle.params) put_f64(out, d);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("save_weights: cannot open " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw std::runtime_error("save_weights: write failed for " + path);
}

WeightBundle load_weights(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("load_weights: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader r(std::move(data));
    if (r.bytes(5) != std::string(kMagic, sizeof(kMagic))) {
        throw std::runtime_error("weight bundle: wrong magic tag (unsupported version)");
    }
    WeightBundle bundle;
    bundle.method_key = r.bytes(r.u32());
    const std::uint32_t n_nets = r.u32();
    std::size_t expected = 0;
    bundle.shapes.resize(n_nets);
    for (auto& shape : bundle.shapes) {
        const std::uint32_t n_widths = r.u32();
        if (n_widths < 2) throw std::runtime_error("weight bundle: malformed shape");
        shape.resize(n_widths);
        for (auto& w : shape) w = static_cast<int>(r.u32());
        expected += shape_param_count(shape);
    }
    const std::uint64_t count = r.u64();
    if (count != expected) {
        throw std::runtime_error("weight bundle: shape/byte-length mismatch");
    }
    bundle.params.resize(count);
    for (auto& d : bundle.params) d = r.f64();
    if (!r.exhausted()) throw std::runtime_error("weight bundle: trailing bytes");
    return bundle;
}

WeightBundle bundle_from_model(const TrainedModel& model) {
    WeightBundle bundle;
    bundle.method_key = method_key_name(model.method);
    for (const auto& net : model.nets) bundle.shapes.push_back(net.widths);
    bundle.params = model.params;
    return bundle;
}

WeightBundle bundle_from_operator(const TrainedOperator& op) {
    WeightBundle bundle;
    bundle.method_key = method_key_name(op.method);
    for (const auto& net : op.nets) {
        bundle.shapes.push_back(net.branch.widths);
        bundle.shapes.push_back(net.trunk.widths);
    }
    bundle.params = op.params;
    return bundle;
}

TrainedModel model_from_bundle(const WeightBundle& bundle, const BoundaryLayerProblem& prob,
                               MatchingSide side) {
    const MethodKey method = method_key_from_string(bundle.method_key);
    if (is_operator_method(method)) {
        throw std::invalid_argument("model_from_bundle: bundle holds an operator model");
    }
    TrainedModel model;
    model.method = method;
    model.prob = prob;
    model.prandtl_side = side;
    for (const auto& shape : bundle.shapes) {
        Mlp net;
        net.widths = shape;
        model.nets.push_back(net);
    }
    const int expected_nets = (method == MethodKey::pvdnet_high) ? 5 : 2;
    if (model.net_count() != expected_nets) {
        throw std::runtime_error("model_from_bundle: net count does not match method");
    }
    model.params = bundle.params;
    return model;
}

TrainedOperator operator_from_bundle(const WeightBundle& bundle, const BoundaryLayerProblem& prob,
                                     const BcBox& box, MatchingSide side) {
    const MethodKey method = method_key_from_string(bundle.method_key);
    if (!is_operator_method(method)) {
        throw std::invalid_argument("operator_from_bundle: bundle holds a point-wise model");
    }
    if (bundle.shapes.size() % 2 != 0) {
        throw std::runtime_error("operator_from_bundle: odd shape count");
    }
    TrainedOperator op;
    op.method = method;
    op.prob = prob;
    op.box = box;
    op.prandtl_side = side;
    for (std::size_t i = 0; i + 1 < bundle.shapes.size(); i += 2) {
        DeepOnet net;
        net.branch.widths = bundle.shapes[i];
        net.trunk.widths = bundle.shapes[i + 1];
        net.sensor_dim = net.branch.widths.front();
        net.p = net.trunk.widths.back();
        if (net.branch.widths.back() != net.p) {
            throw std::runtime_error("operator_from_bundle: branch/trunk output widths differ");
        }
        op.nets.push_back(net);
    }
    int expected_nets = 2;
    if (method == MethodKey::pvdonet_high) expected_nets = 5;
    if (method == MethodKey::pideeponet) expected_nets = 1;
    if (op.net_count() != expected_nets) {
        throw std::runtime_error("operator_from_bundle: net count does not match method");
    }
    op.params = bundle.params;
    return op;
}

}  // namespace pvd
