#include "uqt/model_io.hpp"

#include <fstream>

#include "uqt/error.hpp"

namespace uqt {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json tree_to_json(const RegressionTree& tree) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array(), n = json::array();
    for (const auto& node : tree.nodes()) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.value);
        n.push_back(node.n_samples);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left},
            {"right", right},     {"value", value},         {"n_samples", n}};
}

RegressionTree tree_from_json(const json& j, std::size_t n_features) {
    const auto& feature = j.at("feature");
    std::vector<RegressionTree::Node> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes[i].feature = feature[i].get<int>();
        nodes[i].threshold = j.at("threshold")[i].get<double>();
        nodes[i].left = j.at("left")[i].get<int>();
        nodes[i].right = j.at("right")[i].get<int>();
        nodes[i].value = j.at("value")[i].get<double>();
        nodes[i].n_samples = j.at("n_samples")[i].get<int>();
        if (!nodes[i].is_leaf() && (nodes[i].left <= static_cast<int>(i) || nodes[i].right >= static_cast<int>(nodes.size())))
            throw ModelError("corrupt tree dump: bad child index");
    }
    if (nodes.empty()) throw ModelError("corrupt tree dump: no nodes");
    return RegressionTree(std::move(nodes), n_features);
}

void write_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump();
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

}  // namespace

json to_json(const EnsembleModel& model) {
    json trees = json::array();
    for (const auto& t : model.estimators) trees.push_back(tree_to_json(t));
    return {{"format", "uqt-ensemble"},
            {"version", kFormatVersion},
            {"kind", to_string(model.kind)},
            {"n_features", model.feature_count},
            {"seed", model.seed},
            {"learning_rate", model.learning_rate},
            {"init", model.init},
            {"loss", {{"kind", model.loss.kind == LossKind::squared ? "squared" : "pinball"}, {"tau", model.loss.tau}}},
            {"weights", model.weights},
            {"train_loss", model.train_loss},
            {"estimators", trees}};
}

EnsembleModel ensemble_from_json(const json& doc) {
    try {
        if (doc.at("format") != "uqt-ensemble") throw ModelError("not an ensemble dump");
        if (doc.at("version").get<int>() != kFormatVersion) throw ModelError("unsupported ensemble dump version");
        EnsembleModel m;
        m.kind = ensemble_kind_from_string(doc.at("kind").get<std::string>());
        m.feature_count = doc.at("n_features").get<std::size_t>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.learning_rate = doc.at("learning_rate").get<double>();
        m.init = doc.at("init").get<double>();
        m.loss.kind = doc.at("loss").at("kind") == "squared" ? LossKind::squared : LossKind::pinball;
        m.loss.tau = doc.at("loss").at("tau").get<double>();
        m.weights = doc.at("weights").get<std::vector<double>>();
        m.train_loss = doc.at("train_loss").get<std::vector<double>>();
        for (const auto& t : doc.at("estimators")) m.estimators.push_back(tree_from_json(t, m.feature_count));
        if (m.kind == EnsembleKind::adaboost_r2 && m.weights.size() != m.estimators.size())
            throw ModelError("AdaBoost dump: weight count differs from estimator count");
        return m;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed ensemble dump: ") + e.what());
    }
}

json to_json(const MLPModel& model) {
    json layers = json::array();
    for (const auto& l : model.layers)
        layers.push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
    const auto& c = model.config;
    return {{"format", "uqt-mlp"},
            {"version", kFormatVersion},
            {"config",
             {{"hidden_sizes", c.hidden_sizes},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"dropout", c.dropout},
              {"head", c.head == OutputHead::scalar ? "scalar" : "gaussian"},
              {"seed", c.seed},
              {"adam", {{"step", c.adam.step}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}}}},
            {"loss_trace", model.loss_trace},
            {"layers", layers}};
}

MLPModel mlp_from_json(const json& doc) {
    try {
        if (doc.at("format") != "uqt-mlp") throw ModelError("not an MLP dump");
        if (doc.at("version").get<int>() != kFormatVersion) throw ModelError("unsupported MLP dump version");
        MLPModel m;
        const auto& c = doc.at("config");
        m.config.hidden_sizes = c.at("hidden_sizes").get<std::vector<int>>();
        m.config.epochs = c.at("epochs").get<int>();
        m.config.batch_size = c.at("batch_size").get<int>();
        m.config.dropout = c.at("dropout").get<double>();
        m.config.head = c.at("head") == "scalar" ? OutputHead::scalar : OutputHead::gaussian;
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.adam.step = c.at("adam").at("step").get<double>();
        m.config.adam.beta1 = c.at("adam").at("beta1").get<double>();
        m.config.adam.beta2 = c.at("adam").at("beta2").get<double>();
        m.config.adam.epsilon = c.at("adam").at("epsilon").get<double>();
        m.loss_trace = doc.at("loss_trace").get<std::vector<double>>();
        for (const auto& l : doc.at("layers")) {
            DenseLayer layer;
            layer.inputs = l.at("inputs").get<std::size_t>();
            layer.outputs = l.at("outputs").get<std::size_t>();
            layer.weights = l.at("weights").get<std::vector<double>>();
            layer.bias = l.at("bias").get<std::vector<double>>();
            if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs)
                throw ModelError("MLP dump: layer shape mismatch");
            m.layers.push_back(std::move(layer));
        }
        if (m.layers.empty()) throw ModelError("MLP dump has no layers");
        return m;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed MLP dump: ") + e.what());
    }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) { write_json(to_json(model), path); }
void save_model(const MLPModel& model, const std::filesystem::path& path) { write_json(to_json(model), path); }
EnsembleModel load_ensemble(const std::filesystem::path& path) { return ensemble_from_json(read_json(path)); }
MLPModel load_mlp(const std::filesystem::path& path) { return mlp_from_json(read_json(path)); }

}  // namespace uqt
