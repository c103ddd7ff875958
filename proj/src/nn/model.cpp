#include "ser/nn/model.hpp"

#include <set>
#include <stdexcept>

namespace ser::nn {

void ModelSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("model spec: no layers");
  std::set<std::string> names;
  std::size_t heads = 0;
  for (const auto& l : layers) {
    if (l.name.empty()) throw std::invalid_argument("model spec: unnamed layer");
    if (!names.insert(l.name).second)
      throw std::invalid_argument("model spec: duplicate layer name '" + l.name + "'");
    if (l.name == "head") ++heads;
  }
  if (heads != 1 || layers.back().name != "head" || layers.back().kind != "dense")
    throw std::invalid_argument("model spec: need exactly one head, a final dense layer");
}

void to_json(nlohmann::json& j, const LayerSpec& s) {
  j = nlohmann::json{{"kind", s.kind},     {"name", s.name},     {"in", s.in},
                     {"out", s.out},       {"ksize", s.ksize},   {"stride", s.stride},
                     {"p", s.p},           {"return_seq", s.return_seq}};
}

void from_json(const nlohmann::json& j, LayerSpec& s) {
  s = LayerSpec{};
  j.at("kind").get_to(s.kind);
  j.at("name").get_to(s.name);
  s.in = j.value("in", s.in);
  s.out = j.value("out", s.out);
  s.ksize = j.value("ksize", s.ksize);
  s.stride = j.value("stride", s.stride);
  s.p = j.value("p", s.p);
  s.return_seq = j.value("return_seq", s.return_seq);
}

void to_json(nlohmann::json& j, const ModelSpec& s) { j = nlohmann::json{{"layers", s.layers}}; }

void from_json(const nlohmann::json& j, ModelSpec& s) { j.at("layers").get_to(s.layers); }

namespace {

std::unique_ptr<Layer> make_layer(const LayerSpec& s) {
  if (s.kind == "dense") return std::make_unique<Dense>(s.in, s.out);
  if (s.kind == "conv") return std::make_unique<Conv2d>(s.in, s.out, s.ksize, s.stride);
  if (s.kind == "batchnorm") return std::make_unique<BatchNorm>(s.in);
  if (s.kind == "relu") return std::make_unique<ReLU>();
  if (s.kind == "maxpool2") return std::make_unique<MaxPool2>();
  if (s.kind == "gap") return std::make_unique<GlobalAvgPool>();
  if (s.kind == "dropout") return std::make_unique<Dropout>(s.p);
  if (s.kind == "bilstm") return std::make_unique<BiLSTM>(s.in, s.out, s.return_seq);
  if (s.kind == "resblock") return std::make_unique<ResidualBlock>(s.in, s.out, s.stride);
  throw std::invalid_argument("model spec: unknown layer kind '" + s.kind + "'");
}

}  // namespace

Tensor Model::forward(const Tensor& x, bool train) {
  Tensor h = x;
  for (auto& l : layers) h = l->forward(h, train);
  return h;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<ParamRef> Model::params() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (auto& [local, p] : layers[i]->params())
      out.push_back({spec.layers[i].name + "." + local, p});
  return out;
}

std::vector<BufferRef> Model::buffers() {
  std::vector<BufferRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (auto& [local, t] : layers[i]->buffers())
      out.push_back({spec.layers[i].name + "." + local, t});
  return out;
}

void Model::zero_grads() {
  for (auto& l : layers) l->zero_grads();
}

std::size_t Model::param_count() {
  std::size_t n = 0;
  for (auto& pr : params()) n += pr.param->value.size();
  return n;
}

void Model::init(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Rng rng(derive_seed(seed, spec.layers[i].name));
    layers[i]->init(rng);
  }
}

void Model::seed_dropout(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (auto* d = dynamic_cast<Dropout*>(layers[i].get()))
      d->seed(derive_seed(seed, spec.layers[i].name));
}

std::size_t Model::freeze(const std::string& prefix) {
  std::size_t n = 0;
  for (auto& pr : params())
    if (pr.name.rfind(prefix, 0) == 0) {
      pr.param->frozen = true;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("freeze: no parameter matches prefix '" + prefix + "'");
  return n;
}

Model build_model(const ModelSpec& spec) {
  spec.validate();
  Model m;
  m.spec = spec;
  for (const auto& l : spec.layers) m.layers.push_back(make_layer(l));
  return m;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  Model m = build_model(spec);
  m.init(seed);
  return m;
}

ModelSpec build_bilstm_classifier(std::size_t n_feats, std::size_t hidden,
                                  std::size_t n_classes) {
  if (n_feats == 0 || hidden == 0 || n_classes < 2)
    throw std::invalid_argument("bilstm classifier: bad dimensions");
  ModelSpec s;
  LayerSpec l;

  l = {};
  l.kind = "bilstm";
  l.name = "lstm0";
  l.in = n_feats;
  l.out = hidden;
  l.return_seq = true;
  s.layers.push_back(l);

  l = {};
  l.kind = "bilstm";
  l.name = "lstm1";
  l.in = 2 * hidden;
  l.out = hidden;
  l.return_seq = false;
  s.layers.push_back(l);

  l = {};
  l.kind = "dropout";
  l.name = "drop";
  l.p = 0.3;
  s.layers.push_back(l);

  l = {};
  l.kind = "dense";
  l.name = "head";
  l.in = 2 * hidden;
  l.out = n_classes;
  s.layers.push_back(l);

  s.validate();
  return s;
}

ModelSpec build_mini_resnet(const std::vector<std::size_t>& stage_channels,
                            std::size_t n_classes, std::size_t in_channels,
                            std::size_t blocks_per_stage) {
  if (stage_channels.empty() || in_channels == 0 || n_classes < 2 || blocks_per_stage == 0)
    throw std::invalid_argument("mini resnet: bad configuration");
  ModelSpec s;
  LayerSpec l;

  l = {};
  l.kind = "conv";
  l.name = "stem.conv";
  l.in = in_channels;
  l.out = stage_channels[0];
  l.ksize = 3;
  l.stride = 2;
  s.layers.push_back(l);

  l = {};
  l.kind = "batchnorm";
  l.name = "stem.bn";
  l.in = stage_channels[0];
  s.layers.push_back(l);

  l = {};
  l.kind = "relu";
  l.name = "stem.relu";
  s.layers.push_back(l);

  l = {};
  l.kind = "maxpool2";
  l.name = "stem.pool";
  s.layers.push_back(l);

  std::size_t prev = stage_channels[0];
  for (std::size_t i = 0; i < stage_channels.size(); ++i) {
    for (std::size_t b = 0; b < blocks_per_stage; ++b) {
      l = {};
      l.kind = "resblock";
      l.name = "stage" + std::to_string(i) + ".block" + std::to_string(b);
      l.in = prev;
      l.out = stage_channels[i];
      l.stride = (i > 0 && b == 0) ? 2 : 1;
      s.layers.push_back(l);
      prev = stage_channels[i];
    }
  }

  l = {};
  l.kind = "gap";
  l.name = "gap";
  s.layers.push_back(l);

  l = {};
  l.kind = "dense";
  l.name = "head";
  l.in = prev;
  l.out = n_classes;
  s.layers.push_back(l);

  s.validate();
  return s;
}

}  // namespace ser::nn
