#include "ser/nn/train.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "ser/dsp.hpp"
#include "ser/nn/adam.hpp"
#include "ser/nn/loss.hpp"
#include "ser/sert.hpp"

namespace ser::nn {

std::string to_string(InputLayout l) {
  return l == InputLayout::image ? "image" : "sequence";
}

InputLayout input_layout_from_string(const std::string& s) {
  if (s == "image") return InputLayout::image;
  if (s == "sequence") return InputLayout::sequence;
  throw std::invalid_argument("unknown input layout '" + s + "'");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be > 0");
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
  if (!(lr_decay > 0.0) || lr_decay > 1.0)
    throw std::invalid_argument("train config: lr_decay must be in (0, 1]");
  if (lr_decay_every == 0)
    throw std::invalid_argument("train config: lr_decay_every must be > 0");
  if (stages.empty() && epochs == 0)
    throw std::invalid_argument("train config: epochs must be > 0");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].size == 0 || stages[i].epochs == 0)
      throw std::invalid_argument("train config: stage sizes and epochs must be > 0");
    if (i > 0 && stages[i].size <= stages[i - 1].size)
      throw std::invalid_argument("train config: stages must be ordered by ascending size");
  }
  if (!stages.empty() && layout == InputLayout::sequence)
    throw std::invalid_argument("train config: progressive stages need image layout");
  if (mixup && !(mixup_alpha > 0.0))
    throw std::invalid_argument("train config: mixup_alpha must be > 0");
  if (augment) {
    policy.validate();
    if (layout == InputLayout::sequence)
      throw std::invalid_argument("train config: augment policy needs image layout");
  }
  if (stop_at_val_acc < 0.0 || stop_at_val_acc > 1.0)
    throw std::invalid_argument("train config: stop_at_val_acc must be in [0, 1]");
}

std::size_t TrainConfig::total_epochs() const {
  if (stages.empty()) return epochs;
  std::size_t n = 0;
  for (const auto& s : stages) n += s.epochs;
  return n;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(nlohmann::json(*this).dump()); }

void to_json(nlohmann::json& j, const TrainConfig& c) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : c.stages) stages.push_back({{"size", s.size}, {"epochs", s.epochs}});
  j = nlohmann::json{{"batch_size", c.batch_size},
                     {"lr", c.lr},
                     {"lr_decay", c.lr_decay},
                     {"lr_decay_every", c.lr_decay_every},
                     {"epochs", c.epochs},
                     {"seed", c.seed},
                     {"layout", to_string(c.layout)},
                     {"mixup", c.mixup},
                     {"mixup_alpha", c.mixup_alpha},
                     {"augment", c.augment},
                     {"policy", c.policy},
                     {"stages", stages},
                     {"freeze_prefixes", c.freeze_prefixes},
                     {"stop_at_val_acc", c.stop_at_val_acc}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.lr_decay_every = j.value("lr_decay_every", c.lr_decay_every);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  if (j.contains("layout")) c.layout = input_layout_from_string(j.at("layout"));
  c.mixup = j.value("mixup", c.mixup);
  c.mixup_alpha = j.value("mixup_alpha", c.mixup_alpha);
  c.augment = j.value("augment", c.augment);
  if (j.contains("policy")) j.at("policy").get_to(c.policy);
  if (j.contains("stages"))
    for (const auto& s : j.at("stages"))
      c.stages.push_back({s.at("size").get<std::size_t>(), s.at("epochs").get<std::size_t>()});
  if (j.contains("freeze_prefixes"))
    j.at("freeze_prefixes").get_to(c.freeze_prefixes);
  c.stop_at_val_acc = j.value("stop_at_val_acc", c.stop_at_val_acc);
}

std::string History::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,val_acc\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss,
                  r.val_loss, r.val_acc);
    out += buf;
  }
  return out;
}

History History::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,val_loss,val_acc")
    throw FormatError("history csv: bad header");
  History h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochStats r;
    char extra;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf%c", &r.epoch, &r.train_loss, &r.val_loss,
                    &r.val_acc, &extra) != 4)
      throw FormatError("history csv: bad row '" + line + "'");
    h.rows.push_back(r);
  }
  return h;
}

namespace {

// Resize (images, when a stage size is set), min-max normalize, and for
// sequences flip [D, T] features to time-major [T, D].
Tensor prep_example(const Tensor& feat, InputLayout layout, std::size_t size) {
  if (feat.ndim() != 2) throw std::invalid_argument("train: features must be 2-d matrices");
  if (layout == InputLayout::image) {
    if (size > 0 && (feat.rows() != size || feat.cols() != size))
      return dsp::minmax_normalize(dsp::resize_bilinear(feat, size, size));
    return dsp::minmax_normalize(feat);
  }
  return transpose(dsp::minmax_normalize(feat));
}

Tensor stack_batch(const std::vector<Tensor>& xs, InputLayout layout) {
  const std::size_t n = xs.size();
  const std::size_t r = xs[0].rows(), c = xs[0].cols();
  Tensor out = layout == InputLayout::image ? Tensor({n, 1, r, c}) : Tensor({n, r, c});
  for (std::size_t i = 0; i < n; ++i) {
    if (!xs[i].same_shape(xs[0]))
      throw std::invalid_argument("train: examples in a batch disagree on shape: " +
                                  xs[i].shape_str() + " vs " + xs[0].shape_str());
    std::copy(xs[i].data.begin(), xs[i].data.end(), out.data.begin() + i * r * c);
  }
  return out;
}

std::size_t argmax_row(const double* row, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

}  // namespace

EvalStats evaluate(Model& model, const FeatureDataset& data, const TrainConfig& cfg,
                   std::size_t stage_size) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const std::size_t k = data.n_classes;
  EvalStats out;
  out.predictions.reserve(data.size());
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(start + cfg.batch_size, data.size());
    std::vector<Tensor> xs;
    xs.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      xs.push_back(prep_example(data.x[i], cfg.layout, stage_size));
    const Tensor xb = stack_batch(xs, cfg.layout);
    Tensor yb({end - start, k});
    for (std::size_t i = start; i < end; ++i)
      yb((i - start), static_cast<std::size_t>(data.y[i])) = 1.0;

    const Tensor logits = model.forward(xb, false);
    const SceResult sce = softmax_cross_entropy(logits, yb);
    loss_sum += sce.loss * static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t pred = argmax_row(logits.data.data() + (i - start) * k, k);
      out.predictions.push_back(static_cast<int>(pred));
      if (pred == static_cast<std::size_t>(data.y[i])) ++correct;
    }
  }
  out.loss = loss_sum / static_cast<double>(data.size());
  out.acc = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

TrainResult train(Model& model, const FeatureDataset& train_set,
                  const FeatureDataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  train_set.validate();
  val_set.validate();
  if (train_set.size() == 0 || val_set.size() == 0)
    throw std::invalid_argument("train: both train and val splits must be nonempty");
  if (train_set.n_classes != val_set.n_classes)
    throw std::invalid_argument("train: class count differs between splits");

  model.seed_dropout(derive_seed(cfg.seed, "dropout"));
  for (const auto& prefix : cfg.freeze_prefixes) model.freeze(prefix);

  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  const std::vector<ParamRef> params = model.params();
  const std::uint64_t cfg_hash = cfg.hash();
  const std::size_t k = train_set.n_classes;

  std::vector<ProgressiveStage> stages = cfg.stages;
  if (stages.empty()) stages.push_back({0, cfg.epochs});

  TrainResult res;
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t epoch = 0;
  bool stop = false;

  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, "shuffle");
  const std::uint64_t augment_seed = derive_seed(cfg.seed, "augment");
  const std::uint64_t mixup_seed = derive_seed(cfg.seed, "mixup");

  for (const auto& stage : stages) {
    for (std::size_t se = 0; se < stage.epochs && !stop; ++se) {
      ++epoch;
      const double lr_scale =
          std::pow(cfg.lr_decay, static_cast<double>((epoch - 1) / cfg.lr_decay_every));

      std::vector<std::size_t> order(train_set.size());
      std::iota(order.begin(), order.end(), 0);
      Rng(derive_seed(shuffle_seed, epoch)).shuffle(order);

      double loss_sum = 0.0;
      std::size_t batch_index = 0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
        const std::size_t end = std::min(start + cfg.batch_size, order.size());
        const std::size_t nb = end - start;

        std::vector<Tensor> xs;
        std::vector<std::vector<double>> ys;
        xs.reserve(nb);
        ys.reserve(nb);
        for (std::size_t i = start; i < end; ++i) {
          const std::size_t idx = order[i];
          Tensor ex = prep_example(train_set.x[idx], cfg.layout, stage.size);
          if (cfg.augment) {
            Rng arng(derive_seed(derive_seed(augment_seed, epoch), idx));
            ex = aug::apply_policy(ex, cfg.policy, arng);
          }
          xs.push_back(std::move(ex));
          std::vector<double> onehot(k, 0.0);
          onehot[static_cast<std::size_t>(train_set.y[idx])] = 1.0;
          ys.push_back(std::move(onehot));
        }

        if (cfg.mixup && nb > 1) {
          Rng mrng(derive_seed(derive_seed(mixup_seed, epoch), batch_index));
          std::vector<std::size_t> partner(nb);
          std::iota(partner.begin(), partner.end(), 0);
          mrng.shuffle(partner);
          std::vector<Tensor> mx(nb);
          std::vector<std::vector<double>> my(nb);
          for (std::size_t i = 0; i < nb; ++i) {
            aug::MixupPair pair{xs[i], xs[partner[i]], ys[i], ys[partner[i]],
                                aug::sample_lambda(cfg.mixup_alpha, mrng)};
            aug::MixupResult mixed = aug::mixup(pair);
            mx[i] = std::move(mixed.x);
            my[i] = std::move(mixed.y);
          }
          xs = std::move(mx);
          ys = std::move(my);
        }

        const Tensor xb = stack_batch(xs, cfg.layout);
        Tensor yb({nb, k});
        for (std::size_t i = 0; i < nb; ++i)
          for (std::size_t j = 0; j < k; ++j) yb(i, j) = ys[i][j];

        const Tensor logits = model.forward(xb, true);
        const SceResult sce = softmax_cross_entropy(logits, yb);
        if (!std::isfinite(sce.loss))
          throw TrainError("training diverged at epoch " + std::to_string(epoch));
        model.zero_grads();
        model.backward(sce.grad);
        adam.step(params, lr_scale);
        loss_sum += sce.loss * static_cast<double>(nb);
      }

      const EvalStats ev = evaluate(model, val_set, cfg, stage.size);
      EpochStats row;
      row.epoch = epoch;
      row.train_loss = loss_sum / static_cast<double>(train_set.size());
      row.val_loss = ev.loss;
      row.val_acc = ev.acc;
      row.stage_size = stage.size;
      res.history.rows.push_back(row);

      if (ev.acc > best_acc || (ev.acc == best_acc && ev.loss < best_loss)) {
        best_acc = ev.acc;
        best_loss = ev.loss;
        res.best = checkpoint_from_model(model, static_cast<std::uint32_t>(epoch), cfg_hash);
        res.best_epoch = epoch;
        res.best_val_acc = ev.acc;
      }
      if (cfg.stop_at_val_acc > 0.0 && ev.acc >= cfg.stop_at_val_acc) stop = true;
    }
    if (stop) break;
  }
  return res;
}

}  // namespace ser::nn
