#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ser/audio.hpp"
#include "ser/dataset.hpp"
#include "ser/eval.hpp"
#include "ser/featurize.hpp"
#include "ser/nn/checkpoint.hpp"
#include "ser/nn/model.hpp"
#include "ser/nn/train.hpp"
#include "ser/rng.hpp"
#include "ser/sert.hpp"
#include "ser/svg.hpp"
#include "ser/svm.hpp"
#include "ser/synth.hpp"
#include "ser/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty seed value");
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end == nullptr || *end != '\0')
    throw std::invalid_argument("bad seed value: " + s);
  return static_cast<std::uint64_t>(v);
}

// Precedence: explicit --seed flag, then SER_SEED, then config file, then 0.
std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_value, const json& cfg) {
  if (flag_given) return flag_value;
  if (const char* env = std::getenv("SER_SEED")) return parse_u64(env);
  if (cfg.contains("seed")) return cfg["seed"].get<std::uint64_t>();
  return 0;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(ser::read_text_file(path));
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object: " + path);
  return j;
}

void write_run_json(const std::string& dir, const std::string& command,
                    const json& config, std::uint64_t seed) {
  json run{{"command", command},
           {"config", config},
           {"config_hash", ser::fnv1a64(config.dump())},
           {"seed", seed},
           {"format_versions",
            json{{"manifest", kManifestVersion},
                 {"serc", ser::nn::kSercVersion},
                 {"serm", ser::svm::kSermVersion},
                 {"sert", ser::kSertVersion}}}};
  fs::create_directories(dir.empty() ? "." : dir);
  ser::write_text_file((fs::path(dir) / "run.json").string(), run.dump(2) + "\n");
}

std::string manifest_root(const std::string& manifest_path) {
  return fs::path(manifest_path).parent_path().string();
}

// Features for one split as an [n, d] matrix; every row must be 1-d.
ser::Tensor stack_rows(const ser::FeatureDataset& ds, const std::string& what) {
  if (ds.x.empty()) throw std::invalid_argument(what + ": split is empty");
  if (ds.x[0].ndim() != 1)
    throw std::invalid_argument(
        what + ": needs 1-d feature vectors (featurize with --kind mfcc-mean), got shape " +
        ds.x[0].shape_str());
  const std::size_t d = ds.x[0].size();
  ser::Tensor m({ds.x.size(), d});
  for (std::size_t i = 0; i < ds.x.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = ds.x[i][j];
  }
  return m;
}

std::vector<ser::nn::ProgressiveStage> parse_stages(const std::string& text) {
  std::vector<ser::nn::ProgressiveStage> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("bad --stages entry (want SIZE:EPOCHS): " + item);
    ser::nn::ProgressiveStage st;
    st.size = static_cast<std::size_t>(parse_u64(item.substr(0, colon)));
    st.epochs = static_cast<std::size_t>(parse_u64(item.substr(colon + 1)));
    out.push_back(st);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) out.push_back(static_cast<std::size_t>(parse_u64(item)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty size list: " + text);
  return out;
}

int detect_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ser::FormatError("cannot open model file: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() != 4) throw ser::FormatError("model file too short: " + path);
  std::string m(magic, 4);
  if (m == "SERC") return 0;
  if (m == "SERM") return 1;
  throw ser::FormatError("unrecognized model file magic in " + path);
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  int classes = 4;
  int per_class = 50;
  double duration = 4.0;
  int sample_rate = 22050;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double train_ratio = 0.90, val_ratio = 0.05, test_ratio = 0.05;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  std::uint64_t seed = a.seed_given ? a.seed : resolve_seed(false, 0, json::object());
  ser::SynthSpec spec = ser::SynthSpec::make(a.classes, a.per_class, a.duration, seed, a.sample_rate);
  ser::Manifest m = ser::synth_corpus(spec, a.out);
  for (auto& ex : m.examples)
    ex.path = fs::proximate(ex.path, a.out).generic_string();
  ser::SplitRatios ratios{a.train_ratio, a.val_ratio, a.test_ratio};
  m = ser::stratified_split(m, ratios, ser::derive_seed(seed, "split"));
  ser::write_manifest_csv(m, (fs::path(a.out) / "manifest.csv").string());

  json cfg{{"classes", a.classes},
           {"per_class", a.per_class},
           {"duration_s", a.duration},
           {"sample_rate", a.sample_rate},
           {"split", json{{"train", a.train_ratio}, {"val", a.val_ratio}, {"test", a.test_ratio}}},
           {"seed", seed}};
  write_run_json(a.out, "synth", cfg, seed);
  std::cout << "wrote " << m.size() << " clips and manifest.csv under " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- ingest ----

struct IngestArgs {
  std::string ravdess, savee, out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double train_ratio = 0.90, val_ratio = 0.05, test_ratio = 0.05;
};

void scan_wavs(const std::string& dir, ser::SourceDataset kind, const fs::path& manifest_dir,
               ser::Manifest& m) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    ser::ExampleMeta ex = kind == ser::SourceDataset::ravdess
                              ? ser::parse_ravdess_filename(f.filename().string())
                              : ser::parse_savee_filename(f.filename().string());
    ex.path = fs::proximate(f, manifest_dir).generic_string();
    m.examples.push_back(std::move(ex));
  }
}

int run_ingest(const IngestArgs& a) {
  if (a.ravdess.empty() && a.savee.empty())
    throw std::invalid_argument("ingest: need at least one of --ravdess / --savee");
  std::uint64_t seed = a.seed_given ? a.seed : resolve_seed(false, 0, json::object());
  fs::path manifest_dir = fs::path(a.out).parent_path();
  ser::Manifest m;
  if (!a.ravdess.empty()) scan_wavs(a.ravdess, ser::SourceDataset::ravdess, manifest_dir, m);
  if (!a.savee.empty()) scan_wavs(a.savee, ser::SourceDataset::savee, manifest_dir, m);
  if (m.examples.empty())
    throw ser::DatasetError(ser::DatasetError::Kind::EmptyClass, "ingest: no .wav files found");
  ser::SplitRatios ratios{a.train_ratio, a.val_ratio, a.test_ratio};
  m = ser::stratified_split(m, ratios, seed);
  if (!manifest_dir.empty()) fs::create_directories(manifest_dir);
  ser::write_manifest_csv(m, a.out);

  json cfg{{"ravdess", a.ravdess},
           {"savee", a.savee},
           {"split", json{{"train", a.train_ratio}, {"val", a.val_ratio}, {"test", a.test_ratio}}},
           {"seed", seed}};
  write_run_json(manifest_dir.string(), "ingest", cfg, seed);
  std::cout << "wrote manifest with " << m.size() << " rows to " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------ featurize ----

int run_featurize(CLI::App* cmd, const std::string& manifest_path, const std::string& out,
                  const std::string& config_path, const std::string& kind,
                  const ser::FeaturizeConfig& flag_cfg, int threads) {
  json cfg_json = load_config_file(config_path);
  ser::FeaturizeConfig cfg = cfg_json.empty() ? ser::FeaturizeConfig{} : cfg_json.get<ser::FeaturizeConfig>();
  if (cmd->count("--sample-rate")) cfg.sample_rate = flag_cfg.sample_rate;
  if (cmd->count("--duration")) cfg.duration_s = flag_cfg.duration_s;
  if (cmd->count("--n-fft")) cfg.n_fft = flag_cfg.n_fft;
  if (cmd->count("--hop")) cfg.hop = flag_cfg.hop;
  if (cmd->count("--n-mels")) cfg.n_mels = flag_cfg.n_mels;
  if (cmd->count("--n-mfcc")) cfg.n_mfcc = flag_cfg.n_mfcc;
  if (cmd->count("--fmin")) cfg.fmin = flag_cfg.fmin;
  if (cmd->count("--fmax")) cfg.fmax = flag_cfg.fmax;
  if (cmd->count("--kind") || cfg_json.empty() || !cfg_json.contains("kind"))
    cfg.kind = ser::feature_kind_from_string(kind);
  cfg.validate();

  ser::Manifest m = ser::read_manifest_csv(manifest_path);
  ser::featurize_manifest(m, manifest_root(manifest_path), out, cfg, threads);

  json resolved = cfg;
  resolved["manifest"] = manifest_path;
  write_run_json(out, "featurize", resolved, 0);
  std::cout << "featurized " << m.size() << " clips into " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
  std::string model;  // svm | lstm | cnn
  std::string manifest, features, out = "run";
  std::string config_path;
  std::uint64_t seed = 0;
  // nn knobs
  ser::nn::TrainConfig tc;
  std::string stages_text;
  std::vector<std::string> freeze;
  std::string from_ckpt;
  int replace_head_classes = 0;
  std::size_t hidden = 64;
  std::string channels = "8,16,32";
  std::size_t blocks = 2;
  int n_classes = 0;
  // svm knobs
  double svm_c = 1.0;
  double svm_gamma = 0.0;
  double svm_tol = 1e-3;
  int svm_max_passes = 10;
};

int run_train_svm(const TrainArgs& a, const ser::Manifest& m, std::uint64_t seed) {
  ser::FeatureDataset tr = ser::load_feature_dataset(m, ser::Split::train, a.features, a.n_classes);
  ser::Tensor x = stack_rows(tr, "svm train");
  ser::svm::SvmConfig cfg;
  cfg.c = a.svm_c;
  cfg.gamma = a.svm_gamma;
  cfg.tol = a.svm_tol;
  cfg.max_passes = a.svm_max_passes;
  cfg.seed = seed;
  ser::svm::SvmMulti model = ser::svm::ovo_train(x, tr.y, cfg);

  fs::create_directories(a.out);
  ser::svm::save_svm_file(model, (fs::path(a.out) / "model.serm").string());

  json resolved{{"model", "svm"},     {"manifest", a.manifest}, {"features", a.features},
                {"c", cfg.c},         {"gamma", cfg.gamma},     {"tol", cfg.tol},
                {"max_passes", cfg.max_passes}, {"seed", seed}};
  write_run_json(a.out, "train", resolved, seed);

  ser::FeatureDataset va = ser::load_feature_dataset(m, ser::Split::val, a.features, a.n_classes);
  if (!va.x.empty()) {
    std::vector<int> pred = ser::svm::ovo_predict(model, stack_rows(va, "svm val"));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == va.y[i];
    std::printf("svm: %zu support pairs, val acc %.4f\n", model.pairs.size(),
                static_cast<double>(hit) / static_cast<double>(pred.size()));
  } else {
    std::printf("svm: trained on %zu examples\n", tr.x.size());
  }
  return 0;
}

int run_train_nn(const TrainArgs& a, CLI::App* cmd, const ser::Manifest& m,
                 const json& cfg_json, std::uint64_t seed) {
  ser::nn::TrainConfig tc;
  if (!cfg_json.empty()) tc = cfg_json.get<ser::nn::TrainConfig>();
  if (cmd->count("--epochs")) tc.epochs = a.tc.epochs;
  if (cmd->count("--batch-size")) tc.batch_size = a.tc.batch_size;
  if (cmd->count("--lr")) tc.lr = a.tc.lr;
  if (cmd->count("--lr-decay")) tc.lr_decay = a.tc.lr_decay;
  if (cmd->count("--lr-decay-every")) tc.lr_decay_every = a.tc.lr_decay_every;
  if (cmd->count("--mixup")) tc.mixup = true;
  if (cmd->count("--mixup-alpha")) { tc.mixup_alpha = a.tc.mixup_alpha; tc.mixup = true; }
  if (cmd->count("--augment")) tc.augment = true;
  if (cmd->count("--stop-at-val-acc")) tc.stop_at_val_acc = a.tc.stop_at_val_acc;
  if (cmd->count("--stages")) tc.stages = parse_stages(a.stages_text);
  if (!a.freeze.empty()) tc.freeze_prefixes = a.freeze;
  tc.seed = seed;
  tc.layout = a.model == "lstm" ? ser::nn::InputLayout::sequence : ser::nn::InputLayout::image;

  ser::FeatureDataset tr = ser::load_feature_dataset(m, ser::Split::train, a.features, a.n_classes);
  ser::FeatureDataset va = ser::load_feature_dataset(m, ser::Split::val, a.features, a.n_classes);
  if (tr.x.empty()) throw std::invalid_argument("train: train split is empty");
  if (va.x.empty()) throw std::invalid_argument("train: val split is empty");
  if (tr.x[0].ndim() != 2)
    throw std::invalid_argument("train: " + a.model + " needs 2-d features (logmel or mfcc), got shape " +
                                tr.x[0].shape_str());

  ser::nn::Model model;
  if (!a.from_ckpt.empty()) {
    ser::nn::ModelCheckpoint ckpt = ser::nn::load_checkpoint_file(a.from_ckpt);
    if (a.replace_head_classes > 0)
      ckpt = ser::nn::replace_head(ckpt, static_cast<std::size_t>(a.replace_head_classes), seed);
    model = ser::nn::model_from_checkpoint(ckpt);
  } else if (a.model == "lstm") {
    std::size_t n_feats = tr.x[0].rows();
    model = ser::nn::build_model(ser::nn::build_bilstm_classifier(n_feats, a.hidden,
                                                                  static_cast<std::size_t>(tr.n_classes)),
                                 seed);
  } else {
    model = ser::nn::build_model(ser::nn::build_mini_resnet(parse_size_list(a.channels),
                                                            static_cast<std::size_t>(tr.n_classes), 1,
                                                            a.blocks),
                                 seed);
  }

  ser::nn::TrainResult res = ser::nn::train(model, tr, va, tc);

  fs::create_directories(a.out);
  ser::nn::save_checkpoint_file(res.best, (fs::path(a.out) / "model.serc").string());
  ser::write_text_file((fs::path(a.out) / "history.csv").string(), res.history.to_csv());

  json resolved = tc;
  resolved["model"] = a.model;
  resolved["manifest"] = a.manifest;
  resolved["features"] = a.features;
  if (!a.from_ckpt.empty()) {
    resolved["from"] = a.from_ckpt;
    if (a.replace_head_classes > 0) resolved["replace_head"] = a.replace_head_classes;
  } else if (a.model == "lstm") {
    resolved["hidden"] = a.hidden;
  } else {
    resolved["channels"] = a.channels;
    resolved["blocks"] = a.blocks;
  }
  write_run_json(a.out, "train", resolved, seed);
  std::printf("best epoch %zu, val acc %.4f\n", res.best_epoch, res.best_val_acc);
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
  std::string model_path, manifest, features, out = "report";
  std::string split = "test";
  std::string id;
  std::string history_path;
  int n_classes = 0;
  std::size_t size = 0;
};

int run_eval(const EvalArgs& a) {
  auto split = ser::split_from_string(a.split);
  if (!split) throw std::invalid_argument("eval: bad --split " + a.split);
  ser::Manifest m = ser::read_manifest_csv(a.manifest);
  ser::FeatureDataset ds = ser::load_feature_dataset(m, *split, a.features, a.n_classes);
  if (ds.x.empty()) throw std::invalid_argument("eval: split " + a.split + " is empty");

  std::string model_id = a.id;
  std::vector<int> pred;
  if (detect_model_file(a.model_path) == 0) {
    ser::nn::ModelCheckpoint ckpt = ser::nn::load_checkpoint_file(a.model_path);
    ser::nn::Model model = ser::nn::model_from_checkpoint(ckpt);
    ser::nn::TrainConfig tc;
    tc.layout = ser::nn::InputLayout::image;
    for (const auto& l : model.spec.layers)
      if (l.kind == "bilstm") tc.layout = ser::nn::InputLayout::sequence;
    ser::nn::EvalStats st = ser::nn::evaluate(model, ds, tc, a.size);
    pred = st.predictions;
    if (model_id.empty()) model_id = tc.layout == ser::nn::InputLayout::sequence ? "bilstm" : "cnn";
  } else {
    ser::svm::SvmMulti model = ser::svm::load_svm_file(a.model_path);
    pred = ser::svm::ovo_predict(model, stack_rows(ds, "eval"));
    if (model_id.empty()) model_id = "svm";
  }

  ser::eval::ConfusionMatrix cm = ser::eval::confusion(ds.y, pred, ds.n_classes);
  ser::eval::MetricsReport report = ser::eval::metrics(cm, model_id, a.split);
  ser::nn::History hist;
  if (!a.history_path.empty()) hist = ser::nn::History::from_csv(ser::read_text_file(a.history_path));
  ser::eval::emit_report(report, hist, a.out);

  json resolved{{"model", a.model_path}, {"manifest", a.manifest}, {"features", a.features},
                {"split", a.split},      {"id", model_id},         {"size", a.size}};
  write_run_json(a.out, "eval", resolved, 0);
  std::printf("%s\n", ser::eval::table_line(model_id, report.accuracy, report.macro_f1).c_str());
  return 0;
}

// ----------------------------------------------------------------- plot ----

int run_plot(const std::string& kind, const std::string& in, const std::string& out) {
  std::string svg;
  if (kind == "loss") {
    svg = ser::svg::loss_curves(ser::nn::History::from_csv(ser::read_text_file(in)));
  } else if (kind == "spectrogram") {
    ser::Tensor t = ser::load_sert(in);
    if (t.ndim() != 2)
      throw std::invalid_argument("plot: spectrogram wants a 2-d tensor, got shape " + t.shape_str());
    svg = ser::svg::heatmap(t);
  } else if (kind == "waveform") {
    svg = ser::svg::waveform(ser::load_wav(in).samples);
  } else {
    throw std::invalid_argument("plot: bad --kind " + kind);
  }
  fs::path parent = fs::path(out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  ser::write_text_file(out, svg);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ser: speech emotion recognition toolkit"};
  app.require_subcommand(1);

  // synth
  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic corpus");
  synth->add_option("--classes", sa.classes, "number of classes")->check(CLI::Range(1, 8));
  synth->add_option("--per-class", sa.per_class, "clips per class");
  synth->add_option("--duration", sa.duration, "clip length in seconds");
  synth->add_option("--sample-rate", sa.sample_rate, "sample rate in Hz");
  auto* synth_seed = synth->add_option("--seed", sa.seed, "rng seed");
  synth->add_option("--train-ratio", sa.train_ratio, "train split ratio");
  synth->add_option("--val-ratio", sa.val_ratio, "val split ratio");
  synth->add_option("--test-ratio", sa.test_ratio, "test split ratio");
  synth->add_option("--out", sa.out, "output directory")->required();

  // ingest
  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "scan RAVDESS/SAVEE directories into a manifest");
  ingest->add_option("--ravdess", ia.ravdess, "RAVDESS root directory");
  ingest->add_option("--savee", ia.savee, "SAVEE root directory");
  auto* ingest_seed = ingest->add_option("--seed", ia.seed, "rng seed");
  ingest->add_option("--train-ratio", ia.train_ratio, "train split ratio");
  ingest->add_option("--val-ratio", ia.val_ratio, "val split ratio");
  ingest->add_option("--test-ratio", ia.test_ratio, "test split ratio");
  ingest->add_option("--out", ia.out, "manifest csv path")->required();

  // featurize
  std::string fz_manifest, fz_out, fz_config, fz_kind = "logmel";
  ser::FeaturizeConfig fz_flags;
  int fz_threads = 0;
  auto* fz = app.add_subcommand("featurize", "extract features for every manifest row");
  fz->add_option("--manifest", fz_manifest, "manifest csv")->required();
  fz->add_option("--out", fz_out, "feature output directory")->required();
  fz->add_option("--config", fz_config, "featurize config json");
  fz->add_option("--kind", fz_kind, "feature kind")
      ->check(CLI::IsMember({"logmel", "mfcc", "mfcc-mean"}));
  fz->add_option("--sample-rate", fz_flags.sample_rate, "pipeline sample rate");
  fz->add_option("--duration", fz_flags.duration_s, "clip length in seconds");
  fz->add_option("--n-fft", fz_flags.n_fft, "fft size");
  fz->add_option("--hop", fz_flags.hop, "hop length");
  fz->add_option("--n-mels", fz_flags.n_mels, "mel bands");
  fz->add_option("--n-mfcc", fz_flags.n_mfcc, "mfcc coefficients");
  fz->add_option("--fmin", fz_flags.fmin, "mel filterbank low edge Hz");
  fz->add_option("--fmax", fz_flags.fmax, "mel filterbank high edge Hz (0 = sr/2)");
  fz->add_option("--threads", fz_threads, "worker threads (0 = hardware)");

  // train
  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a classifier");
  train->add_option("--model", ta.model, "model family")
      ->required()
      ->check(CLI::IsMember({"svm", "lstm", "cnn"}));
  train->add_option("--manifest", ta.manifest, "manifest csv")->required();
  train->add_option("--features", ta.features, "feature directory")->required();
  train->add_option("--out", ta.out, "output directory");
  train->add_option("--config", ta.config_path, "training config json");
  auto* train_seed = train->add_option("--seed", ta.seed, "rng seed");
  train->add_option("--classes", ta.n_classes, "number of classes (0 = infer)");
  train->add_option("--epochs", ta.tc.epochs, "training epochs");
  train->add_option("--batch-size", ta.tc.batch_size, "minibatch size");
  train->add_option("--lr", ta.tc.lr, "learning rate");
  train->add_option("--lr-decay", ta.tc.lr_decay, "step decay factor");
  train->add_option("--lr-decay-every", ta.tc.lr_decay_every, "epochs per decay step");
  train->add_flag("--mixup", "enable mixup");
  train->add_option("--mixup-alpha", ta.tc.mixup_alpha, "mixup beta parameter");
  train->add_flag("--augment", "enable train-split augmentation");
  train->add_option("--stop-at-val-acc", ta.tc.stop_at_val_acc, "early stop threshold");
  train->add_option("--stages", ta.stages_text, "progressive stages SIZE:EPOCHS,...");
  train->add_option("--freeze", ta.freeze, "freeze parameter prefixes")->delimiter(',');
  train->add_option("--from", ta.from_ckpt, "initialize from checkpoint");
  train->add_option("--replace-head", ta.replace_head_classes, "re-init head for N classes");
  train->add_option("--hidden", ta.hidden, "lstm hidden size");
  train->add_option("--channels", ta.channels, "cnn stage channels, e.g. 8,16,32");
  train->add_option("--blocks", ta.blocks, "residual blocks per stage");
  train->add_option("--c", ta.svm_c, "svm box constraint");
  train->add_option("--gamma", ta.svm_gamma, "svm rbf gamma (0 = 1/(d*var))");
  train->add_option("--tol", ta.svm_tol, "svm kkt tolerance");
  train->add_option("--max-passes", ta.svm_max_passes, "svm quiet sweeps before stopping");

  // eval
  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "evaluate a model and emit a report");
  ev->add_option("--model", ea.model_path, "model file (.serc or .serm)")->required();
  ev->add_option("--manifest", ea.manifest, "manifest csv")->required();
  ev->add_option("--features", ea.features, "feature directory")->required();
  ev->add_option("--split", ea.split, "split to score")
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--out", ea.out, "report directory");
  ev->add_option("--id", ea.id, "model id for the report");
  ev->add_option("--history", ea.history_path, "history csv for the loss plot");
  ev->add_option("--classes", ea.n_classes, "number of classes (0 = infer)");
  ev->add_option("--size", ea.size, "resize square side for image models (0 = native)");

  // plot
  std::string pl_kind, pl_in, pl_out;
  auto* plot = app.add_subcommand("plot", "render a standalone svg");
  plot->add_option("--kind", pl_kind, "loss | spectrogram | waveform")
      ->required()
      ->check(CLI::IsMember({"loss", "spectrogram", "waveform"}));
  plot->add_option("--in", pl_in, "input file (csv, sert, or wav)")->required();
  plot->add_option("--out", pl_out, "output svg path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      sa.seed_given = synth_seed->count() > 0;
      sa.seed = resolve_seed(sa.seed_given, sa.seed, json::object());
      sa.seed_given = true;
      return run_synth(sa);
    }
    if (*ingest) {
      ia.seed_given = ingest_seed->count() > 0;
      ia.seed = resolve_seed(ia.seed_given, ia.seed, json::object());
      ia.seed_given = true;
      return run_ingest(ia);
    }
    if (*fz) return run_featurize(fz, fz_manifest, fz_out, fz_config, fz_kind, fz_flags, fz_threads);
    if (*train) {
      json cfg_json = load_config_file(ta.config_path);
      std::uint64_t seed = resolve_seed(train_seed->count() > 0, ta.seed, cfg_json);
      ta.seed = seed;
      ser::Manifest m = ser::read_manifest_csv(ta.manifest);
      if (ta.n_classes <= 0) ta.n_classes = m.n_classes_present();
      if (ta.model == "svm") return run_train_svm(ta, m, seed);
      return run_train_nn(ta, train, m, cfg_json, seed);
    }
    if (*ev) return run_eval(ea);
    if (*plot) return run_plot(pl_kind, pl_in, pl_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
