#include "ser/featurize.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <filesystem>
#include <stdexcept>
#include <thread>

#include "ser/dsp.hpp"
#include "ser/sert.hpp"
#include "ser/textio.hpp"

namespace fs = std::filesystem;

namespace ser {

const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::logmel: return "logmel";
    case FeatureKind::mfcc: return "mfcc";
    case FeatureKind::mfcc_mean: return "mfcc-mean";
  }
  return "?";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "logmel") return FeatureKind::logmel;
  if (s == "mfcc") return FeatureKind::mfcc;
  if (s == "mfcc-mean" || s == "mfcc_mean") return FeatureKind::mfcc_mean;
  throw std::invalid_argument("unknown feature kind: " + s);
}

void FeaturizeConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("featurize: sample_rate must be positive");
  if (duration_s <= 0) throw std::invalid_argument("featurize: duration_s must be positive");
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0)
    throw std::invalid_argument("featurize: n_fft must be a power of two >= 2");
  if (hop == 0) throw std::invalid_argument("featurize: hop must be positive");
  if (n_mels == 0) throw std::invalid_argument("featurize: n_mels must be positive");
  if (n_mfcc == 0 || n_mfcc > n_mels)
    throw std::invalid_argument("featurize: n_mfcc must be in [1, n_mels]");
  if (fmin < 0) throw std::invalid_argument("featurize: fmin must be >= 0");
  double top = fmax > 0 ? fmax : sample_rate / 2.0;
  if (top <= fmin) throw std::invalid_argument("featurize: fmax must exceed fmin");
}

void to_json(nlohmann::json& j, const FeaturizeConfig& c) {
  j = nlohmann::json{{"sample_rate", c.sample_rate},
                     {"duration_s", c.duration_s},
                     {"n_fft", c.n_fft},
                     {"hop", c.hop},
                     {"n_mels", c.n_mels},
                     {"n_mfcc", c.n_mfcc},
                     {"kind", to_string(c.kind)},
                     {"fmin", c.fmin},
                     {"fmax", c.fmax}};
}

void from_json(const nlohmann::json& j, FeaturizeConfig& c) {
  FeaturizeConfig d;
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.duration_s = j.value("duration_s", d.duration_s);
  c.n_fft = j.value("n_fft", d.n_fft);
  c.hop = j.value("hop", d.hop);
  c.n_mels = j.value("n_mels", d.n_mels);
  c.n_mfcc = j.value("n_mfcc", d.n_mfcc);
  c.kind = feature_kind_from_string(j.value("kind", std::string(to_string(d.kind))));
  c.fmin = j.value("fmin", d.fmin);
  c.fmax = j.value("fmax", d.fmax);
}

Tensor featurize_clip(const AudioClip& clip, const FeaturizeConfig& cfg) {
  cfg.validate();
  AudioClip c = clip.sample_rate == cfg.sample_rate ? clip : resample(clip, cfg.sample_rate);
  c = fix_duration(c, cfg.duration_s);
  dsp::PowerSpectrogram ps = dsp::stft(c, cfg.n_fft, cfg.hop);
  double fmax = cfg.fmax > 0 ? cfg.fmax : cfg.sample_rate / 2.0;
  Tensor fb = dsp::mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.fmin, fmax);
  dsp::LogMelSpectrogram lm = dsp::log_mel(ps, fb);
  if (cfg.kind == FeatureKind::logmel) return lm.values;
  dsp::MfccMatrix mf = dsp::mfcc(lm, cfg.n_mfcc);
  if (cfg.kind == FeatureKind::mfcc) return mf.values;
  std::vector<double> avg = dsp::time_average(mf);
  Tensor out({avg.size()});
  out.data = avg;
  return out;
}

std::string feature_file_name(const std::string& rel_path) {
  std::string name = rel_path;
  for (char& ch : name) {
    bool ok = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') ||
              (ch >= '0' && ch <= '9') || ch == '.' || ch == '_' || ch == '-';
    if (!ok) ch = '_';
  }
  return name + ".sert";
}

namespace {

std::string resolve_path(const std::string& root, const std::string& p) {
  fs::path fp(p);
  if (fp.is_absolute() || root.empty()) return p;
  return (fs::path(root) / fp).string();
}

}  // namespace

void featurize_manifest(const Manifest& m, const std::string& root,
                        const std::string& out_dir, const FeaturizeConfig& cfg,
                        int n_threads) {
  cfg.validate();
  fs::create_directories(out_dir);

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = n_threads > 0 ? static_cast<std::size_t>(n_threads)
                                      : std::max(1u, hw);
  workers = std::min(workers, std::max<std::size_t>(1, m.examples.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= m.examples.size()) return;
      try {
        const auto& row = m.examples[i];
        AudioClip clip = load_wav(resolve_path(root, row.path));
        Tensor feat = featurize_clip(clip, cfg);
        save_sert((fs::path(out_dir) / feature_file_name(row.path)).string(), feat);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(m.examples.size());
        return;
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  nlohmann::json j = cfg;
  write_text_file((fs::path(out_dir) / "features.json").string(), j.dump(2) + "\n");
}

FeaturizeConfig load_featurize_config(const std::string& dir) {
  std::string text = read_text_file((fs::path(dir) / "features.json").string());
  return nlohmann::json::parse(text).get<FeaturizeConfig>();
}

FeatureDataset load_feature_dataset(const Manifest& m, Split split,
                                    const std::string& dir, int n_classes) {
  FeatureDataset ds;
  if (n_classes <= 0) {
    int max_code = -1;
    for (const auto& row : m.examples) max_code = std::max(max_code, static_cast<int>(row.emotion));
    n_classes = std::max(max_code + 1, 1);
  }
  ds.n_classes = n_classes;
  for (const auto& row : m.examples) {
    if (row.split != split) continue;
    Tensor t = load_sert((fs::path(dir) / feature_file_name(row.path)).string());
    ds.x.push_back(std::move(t));
    ds.y.push_back(static_cast<int>(row.emotion));
  }
  ds.validate();
  return ds;
}

}  // namespace ser
