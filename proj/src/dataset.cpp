#include "ser/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "ser/rng.hpp"

namespace ser {

namespace {

constexpr std::array<const char*, 8> kEmotionNames = {
    "neutral", "calm", "happy", "sad", "angry", "fearful", "disgust", "surprised"};

std::string basename_of(const std::string& path) {
  const std::size_t slash = path.find_last_of("/\\");
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

bool is_two_digits(std::string_view s) {
  return s.size() == 2 && std::isdigit(static_cast<unsigned char>(s[0])) &&
         std::isdigit(static_cast<unsigned char>(s[1]));
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

const char* to_string(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

std::optional<Emotion> emotion_from_string(std::string_view s) {
  for (int i = 0; i < kNumEmotions; ++i)
    if (s == kEmotionNames[i]) return static_cast<Emotion>(i);
  return std::nullopt;
}

const char* to_string(SourceDataset d) {
  switch (d) {
    case SourceDataset::ravdess: return "ravdess";
    case SourceDataset::savee: return "savee";
    case SourceDataset::synth: return "synth";
  }
  return "synth";
}

std::optional<SourceDataset> source_from_string(std::string_view s) {
  if (s == "ravdess") return SourceDataset::ravdess;
  if (s == "savee") return SourceDataset::savee;
  if (s == "synth") return SourceDataset::synth;
  return std::nullopt;
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  return std::nullopt;
}

std::vector<long long> Manifest::class_counts(int n_classes) const {
  std::vector<long long> counts(static_cast<std::size_t>(n_classes), 0);
  for (const auto& ex : examples) {
    const int code = static_cast<int>(ex.emotion);
    if (code >= 0 && code < n_classes) ++counts[static_cast<std::size_t>(code)];
  }
  return counts;
}

int Manifest::n_classes_present() const {
  int hi = -1;
  for (const auto& ex : examples) hi = std::max(hi, static_cast<int>(ex.emotion));
  return hi + 1;
}

ExampleMeta parse_ravdess_filename(const std::string& name) {
  const std::string base = basename_of(name);
  if (base.size() < 4 || base.substr(base.size() - 4) != ".wav")
    throw DatasetError(DatasetError::Kind::FieldCount,
                       "ravdess name '" + base + "' lacks .wav suffix");
  const std::string stem = base.substr(0, base.size() - 4);
  const auto fields = split_on(stem, '-');
  if (fields.size() != 7)
    throw DatasetError(DatasetError::Kind::FieldCount,
                       "ravdess name '" + base + "' has " +
                           std::to_string(fields.size()) + " fields, want 7");
  for (const auto& f : fields)
    if (!is_two_digits(f))
      throw DatasetError(DatasetError::Kind::OutOfRangeCode,
                         "ravdess field '" + f + "' in '" + base +
                             "' is not a 2-digit code");
  const int emotion_code = std::stoi(fields[2]);
  if (emotion_code < 1 || emotion_code > 8)
    throw DatasetError(DatasetError::Kind::OutOfRangeCode,
                       "ravdess emotion code " + fields[2] + " in '" + base +
                           "' outside 01-08");
  ExampleMeta meta;
  meta.path = name;
  meta.dataset = SourceDataset::ravdess;
  meta.emotion = static_cast<Emotion>(emotion_code - 1);
  meta.actor = fields[6];
  return meta;
}

ExampleMeta parse_savee_filename(const std::string& name) {
  const std::string base = basename_of(name);
  if (base.size() < 4 || base.substr(base.size() - 4) != ".wav")
    throw DatasetError(DatasetError::Kind::FieldCount,
                       "savee name '" + base + "' lacks .wav suffix");
  const std::string stem = base.substr(0, base.size() - 4);
  const std::size_t underscore = stem.find('_');
  if (underscore == std::string::npos || underscore == 0 || underscore + 1 >= stem.size())
    throw DatasetError(DatasetError::Kind::FieldCount,
                       "savee name '" + base + "' is not ACTOR_codeNN.wav");
  const std::string actor = stem.substr(0, underscore);
  const std::string rest = stem.substr(underscore + 1);

  std::size_t code_len = 0;
  while (code_len < rest.size() && std::isalpha(static_cast<unsigned char>(rest[code_len])))
    ++code_len;
  const std::string code = rest.substr(0, code_len);
  const std::string number = rest.substr(code_len);
  if (number.empty() ||
      !std::all_of(number.begin(), number.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw DatasetError(DatasetError::Kind::FieldCount,
                       "savee name '" + base + "' lacks a numeric suffix");

  static const std::map<std::string, Emotion> kCodes = {
      {"a", Emotion::angry},   {"d", Emotion::disgust},  {"f", Emotion::fearful},
      {"h", Emotion::happy},   {"n", Emotion::neutral},  {"sa", Emotion::sad},
      {"su", Emotion::surprised}};
  const auto it = kCodes.find(code);
  if (it == kCodes.end())
    throw DatasetError(DatasetError::Kind::UnknownCode,
                       "savee emotion code '" + code + "' in '" + base + "'");

  ExampleMeta meta;
  meta.path = name;
  meta.dataset = SourceDataset::savee;
  meta.emotion = it->second;
  meta.actor = actor;
  return meta;
}

Manifest stratified_split(const Manifest& m, const SplitRatios& ratios,
                          std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    throw DatasetError(DatasetError::Kind::BadRatios, "split ratios must be >= 0 and sum to 1");
  if (m.examples.empty())
    throw DatasetError(DatasetError::Kind::EmptyClass, "cannot split an empty manifest");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < m.examples.size(); ++i)
    by_class[static_cast<int>(m.examples[i].emotion)].push_back(i);

  Manifest out = m;
  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  for (auto& [code, indices] : by_class) {
    // Per-class stream keyed by the class code, so the result does not
    // depend on which classes happen to be present.
    Rng rng(derive_seed(derive_seed(seed, "stratified_split"),
                        static_cast<std::uint64_t>(code)));
    rng.shuffle(indices);

    const std::size_t n = indices.size();
    std::array<std::size_t, 3> take{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double quota = static_cast<double>(n) * r[s];
      take[s] = static_cast<std::size_t>(quota);
      remainder[s] = quota - static_cast<double>(take[s]);
      assigned += take[s];
    }
    // Largest remainder; ties favor the earlier split.
    while (assigned < n) {
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (remainder[s] > remainder[best]) best = s;
      ++take[best];
      remainder[best] = -1.0;
      ++assigned;
    }

    std::size_t pos = 0;
    const std::array<Split, 3> splits = {Split::train, Split::val, Split::test};
    for (int s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < take[s]; ++k)
        out.examples[indices[pos++]].split = splits[s];
  }
  return out;
}

std::string manifest_to_csv(const Manifest& m) {
  std::string out = "path,dataset,actor,emotion,split\n";
  for (const auto& ex : m.examples) {
    for (const std::string* field : {&ex.path, &ex.actor})
      if (field->find_first_of(",\n\r") != std::string::npos)
        throw DatasetError(DatasetError::Kind::BadCsv,
                           "field '" + *field + "' contains a CSV delimiter");
    out += ex.path;
    out += ',';
    out += to_string(ex.dataset);
    out += ',';
    out += ex.actor;
    out += ',';
    out += to_string(ex.emotion);
    out += ',';
    out += to_string(ex.split);
    out += '\n';
  }
  return out;
}

void write_manifest_csv(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string text = manifest_to_csv(m);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

Manifest manifest_from_csv(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != "path,dataset,actor,emotion,split")
        throw DatasetError(DatasetError::Kind::BadCsv, "unexpected header '" + line + "'");
      header = false;
      continue;
    }
    const auto fields = split_on(line, ',');
    if (fields.size() != 5)
      throw DatasetError(DatasetError::Kind::BadCsv, "bad row '" + line + "'");
    ExampleMeta ex;
    ex.path = fields[0];
    const auto ds = source_from_string(fields[1]);
    const auto emo = emotion_from_string(fields[3]);
    const auto sp = split_from_string(fields[4]);
    if (!ds || !emo || !sp)
      throw DatasetError(DatasetError::Kind::BadCsv, "bad row '" + line + "'");
    ex.dataset = *ds;
    ex.actor = fields[2];
    ex.emotion = *emo;
    ex.split = *sp;
    if (!seen.insert(ex.path).second)
      throw DatasetError(DatasetError::Kind::DuplicatePath, "duplicate path " + ex.path);
    m.examples.push_back(std::move(ex));
  }
  if (header)
    throw DatasetError(DatasetError::Kind::BadCsv, "missing header row");
  return m;
}

Manifest read_manifest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return manifest_from_csv(text);
}

}  // namespace ser
