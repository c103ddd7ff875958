#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ser {

// Stable integer codes 0-7, in this order, everywhere (labels, confusion
// matrix axes, one-hot encodings, model heads).
enum class Emotion : int {
  neutral = 0,
  calm,
  happy,
  sad,
  angry,
  fearful,
  disgust,
  surprised,
};

inline constexpr int kNumEmotions = 8;

const char* to_string(Emotion e);
std::optional<Emotion> emotion_from_string(std::string_view s);

enum class SourceDataset { ravdess, savee, synth };
const char* to_string(SourceDataset d);
std::optional<SourceDataset> source_from_string(std::string_view s);

enum class Split { train, val, test, unassigned };
const char* to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

class DatasetError : public std::runtime_error {
 public:
  enum class Kind {
    FieldCount,
    OutOfRangeCode,
    UnknownCode,
    DuplicatePath,
    EmptyClass,
    BadCsv,
    BadRatios,
  };
  DatasetError(Kind kind, const std::string& detail)
      : std::runtime_error("dataset: " + detail), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ExampleMeta {
  std::string path;
  SourceDataset dataset = SourceDataset::synth;
  std::string actor;
  Emotion emotion = Emotion::neutral;
  Split split = Split::unassigned;

  bool operator==(const ExampleMeta&) const = default;
};

struct Manifest {
  std::vector<ExampleMeta> examples;

  std::size_t size() const { return examples.size(); }
  std::vector<long long> class_counts(int n_classes = kNumEmotions) const;
  // Highest emotion code present plus one; 0 for an empty manifest.
  int n_classes_present() const;
};

// RAVDESS convention: 7 dash-separated 2-digit fields + ".wav";
// field 3 is the emotion (01 = neutral ... 08 = surprised), field 7 the actor.
ExampleMeta parse_ravdess_filename(const std::string& name);

// SAVEE convention: ACTOR_codeNN.wav with code in {a,d,f,h,n,sa,su}.
// SAVEE contributes no calm.
ExampleMeta parse_savee_filename(const std::string& name);

struct SplitRatios {
  double train = 0.90;
  double val = 0.05;
  double test = 0.05;
};

// Per-class seeded shuffle, then a largest-remainder ratio cut. Remainder
// ties go to the earlier split (train, then val, then test). Deterministic
// for a fixed seed and independent of class iteration order.
Manifest stratified_split(const Manifest& m, const SplitRatios& ratios,
                          std::uint64_t seed);

// CSV columns path,dataset,actor,emotion,split; UTF-8, header row, LF.
void write_manifest_csv(const Manifest& m, const std::string& path);
std::string manifest_to_csv(const Manifest& m);
Manifest read_manifest_csv(const std::string& path);
Manifest manifest_from_csv(const std::string& text);

}  // namespace ser
