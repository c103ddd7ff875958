#include "ser/nn/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ser/sert.hpp"

namespace ser::nn {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'R', 'C'};
// The wire format has no metadata section, so metadata rides in two
// reserved tensors: __meta__ holds {epoch, hash split into 4 u16 words}
// (every value exactly representable as f32) and __spec__ holds the
// architecture JSON, one byte per f32.
constexpr const char* kMetaName = "__meta__";
constexpr const char* kSpecName = "__spec__";

double f32_round(double v) { return static_cast<double>(static_cast<float>(v)); }

CheckpointTensor capture(const std::string& name, const Tensor& t, bool frozen, bool buffer) {
  CheckpointTensor ct;
  ct.name = name;
  ct.dims = t.dims;
  ct.values.reserve(t.size());
  for (double v : t.data) ct.values.push_back(f32_round(v));
  ct.frozen = frozen;
  ct.buffer = buffer;
  return ct;
}

void write_tensor(std::ostream& out, const CheckpointTensor& t) {
  if (t.name.size() > 0xffff) throw FormatError("checkpoint: tensor name too long");
  if (t.dims.size() > 0xff) throw FormatError("checkpoint: too many dims");
  write_u16le(out, static_cast<std::uint16_t>(t.name.size()));
  out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
  const std::uint8_t flags =
      static_cast<std::uint8_t>((t.frozen ? 1 : 0) | (t.buffer ? 2 : 0));
  out.put(static_cast<char>(flags));
  out.put(static_cast<char>(t.dims.size()));
  std::size_t n = 1;
  for (std::size_t d : t.dims) {
    write_u32le(out, static_cast<std::uint32_t>(d));
    n *= d;
  }
  if (t.dims.empty()) n = 0;
  if (n != t.values.size()) throw FormatError("checkpoint: dims/value count mismatch");
  for (double v : t.values) write_f32le(out, static_cast<float>(v));
}

CheckpointTensor read_tensor(std::istream& in) {
  CheckpointTensor t;
  const std::uint16_t name_len = read_u16le(in);
  t.name.resize(name_len);
  in.read(t.name.data(), name_len);
  const int flags = in.get();
  const int ndim = in.get();
  if (!in || flags < 0 || ndim < 0) throw FormatError("checkpoint: truncated tensor header");
  t.frozen = (flags & 1) != 0;
  t.buffer = (flags & 2) != 0;
  std::size_t n = 1;
  for (int i = 0; i < ndim; ++i) {
    const std::uint32_t d = read_u32le(in);
    t.dims.push_back(d);
    n *= d;
  }
  if (ndim == 0) n = 0;
  t.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.values.push_back(read_f32le(in));
  if (!in) throw FormatError("checkpoint: truncated tensor payload for '" + t.name + "'");
  return t;
}

}  // namespace

const CheckpointTensor* ModelCheckpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

ModelCheckpoint checkpoint_from_model(Model& m, std::uint32_t epoch,
                                      std::uint64_t config_hash) {
  ModelCheckpoint c;
  c.spec = m.spec;
  c.epoch = epoch;
  c.config_hash = config_hash;
  for (const auto& pr : m.params())
    c.tensors.push_back(capture(pr.name, pr.param->value, pr.param->frozen, false));
  for (const auto& br : m.buffers())
    c.tensors.push_back(capture(br.name, *br.tensor, false, true));
  return c;
}

Model model_from_checkpoint(const ModelCheckpoint& c) {
  Model m = build_model(c.spec);
  std::size_t restored = 0;
  auto restore = [&](const std::string& name, Tensor& dst, bool* frozen) {
    const CheckpointTensor* src = c.find(name);
    if (!src) throw FormatError("checkpoint: missing tensor '" + name + "'");
    if (src->dims != dst.dims) {
      Tensor want;
      want.dims = src->dims;
      throw FormatError("checkpoint: tensor '" + name + "' has shape " + want.shape_str() +
                        ", model wants " + dst.shape_str());
    }
    if (src->values.size() != dst.data.size())
      throw FormatError("checkpoint: tensor '" + name + "' value count does not match its shape");
    dst.data.assign(src->values.begin(), src->values.end());
    if (frozen) *frozen = src->frozen;
    ++restored;
  };
  for (const auto& pr : m.params()) restore(pr.name, pr.param->value, &pr.param->frozen);
  for (const auto& br : m.buffers()) restore(br.name, *br.tensor, nullptr);
  if (restored != c.tensors.size())
    throw FormatError("checkpoint: " + std::to_string(c.tensors.size() - restored) +
                      " stored tensor(s) not present in the model");
  return m;
}

std::vector<std::uint8_t> save_checkpoint(const ModelCheckpoint& c) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  write_u32le(out, kSercVersion);

  const std::string spec_json = nlohmann::json(c.spec).dump();

  CheckpointTensor meta;
  meta.name = kMetaName;
  meta.dims = {5};
  meta.values = {static_cast<double>(c.epoch),
                 static_cast<double>(c.config_hash & 0xffff),
                 static_cast<double>((c.config_hash >> 16) & 0xffff),
                 static_cast<double>((c.config_hash >> 32) & 0xffff),
                 static_cast<double>((c.config_hash >> 48) & 0xffff)};

  CheckpointTensor spec_t;
  spec_t.name = kSpecName;
  spec_t.dims = {spec_json.size()};
  for (unsigned char b : spec_json) spec_t.values.push_back(static_cast<double>(b));

  write_u32le(out, static_cast<std::uint32_t>(c.tensors.size() + 2));
  write_tensor(out, meta);
  write_tensor(out, spec_t);
  for (const auto& t : c.tensors) write_tensor(out, t);

  const std::string s = out.str();
  return {s.begin(), s.end()};
}

ModelCheckpoint load_checkpoint(const std::vector<std::uint8_t>& bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw FormatError("checkpoint: bad magic, not a SERC file");
  const std::uint32_t version = read_u32le(in);
  if (version != kSercVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = read_u32le(in);
  if (!in) throw FormatError("checkpoint: truncated header");

  ModelCheckpoint c;
  bool have_meta = false, have_spec = false;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t = read_tensor(in);
    if (t.name == kMetaName) {
      if (t.values.size() != 5) throw FormatError("checkpoint: malformed __meta__");
      c.epoch = static_cast<std::uint32_t>(t.values[0]);
      c.config_hash = static_cast<std::uint64_t>(t.values[1]) |
                      (static_cast<std::uint64_t>(t.values[2]) << 16) |
                      (static_cast<std::uint64_t>(t.values[3]) << 32) |
                      (static_cast<std::uint64_t>(t.values[4]) << 48);
      have_meta = true;
    } else if (t.name == kSpecName) {
      std::string json_text;
      for (double v : t.values) {
        if (v < 0 || v > 255 || v != std::floor(v))
          throw FormatError("checkpoint: malformed __spec__");
        json_text.push_back(static_cast<char>(static_cast<unsigned char>(v)));
      }
      try {
        c.spec = nlohmann::json::parse(json_text).get<ModelSpec>();
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad architecture json: ") + e.what());
      }
      have_spec = true;
    } else {
      c.tensors.push_back(std::move(t));
    }
  }
  if (!have_meta || !have_spec)
    throw FormatError("checkpoint: missing reserved __meta__/__spec__ tensors");
  return c;
}

void save_checkpoint_file(const ModelCheckpoint& c, const std::string& path) {
  const auto bytes = save_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("checkpoint: write failed for '" + path + "'");
}

ModelCheckpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

void freeze(ModelCheckpoint& c, const std::string& prefix) {
  std::size_t n = 0;
  for (auto& t : c.tensors)
    if (!t.buffer && t.name.rfind(prefix, 0) == 0) {
      t.frozen = true;
      ++n;
    }
  if (n == 0)
    throw std::invalid_argument("freeze: no tensor matches prefix '" + prefix + "'");
}

ModelCheckpoint replace_head(const ModelCheckpoint& c, std::size_t n_classes,
                             std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("replace_head: need at least 2 classes");
  ModelCheckpoint out = c;

  LayerSpec* head = nullptr;
  for (auto& l : out.spec.layers)
    if (l.name == "head") head = &l;
  if (!head || head->kind != "dense")
    throw std::invalid_argument("replace_head: model has no dense head");
  head->out = n_classes;

  CheckpointTensor* w = nullptr;
  CheckpointTensor* b = nullptr;
  for (auto& t : out.tensors) {
    if (t.name == "head.W") w = &t;
    if (t.name == "head.b") b = &t;
  }
  if (!w || !b) throw FormatError("replace_head: checkpoint lacks head.W/head.b");

  const std::size_t in_dim = head->in;
  Rng rng(derive_seed(seed, "head"));
  const double sd = std::sqrt(2.0 / static_cast<double>(in_dim));
  w->dims = {in_dim, n_classes};
  w->values.assign(in_dim * n_classes, 0.0);
  for (double& v : w->values) v = f32_round(sd * rng.normal());
  w->frozen = false;
  b->dims = {n_classes};
  b->values.assign(n_classes, 0.0);
  b->frozen = false;
  return out;
}

}  // namespace ser::nn
