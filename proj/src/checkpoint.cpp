#include "sparsekit/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sparsekit/algorithms.hpp"

namespace sparsekit {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

constexpr const char* kFormat = "sparsekit-checkpoint";

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  json tensor(const Tensor& t) {
    const std::string file = next_file();
    write(file, reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(double));
    return json{{"file", file}, {"shape", t.shape()}, {"dtype", "float64"}};
  }

  json tree(const ParamTree& tree) {
    json out = json::object();
    for (const auto& [path, t] : tree) out[path] = tensor(t);
    return out;
  }

  json mask(const Mask& m) {
    const std::string file = next_file();
    const auto bytes = m.storage();
    write(file, reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const bool packed = m.encoding() == MaskEncoding::kPacked;
    return json{{"file", file},
                {"shape", m.shape()},
                {"dtype", packed ? "bits" : "uint8"},
                {"encoding", packed ? "packed" : "bytes"},
                {"count", m.size()}};
  }

  json state(const OptState& s) {
    json out;
    out["step"] = s.step;
    out["slots"] = json::object();
    for (const auto& [name, t] : s.slots) out["slots"][name] = tree(t);
    out["nested"] = json::array();
    for (const auto& child : s.nested) out["nested"].push_back(state(child));
    out["sparsity"] = nullptr;
    if (s.extension) {
      const auto* ss = dynamic_cast<const SparsityState*>(s.extension.get());
      if (ss == nullptr) throw CheckpointError("cannot serialize an unknown optimizer state extension");
      json sp;
      sp["targets"] = ss->targets;
      sp["masks"] = json::object();
      for (const auto& [path, m] : ss->masks) sp["masks"][path] = mask(m);
      sp["algo_slots"] = json::object();
      for (const auto& [name, t] : ss->algo_slots) sp["algo_slots"][name] = tree(t);
      out["sparsity"] = std::move(sp);
    }
    return out;
  }

 private:
  std::string next_file() {
    std::ostringstream os;
    os << 't' << std::setw(5) << std::setfill('0') << counter_++ << ".bin";
    return os.str();
  }

  void write(const std::string& file, const char* data, std::size_t size) {
    std::ofstream out(dir_ / file, std::ios::binary);
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw CheckpointError("failed writing " + (dir_ / file).string());
  }

  fs::path dir_;
  int counter_ = 0;
};

class Reader {
 public:
  explicit Reader(fs::path dir) : dir_(std::move(dir)) {}

  Tensor tensor(const json& j) {
    const Shape shape = j.at("shape").get<Shape>();
    if (j.at("dtype").get<std::string>() != "float64") throw CheckpointError("unsupported tensor dtype");
    std::vector<double> data(num_elements(shape));
    read(j.at("file").get<std::string>(), reinterpret_cast<char*>(data.data()), data.size() * sizeof(double));
    return Tensor(shape, std::move(data));
  }

  ParamTree tree(const json& j) {
    ParamTree out;
    for (const auto& [path, entry] : j.items()) out.set(path, tensor(entry));
    return out;
  }

  Mask mask(const json& j) {
    const Shape shape = j.at("shape").get<Shape>();
    const auto count = j.at("count").get<std::size_t>();
    if (count != num_elements(shape)) throw CheckpointError("mask count does not match its shape");
    const std::string encoding = j.at("encoding").get<std::string>();
    const std::string file = j.at("file").get<std::string>();
    if (encoding == "packed") {
      PackedBits bits{std::vector<std::uint8_t>((count + 7) / 8), count};
      read(file, reinterpret_cast<char*>(bits.bytes.data()), bits.bytes.size());
      return Mask(shape, std::move(bits));
    }
    if (encoding != "bytes") throw CheckpointError("unknown mask encoding '" + encoding + "'");
    std::vector<std::uint8_t> bytes(count);
    read(file, reinterpret_cast<char*>(bytes.data()), bytes.size());
    return Mask(shape, std::move(bytes));
  }

  OptState state(const json& j) {
    OptState out;
    out.step = j.at("step").get<std::int64_t>();
    for (const auto& [name, t] : j.at("slots").items()) out.slots[name] = tree(t);
    for (const auto& child : j.at("nested")) out.nested.push_back(state(child));
    const json& sp = j.at("sparsity");
    if (!sp.is_null()) {
      auto ss = std::make_shared<SparsityState>();
      ss->targets = sp.at("targets").get<SparsityMap>();
      for (const auto& [path, m] : sp.at("masks").items()) ss->masks.emplace(path, mask(m));
      for (const auto& [name, t] : sp.at("algo_slots").items()) ss->algo_slots[name] = tree(t);
      out.extension = std::move(ss);
    }
    return out;
  }

 private:
  void read(const std::string& file, char* data, std::size_t size) {
    if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
      throw CheckpointError("invalid tensor file name '" + file + "'");
    }
    const fs::path path = dir_ / file;
    std::error_code ec;
    const auto actual = fs::file_size(path, ec);
    if (ec) throw CheckpointError("missing tensor file " + path.string());
    if (actual != size) {
      throw CheckpointError("tensor file " + path.string() + " holds " + std::to_string(actual) + " bytes, expected " +
                            std::to_string(size));
    }
    std::ifstream in(path, std::ios::binary);
    in.read(data, static_cast<std::streamsize>(size));
    if (!in) throw CheckpointError("failed reading " + path.string());
  }

  fs::path dir_;
};

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& checkpoint) {
  fs::path target = dir;
  if (target.filename().empty()) target = target.parent_path();
  const fs::path staging = target.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging);

  Writer writer(staging);
  json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kCheckpointVersion;
  manifest["step"] = checkpoint.step;
  manifest["config_hash"] = checkpoint.config_hash;
  manifest["params"] = writer.tree(checkpoint.params);
  manifest["state"] = writer.state(checkpoint.state);
  manifest["metadata"] = checkpoint.metadata;
  {
    std::ofstream out(staging / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw CheckpointError("failed writing manifest in " + staging.string());
  }
  fs::remove_all(target, ec);
  fs::rename(staging, target);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw CheckpointError("cannot open " + manifest_path.string());
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format").get<std::string>() != kFormat) throw CheckpointError("not a sparsekit checkpoint");
    const int version = manifest.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    Reader reader(dir);
    Checkpoint out;
    out.step = manifest.at("step").get<std::int64_t>();
    out.config_hash = manifest.at("config_hash").get<std::string>();
    out.params = reader.tree(manifest.at("params"));
    out.state = reader.state(manifest.at("state"));
    out.metadata = manifest.value("metadata", json::object());
    return out;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError("corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
}

void save_state(const fs::path& dir, const OptState& state) {
  Checkpoint c;
  c.state = state;
  c.step = state.step;
  save_checkpoint(dir, c);
}

OptState load_state(const fs::path& dir) { return load_checkpoint(dir).state; }

}  // namespace sparsekit
