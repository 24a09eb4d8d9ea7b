#include "space3/model/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace space3::model {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'P', 'A', 'C', 'E', '3', 'C', 'K'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  return v;
}

void index_group(nlohmann::json& index, const char* group, const ad::ParameterStore& ps) {
  for (const auto& p : ps) {
    index.push_back({{"group", group},
                     {"name", p->name},
                     {"rows", p->value.rows()},
                     {"cols", p->value.cols()}});
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["model"] = to_json(ckpt.config);
  header["vocab"] = ckpt.vocab.tokens();
  header["step"] = ckpt.step;
  header["meta"] = ckpt.meta;
  nlohmann::json index = nlohmann::json::array();
  index_group(index, "params", ckpt.params);
  index_group(index, "optimizer", ckpt.optimizer_state);
  header["tensors"] = index;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  os.write(kMagic.data(), kMagic.size());
  write_raw(os, kCheckpointVersion);
  write_raw(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const ad::ParameterStore* ps : {&ckpt.params, &ckpt.optimizer_state}) {
    for (const auto& p : *ps) {
      os.write(reinterpret_cast<const char*>(p->value.data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("checkpoint: " + path.string() + " is not a checkpoint");
  }
  const auto version = read_raw<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto header_size = read_raw<std::uint64_t>(is);
  std::string text(header_size, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(header_size))) {
    throw std::runtime_error("checkpoint: truncated header");
  }
  const nlohmann::json header = nlohmann::json::parse(text);

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.at("model"));
  ckpt.vocab = corpus::Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  ckpt.step = header.at("step").get<std::int64_t>();
  ckpt.meta = header.at("meta");
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    ad::Matrix m(rows, cols);
    if (!is.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())))) {
      throw std::runtime_error("checkpoint: truncated tensor data");
    }
    const std::string group = t.at("group").get<std::string>();
    ad::ParameterStore& target = group == "params" ? ckpt.params : ckpt.optimizer_state;
    target.add(t.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

}  // namespace space3::model
