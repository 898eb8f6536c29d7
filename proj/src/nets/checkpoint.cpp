#include "msm/nets/checkpoint.hpp"

#include "msm/errors.hpp"

#include <fstream>
#include <sstream>

namespace msm {

void Checkpoint::add(const ad::ParamSet<float>& params) {
  for (const auto& p : params) {
    if (tensors.count(p.name) != 0) throw InvalidInput("checkpoint: duplicate tensor " + p.name);
    tensors[p.name] = p.value;
    order.push_back(p.name);
  }
}

void Checkpoint::restore(ad::ParamSet<float>& params) const {
  for (auto& p : params) {
    auto it = tensors.find(p.name);
    if (it == tensors.end()) throw DecodeError("checkpoint: missing tensor " + p.name);
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
      throw DecodeError("checkpoint: shape mismatch for " + p.name);
    p.value = it->second;
    p.grad.setZero();
  }
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = kCheckpointFormat;
  header["kind"] = ckpt.kind;
  header["config"] = ckpt.config;
  header["meta"] = ckpt.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& name : ckpt.order) {
    const auto& t = ckpt.tensors.at(name);
    header["tensors"].push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  }
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kCheckpointFormat << '\n' << text.size() << '\n' << text;
  for (const auto& name : ckpt.order) {
    const auto& t = ckpt.tensors.at(name);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint not found: " + path.string());
  std::string magic, len_line;
  std::getline(in, magic);
  std::getline(in, len_line);
  if (magic != kCheckpointFormat) throw DecodeError("checkpoint: unsupported format tag '" + magic + "'");
  std::size_t len = 0;
  try {
    len = std::stoul(len_line);
  } catch (const std::exception&) {
    throw DecodeError("checkpoint: bad header length");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DecodeError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.kind = header.value("kind", "");
  ckpt.config = header.value("config", nlohmann::json::object());
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name");
    const long rows = t.at("rows"), cols = t.at("cols");
    ad::Matrix<float> m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw DecodeError("checkpoint: truncated tensor " + name);
    ckpt.tensors[name] = std::move(m);
    ckpt.order.push_back(name);
  }
  return ckpt;
}

}  // namespace msm
