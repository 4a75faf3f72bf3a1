#include "pmotion/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

namespace pmotion {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'M', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct Header {
  json j;
  std::streamoff payload_offset = 0;
};

Header read_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checkpoint: cannot open " + path);
  char magic[4];
  uint32_t version = 0;
  uint64_t len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  require(in.good() && std::memcmp(magic, kMagic, 4) == 0,
          "checkpoint: bad magic in " + path);
  require(version == kVersion, "checkpoint: unsupported version " +
                                   std::to_string(version) + " in " + path);
  std::string text(len, '\0');
  in.read(text.data(), std::streamsize(len));
  require(in.good(), "checkpoint: truncated header in " + path);
  Header h;
  h.payload_offset =
      std::streamoff(4 + sizeof(uint32_t) + sizeof(uint64_t) + len);
  try {
    h.j = json::parse(text);
  } catch (const std::exception& e) {
    fail("checkpoint: invalid header JSON in " + path + ": " + e.what());
  }
  return h;
}

CheckpointMeta meta_from(const json& h) {
  CheckpointMeta m;
  m.phase = h.value("phase", "");
  m.mode = h.value("mode", "");
  m.step = h.value("step", int64_t(0));
  m.config_digest = h.value("config_digest", "");
  m.value_digest = h.value("value_digest", "");
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const nn::ParamStore<float>& ps,
                     const CheckpointMeta& meta) {
  json h;
  h["phase"] = meta.phase;
  h["mode"] = meta.mode;
  h["step"] = meta.step;
  h["config_digest"] = meta.config_digest;
  h["value_digest"] = ps.value_digest();
  json params = json::array();
  for (const auto& e : ps.entries())
    params.push_back({{"name", e.name},
                      {"rows", e.t.rows()},
                      {"cols", e.t.cols()},
                      {"frozen", e.frozen}});
  h["params"] = std::move(params);

  std::string text = h.dump();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "checkpoint: cannot write " + path);
  uint64_t len = text.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), std::streamsize(text.size()));
  for (const auto& e : ps.entries())
    out.write(reinterpret_cast<const char*>(e.t.value().data()),
              std::streamsize(sizeof(float) * size_t(e.t.value().size())));
  require(out.good(), "checkpoint: short write to " + path);
}

CheckpointMeta load_checkpoint(const std::string& path,
                               nn::ParamStore<float>& ps) {
  Header hdr = read_header(path);
  const json& h = hdr.j;
  const json& params = h.at("params");

  // Diff the stored entry set against the store before touching values.
  std::string missing, extra, shapes;
  size_t matched = 0;
  for (const auto& p : params) {
    const std::string name = p.at("name").get<std::string>();
    auto* e = ps.find(name);
    if (!e) {
      extra += (extra.empty() ? "" : ", ") + name;
      continue;
    }
    if (e->t.rows() != p.at("rows").get<Eigen::Index>() ||
        e->t.cols() != p.at("cols").get<Eigen::Index>()) {
      shapes += (shapes.empty() ? "" : ", ") + name;
      continue;
    }
    ++matched;
  }
  if (matched != ps.entries().size()) {
    for (const auto& e : ps.entries()) {
      bool found = false;
      for (const auto& p : params)
        if (p.at("name").get<std::string>() == e.name) {
          found = true;
          break;
        }
      if (!found) missing += (missing.empty() ? "" : ", ") + e.name;
    }
  }
  if (!missing.empty() || !extra.empty() || !shapes.empty()) {
    std::string msg = "checkpoint: store mismatch for " + path;
    if (!missing.empty()) msg += "; absent from file: " + missing;
    if (!extra.empty()) msg += "; unknown in store: " + extra;
    if (!shapes.empty()) msg += "; shape mismatch: " + shapes;
    fail(msg);
  }

  std::ifstream in(path, std::ios::binary);
  in.seekg(hdr.payload_offset);
  for (const auto& p : params) {
    auto* e = ps.find(p.at("name").get<std::string>());
    Mat<float>& v = e->t.value_mut();
    in.read(reinterpret_cast<char*>(v.data()),
            std::streamsize(sizeof(float) * size_t(v.size())));
  }
  require(in.good(), "checkpoint: truncated payload in " + path);

  CheckpointMeta meta = meta_from(h);
  require(ps.value_digest() == meta.value_digest,
          "checkpoint: payload digest mismatch in " + path);
  return meta;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  return meta_from(read_header(path).j);
}

}  // namespace pmotion
