#include "relscene/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "relscene/errors.hpp"
#include "relscene/hash.hpp"

namespace relscene {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

namespace {

// ---- little-endian primitives -------------------------------------------

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  bool has(std::size_t n) const { return remaining() >= n; }

  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes_[pos_++]); }
  std::uint16_t u16() {
    std::uint16_t v = u8();
    v |= static_cast<std::uint16_t>(u8()) << 8;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(source_ + ": " + what);
  }
  void need(std::size_t n, const std::string& what) const {
    if (!has(n)) {
      fail(what + ": truncated (need " + std::to_string(n) + " bytes, " +
           std::to_string(remaining()) + " left)");
    }
  }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

// ---- JSON field access ----------------------------------------------------

struct RecordContext {
  std::string source;
  std::string record;

  [[noreturn]] void fail(std::string_view field, const std::string& msg) const {
    throw FormatError(source + ": " + record + ": field '" + std::string(field) + "': " + msg);
  }

  const json& at(const json& j, const char* field) const {
    if (!j.is_object()) throw FormatError(source + ": " + record + ": not a JSON object");
    const auto it = j.find(field);
    if (it == j.end()) fail(field, "missing");
    return *it;
  }

  template <typename T>
  T get(const json& j, const char* field) const {
    const json& v = at(j, field);
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(field, "expected a string");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(field, "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(field, "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(field, "expected a number");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(field, e.what());
    }
  }

  template <typename T>
  std::optional<T> get_optional(const json& j, const char* field) const {
    if (!j.is_object() || !j.contains(field) || j.at(field).is_null()) return std::nullopt;
    return get<T>(j, field);
  }
};

json extra_fields(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (const auto& [k, v] : j.items()) {
    bool is_known = false;
    for (const char* name : known) is_known = is_known || k == name;
    if (!is_known) extra[k] = v;
  }
  return extra;
}

template <typename F>
void for_each_jsonl(std::string_view text, const std::string& source, F&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const RecordContext ctx{source, "record " + std::to_string(line_no)};
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(ctx.source + ": " + ctx.record + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError(ctx.source + ": " + ctx.record + ": not a JSON object");
    fn(j, ctx);
  }
}

Aabb box_from_json(const json& j, const RecordContext& ctx, const char* field) {
  if (!j.is_array() || j.size() != 6) ctx.fail(field, "box must be [xmin,ymin,zmin,xmax,ymax,zmax]");
  double v[6];
  for (int i = 0; i < 6; ++i) {
    if (!j[i].is_number()) ctx.fail(field, "box entries must be numbers");
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i])) ctx.fail(field, "non-finite box coordinate");
  }
  Aabb box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
  if (!box.valid()) ctx.fail(field, "box min exceeds max");
  return box;
}

std::vector<Aabb> boxes_from_json(const json& j, const RecordContext& ctx, const char* field) {
  const json& arr = ctx.at(j, field);
  if (!arr.is_array()) ctx.fail(field, "expected an array of boxes");
  std::vector<Aabb> out;
  for (const auto& b : arr) out.push_back(box_from_json(b, ctx, field));
  return out;
}

std::vector<std::string> strings_from_json(const json& j, const RecordContext& ctx, const char* field) {
  const json& arr = ctx.at(j, field);
  if (!arr.is_array()) ctx.fail(field, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& s : arr) {
    if (!s.is_string()) ctx.fail(field, "expected an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension();
  p += ".points.bin";
  return p;
}

}  // namespace

// ---- embedding interchange ----------------------------------------------

std::string encode_embedding_file(const EmbeddingFile& file) {
  std::string out;
  out.append(kEmbeddingMagic, 4);
  put_u16(out, kEmbeddingVersion);
  out.push_back(static_cast<char>(file.kind));
  put_u32(out, file.dim);
  put_u32(out, static_cast<std::uint32_t>(file.records.size()));
  if (file.kind == EmbeddingKind::HeadWeights) {
    put_u32(out, static_cast<std::uint32_t>(file.head_layout.size()));
    for (auto v : file.head_layout) put_u32(out, v);
  }
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const auto& r = file.records[i];
    if (r.values.size() != file.dim) {
      throw DomainError("embedding record " + std::to_string(i) + " has " +
                        std::to_string(r.values.size()) + " values, header dim is " +
                        std::to_string(file.dim));
    }
    put_u32(out, r.object_index);
    for (float f : r.values) put_f32(out, f);
  }
  return out;
}

EmbeddingFile decode_embedding_file(std::string_view bytes, const std::string& source) {
  ByteReader rd(bytes, source);
  rd.need(15, "header");
  char magic[4];
  for (char& c : magic) c = static_cast<char>(rd.u8());
  if (std::string_view(magic, 4) != std::string_view(kEmbeddingMagic, 4)) {
    rd.fail("header field magic: expected \"D3DE\"");
  }
  const auto version = rd.u16();
  if (version != kEmbeddingVersion) {
    rd.fail("header field version: unsupported version " + std::to_string(version));
  }
  const auto kind = rd.u8();
  if (kind > 3) rd.fail("header field kind: unknown kind " + std::to_string(kind));
  EmbeddingFile file;
  file.kind = static_cast<EmbeddingKind>(kind);
  file.dim = rd.u32();
  if (file.dim == 0) rd.fail("header field dim: must be positive");
  const auto count = rd.u32();
  if (file.kind == EmbeddingKind::HeadWeights) {
    rd.need(4, "head layout field length");
    const auto n = rd.u32();
    rd.need(static_cast<std::size_t>(n) * 4, "head layout field dims");
    for (std::uint32_t i = 0; i < n; ++i) file.head_layout.push_back(rd.u32());
  }
  const std::size_t record_bytes = 4 + static_cast<std::size_t>(file.dim) * 4;
  std::set<std::uint32_t> seen;
  file.records.reserve(std::min<std::size_t>(count, rd.remaining() / record_bytes + 1));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string rec = "record " + std::to_string(i);
    rd.need(4, rec + " field object_index");
    EmbeddingEntry e;
    e.object_index = rd.u32();
    if (!rd.has(static_cast<std::size_t>(file.dim) * 4)) {
      rd.fail(rec + " field values: truncated (expected " + std::to_string(file.dim) +
              " floats, got " + std::to_string(rd.remaining() / 4) + ")");
    }
    e.values.resize(file.dim);
    for (std::uint32_t k = 0; k < file.dim; ++k) {
      e.values[k] = rd.f32();
      if (!std::isfinite(e.values[k])) {
        rd.fail(rec + " (object " + std::to_string(e.object_index) + ") field values[" +
                std::to_string(k) + "]: non-finite value");
      }
    }
    if (!seen.insert(e.object_index).second) {
      rd.fail(rec + " field object_index: duplicate index " + std::to_string(e.object_index));
    }
    file.records.push_back(std::move(e));
  }
  if (rd.remaining() != 0) {
    rd.fail("payload: " + std::to_string(rd.remaining()) +
            " trailing bytes after the declared record count");
  }
  return file;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file) {
  write_file(path, encode_embedding_file(file));
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  return decode_embedding_file(read_file(path), path.string());
}

EmbeddingFile make_embedding_file(EmbeddingKind kind, int dim,
                                  std::span<const EmbeddingRecord> records) {
  if (dim <= 0) throw DomainError("make_embedding_file: dim must be positive");
  EmbeddingFile file;
  file.kind = kind;
  file.dim = static_cast<std::uint32_t>(dim);
  for (const auto& r : records) {
    if (r.kind != kind) throw DomainError("make_embedding_file: mixed embedding kinds");
    if (r.object_index < 0) throw DomainError("make_embedding_file: negative object index");
    file.records.push_back({static_cast<std::uint32_t>(r.object_index), r.vector});
  }
  return file;
}

std::vector<EmbeddingRecord> embedding_records(const EmbeddingFile& file) {
  std::vector<EmbeddingRecord> out;
  for (const auto& r : file.records) {
    out.push_back({static_cast<int>(r.object_index), file.kind, r.values});
  }
  return out;
}

EmbeddingFile head_to_embedding_file(const ProjectionHead& head) {
  EmbeddingFile file;
  file.kind = EmbeddingKind::HeadWeights;
  file.head_layout.push_back(static_cast<std::uint32_t>(head.depth()));
  file.head_layout.push_back(static_cast<std::uint32_t>(head.in_dim()));
  EmbeddingEntry entry;
  for (const auto& layer : head.layers()) {
    file.head_layout.push_back(static_cast<std::uint32_t>(layer.weight.rows()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        entry.values.push_back(static_cast<float>(layer.weight(r, c)));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      entry.values.push_back(static_cast<float>(layer.bias[r]));
    }
  }
  file.dim = static_cast<std::uint32_t>(entry.values.size());
  file.records.push_back(std::move(entry));
  return file;
}

ProjectionHead head_from_embedding_file(const EmbeddingFile& file, const std::string& source) {
  if (file.kind != EmbeddingKind::HeadWeights) {
    throw FormatError(source + ": header field kind: not a head-weights file");
  }
  const auto& layout = file.head_layout;
  if (layout.size() < 3 || layout[0] + 2 != layout.size()) {
    throw FormatError(source + ": head layout field dims: inconsistent with declared depth");
  }
  std::size_t expected = 0;
  for (std::size_t l = 1; l + 1 < layout.size(); ++l) {
    expected += static_cast<std::size_t>(layout[l]) * layout[l + 1] + layout[l + 1];
  }
  if (expected != file.dim || file.records.size() != 1) {
    throw FormatError(source + ": header field dim: head layout needs " + std::to_string(expected) +
                      " parameters in one record");
  }
  const auto& values = file.records[0].values;
  std::size_t pos = 0;
  std::vector<DenseLayer> layers;
  for (std::size_t l = 1; l + 1 < layout.size(); ++l) {
    const Eigen::Index in = layout[l], out = layout[l + 1];
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = values[pos++];
    }
    for (Eigen::Index r = 0; r < out; ++r) layer.bias[r] = values[pos++];
    layers.push_back(std::move(layer));
  }
  return ProjectionHead(std::move(layers));
}

// ---- scenes --------------------------------------------------------------

json view_to_json(const CameraView& v) {
  json j = {{"view_id", v.view_id}, {"fx", v.fx}, {"fy", v.fy}, {"cx", v.cx}, {"cy", v.cy},
            {"width", v.width},     {"height", v.height}};
  j["world_to_camera"] = json(std::vector<double>(v.world_to_camera.begin(), v.world_to_camera.end()));
  if (v.image_ref) j["image_ref"] = *v.image_ref;
  return j;
}

CameraView view_from_json(const json& j, const std::string& source, const std::string& record) {
  const RecordContext ctx{source, record};
  CameraView v;
  v.view_id = ctx.get<std::string>(j, "view_id");
  v.fx = ctx.get<double>(j, "fx");
  v.fy = ctx.get<double>(j, "fy");
  v.cx = ctx.get<double>(j, "cx");
  v.cy = ctx.get<double>(j, "cy");
  v.width = ctx.get<int>(j, "width");
  v.height = ctx.get<int>(j, "height");
  const json& pose = ctx.at(j, "world_to_camera");
  if (!pose.is_array() || pose.size() != 16) ctx.fail("world_to_camera", "expected 16 numbers (row-major 4x4)");
  for (int i = 0; i < 16; ++i) {
    if (!pose[i].is_number()) ctx.fail("world_to_camera", "expected numbers");
    v.world_to_camera[i] = pose[i].get<double>();
  }
  v.image_ref = ctx.get_optional<std::string>(j, "image_ref");
  try {
    validate_view(v);
  } catch (const DomainError& e) {
    throw FormatError(ctx.source + ": " + ctx.record + ": " + e.what());
  }
  return v;
}

void write_scene(const Scene& scene, const std::filesystem::path& manifest_path) {
  std::string blob;
  json objects = json::array();
  for (const auto& o : scene.objects) {
    put_u32(blob, static_cast<std::uint32_t>(o.points().size()));
    for (const Point& p : o.points()) {
      for (float f : {p.x, p.y, p.z, p.r, p.g, p.b}) put_f32(blob, f);
    }
    json jo = {{"index", o.index()}, {"identifier", o.identifier()},
               {"point_count", o.points().size()}};
    jo["label"] = o.label() ? json(*o.label()) : json(nullptr);
    objects.push_back(std::move(jo));
  }
  json views = json::array();
  for (const auto& v : scene.views) views.push_back(view_to_json(v));
  const auto blob_path = blob_path_for(manifest_path);
  json manifest = {{"format", "relscene-scene"},
                   {"version", 1},
                   {"scene_id", scene.scene_id},
                   {"points_file", blob_path.filename().string()},
                   {"points_fnv1a64", hex64(fnv1a64(blob))},
                   {"objects", objects},
                   {"views", views}};
  write_file(blob_path, blob);
  write_file(manifest_path, manifest.dump(2) + "\n");
}

Scene read_scene(const std::filesystem::path& manifest_path, std::size_t proposal_cap) {
  const std::string src = manifest_path.string();
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw FormatError(src + ": invalid JSON: " + e.what());
  }
  const RecordContext top{src, "manifest"};
  if (top.get<std::string>(m, "format") != "relscene-scene") top.fail("format", "not a scene manifest");
  if (top.get<int>(m, "version") != 1) top.fail("version", "unsupported version");

  Scene scene;
  scene.scene_id = top.get<std::string>(m, "scene_id");
  const auto blob_name = top.get<std::string>(m, "points_file");
  const auto blob_path = manifest_path.parent_path() / blob_name;
  const std::string blob = read_file(blob_path);
  const auto checksum = top.get<std::string>(m, "points_fnv1a64");
  if (checksum != hex64(fnv1a64(blob))) {
    throw FormatError(blob_path.string() + ": checksum mismatch (manifest " + checksum +
                      ", file " + hex64(fnv1a64(blob)) + ")");
  }

  const json& objs = top.at(m, "objects");
  if (!objs.is_array()) top.fail("objects", "expected an array");
  if (objs.size() > proposal_cap) {
    top.fail("objects", std::to_string(objs.size()) + " objects exceed the proposal cap of " +
                            std::to_string(proposal_cap));
  }
  ByteReader rd(blob, blob_path.string());
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const RecordContext ctx{src, "object " + std::to_string(i)};
    const json& jo = objs[i];
    const int index = ctx.get<int>(jo, "index");
    if (index < 0 || index > kMaxObjectIndex) ctx.fail("index", "outside [0, 999]");
    if (ctx.get<std::string>(jo, "identifier") != make_identifier(index)) {
      ctx.fail("identifier", "does not match index " + std::to_string(index));
    }
    const auto declared = ctx.get<std::uint32_t>(jo, "point_count");
    const std::string rec = "object " + std::to_string(i);
    rd.need(4, rec + " field point_count");
    const auto count = rd.u32();
    if (count != declared) {
      rd.fail(rec + " field point_count: blob has " + std::to_string(count) + ", manifest " +
              std::to_string(declared));
    }
    rd.need(static_cast<std::size_t>(count) * 24, rec + " field points");
    std::vector<Point> pts(count);
    for (auto& p : pts) {
      p.x = rd.f32();
      p.y = rd.f32();
      p.z = rd.f32();
      p.r = rd.f32();
      p.g = rd.f32();
      p.b = rd.f32();
    }
    try {
      scene.objects.emplace_back(index, std::move(pts), ctx.get_optional<std::string>(jo, "label"));
    } catch (const DomainError& e) {
      throw FormatError(src + ": " + rec + ": " + e.what());
    }
  }
  if (rd.remaining() != 0) rd.fail("trailing bytes after the last object");

  const json& views = top.at(m, "views");
  if (!views.is_array()) top.fail("views", "expected an array");
  for (std::size_t i = 0; i < views.size(); ++i) {
    scene.views.push_back(view_from_json(views[i], src, "view " + std::to_string(i)));
  }
  try {
    validate_scene(scene, proposal_cap);
  } catch (const DomainError& e) {
    throw FormatError(src + ": " + e.what());
  }
  return scene;
}

std::vector<CameraView> read_views(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
  const RecordContext ctx{path.string(), "document"};
  const json& arr = ctx.at(j, "views");
  if (!arr.is_array()) ctx.fail("views", "expected an array");
  std::vector<CameraView> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(view_from_json(arr[i], path.string(), "view " + std::to_string(i)));
  }
  return out;
}

void write_views(const std::filesystem::path& path, std::span<const CameraView> views) {
  json arr = json::array();
  for (const auto& v : views) arr.push_back(view_to_json(v));
  write_file(path, json{{"views", arr}}.dump(2) + "\n");
}

// ---- descriptions ----------------------------------------------------------

std::string descriptions_to_jsonl(const DescriptionMap& records) {
  std::string out;
  for (const auto& [idx, r] : records) {
    json j = r.extra.is_object() ? r.extra : json::object();
    j["object_index"] = r.object_index;
    j["identifier"] = make_identifier(r.object_index);
    j["text"] = r.text;
    j["source_view"] = r.source_view;
    j["status"] = std::string(to_string(r.status));
    json mentions = json::array();
    for (const auto& m : r.mentions) mentions.push_back({{"name", m.name}, {"object_index", m.object_index}});
    j["mentions"] = mentions;
    out += j.dump() + "\n";
  }
  return out;
}

DescriptionMap descriptions_from_jsonl(std::string_view text, const std::string& source) {
  DescriptionMap out;
  for_each_jsonl(text, source, [&](const json& j, const RecordContext& ctx) {
    DescriptionRecord r;
    r.object_index = ctx.get<int>(j, "object_index");
    if (r.object_index < 0 || r.object_index > kMaxObjectIndex) ctx.fail("object_index", "outside [0, 999]");
    if (const auto id = ctx.get_optional<std::string>(j, "identifier");
        id && *id != make_identifier(r.object_index)) {
      ctx.fail("identifier", "does not match object_index");
    }
    r.text = ctx.get<std::string>(j, "text");
    r.source_view = ctx.get<std::string>(j, "source_view");
    try {
      r.status = parse_description_status(ctx.get<std::string>(j, "status"));
    } catch (const DomainError& e) {
      ctx.fail("status", e.what());
    }
    if (r.status != DescriptionStatus::Missing && r.text.empty()) {
      ctx.fail("text", "empty text on a non-missing description");
    }
    if (j.contains("mentions")) {
      const json& ms = j["mentions"];
      if (!ms.is_array()) ctx.fail("mentions", "expected an array");
      for (const auto& m : ms) {
        r.mentions.push_back({ctx.get<std::string>(m, "name"), ctx.get<int>(m, "object_index")});
      }
    }
    r.extra = extra_fields(j, {"object_index", "identifier", "text", "source_view", "status", "mentions"});
    if (!out.emplace(r.object_index, std::move(r)).second) {
      ctx.fail("object_index", "duplicate description for this object");
    }
  });
  return out;
}

void write_descriptions(const std::filesystem::path& path, const DescriptionMap& records) {
  write_file(path, descriptions_to_jsonl(records));
}

DescriptionMap read_descriptions(const std::filesystem::path& path) {
  return descriptions_from_jsonl(read_file(path), path.string());
}

// ---- tasks / predictions -------------------------------------------------

json box_to_json(const Aabb& b) {
  return json::array({b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z});
}

std::string tasks_to_jsonl(std::span<const TaskInstance> tasks) {
  std::string out;
  for (const auto& t : tasks) {
    json j = t.extra.is_object() ? t.extra : json::object();
    j["id"] = t.id;
    j["kind"] = std::string(to_string(t.kind));
    j["query"] = t.query;
    json boxes = json::array();
    for (const auto& b : t.gt_boxes) boxes.push_back(box_to_json(b));
    j["gt_boxes"] = boxes;
    j["gt_texts"] = t.gt_texts;
    j["target_object"] = t.target_object ? json(*t.target_object) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<TaskInstance> tasks_from_jsonl(std::string_view text, const std::string& source) {
  std::vector<TaskInstance> out;
  std::set<std::string> ids;
  for_each_jsonl(text, source, [&](const json& j, const RecordContext& ctx) {
    TaskInstance t;
    t.id = ctx.get<std::string>(j, "id");
    if (!ids.insert(t.id).second) ctx.fail("id", "duplicate task id '" + t.id + "'");
    try {
      t.kind = parse_task_kind(ctx.get<std::string>(j, "kind"));
    } catch (const DomainError& e) {
      ctx.fail("kind", e.what());
    }
    t.query = ctx.get<std::string>(j, "query");
    t.gt_boxes = boxes_from_json(j, ctx, "gt_boxes");
    t.gt_texts = strings_from_json(j, ctx, "gt_texts");
    t.target_object = ctx.get_optional<int>(j, "target_object");
    t.extra = extra_fields(j, {"id", "kind", "query", "gt_boxes", "gt_texts", "target_object"});
    try {
      validate_task(t);
    } catch (const DomainError& e) {
      throw FormatError(ctx.source + ": " + ctx.record + ": " + e.what());
    }
    out.push_back(std::move(t));
  });
  return out;
}

void write_tasks(const std::filesystem::path& path, std::span<const TaskInstance> tasks) {
  write_file(path, tasks_to_jsonl(tasks));
}

std::vector<TaskInstance> read_tasks(const std::filesystem::path& path) {
  return tasks_from_jsonl(read_file(path), path.string());
}

std::string predictions_to_jsonl(std::span<const Prediction> predictions) {
  std::string out;
  for (const auto& p : predictions) {
    json j = p.extra.is_object() ? p.extra : json::object();
    j["id"] = p.id;
    json boxes = json::array();
    for (const auto& b : p.boxes) boxes.push_back(box_to_json(b));
    j["boxes"] = boxes;
    j["text"] = p.text ? json(*p.text) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Prediction> predictions_from_jsonl(std::string_view text, const std::string& source) {
  std::vector<Prediction> out;
  for_each_jsonl(text, source, [&](const json& j, const RecordContext& ctx) {
    Prediction p;
    p.id = ctx.get<std::string>(j, "id");
    p.boxes = boxes_from_json(j, ctx, "boxes");
    p.text = ctx.get_optional<std::string>(j, "text");
    p.extra = extra_fields(j, {"id", "boxes", "text"});
    out.push_back(std::move(p));
  });
  return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  write_file(path, predictions_to_jsonl(predictions));
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  return predictions_from_jsonl(read_file(path), path.string());
}

// ---- prompts -----------------------------------------------------------------

std::string prompts_to_jsonl(std::span<const PromptBundle> prompts) {
  std::string out;
  for (const auto& b : prompts) {
    json j = {{"task_id", b.task_id},
              {"task_kind", b.task_kind},
              {"system_text", b.system_text},
              {"scene_token_placeholder", b.scene_token_placeholder},
              {"referenced_objects", b.referenced_objects},
              {"injected_descriptions", b.injected_descriptions},
              {"user_text", b.user_text},
              {"full_text", b.full_text}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PromptBundle> prompts_from_jsonl(std::string_view text, const std::string& source) {
  std::vector<PromptBundle> out;
  for_each_jsonl(text, source, [&](const json& j, const RecordContext& ctx) {
    PromptBundle b;
    b.task_id = ctx.get<std::string>(j, "task_id");
    b.task_kind = ctx.get<std::string>(j, "task_kind");
    b.system_text = ctx.get<std::string>(j, "system_text");
    b.scene_token_placeholder = ctx.get<std::string>(j, "scene_token_placeholder");
    b.injected_descriptions = strings_from_json(j, ctx, "injected_descriptions");
    b.user_text = ctx.get<std::string>(j, "user_text");
    b.full_text = ctx.get<std::string>(j, "full_text");
    const json& refs = ctx.at(j, "referenced_objects");
    if (!refs.is_array()) ctx.fail("referenced_objects", "expected an array");
    for (const auto& r : refs) {
      if (!r.is_number_integer()) ctx.fail("referenced_objects", "expected integers");
      b.referenced_objects.push_back(r.get<int>());
    }
    out.push_back(std::move(b));
  });
  return out;
}

void write_prompts(const std::filesystem::path& path, std::span<const PromptBundle> prompts) {
  write_file(path, prompts_to_jsonl(prompts));
}

std::vector<PromptBundle> read_prompts(const std::filesystem::path& path) {
  return prompts_from_jsonl(read_file(path), path.string());
}

// ---- results, projections, tokens ------------------------------------------

std::string results_to_json(const EvaluationReport& report) {
  json scores = json::object();
  for (const auto& [task, metrics] : report.scores) {
    for (const auto& [name, value] : metrics) scores[task][name] = value;
  }
  json instances = json::array();
  for (const auto& inst : report.instances) {
    json m = json::object();
    for (const auto& [name, value] : inst.metrics) m[name] = value;
    instances.push_back({{"id", inst.id}, {"kind", std::string(to_string(inst.kind))}, {"metrics", m}});
  }
  return json{{"scores", scores}, {"instances", instances}}.dump(2) + "\n";
}

void write_results(const std::filesystem::path& path, const EvaluationReport& report) {
  write_file(path, results_to_json(report));
}

std::string projections_to_json(const Scene& scene, const ProjectionTable& projections,
                                 const KeyObjectPolicy& policy) {
  json views = json::array();
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    json objs = json::array();
    for (const auto& r : projections.at(v)) {
      json jo = {{"object_index", r.object_index},
                 {"visible_point_count", r.visible_point_count},
                 {"visible_fraction", r.visible_fraction}};
      jo["center_px"] = r.center_px ? json::array({r.center_px->u, r.center_px->v}) : json(nullptr);
      jo["bbox2d"] = r.bbox2d ? json::array({r.bbox2d->u_min, r.bbox2d->v_min, r.bbox2d->u_max,
                                             r.bbox2d->v_max})
                              : json(nullptr);
      jo["mean_depth"] = r.mean_depth ? json(*r.mean_depth) : json(nullptr);
      objs.push_back(std::move(jo));
    }
    views.push_back({{"view_id", scene.views[v].view_id},
                     {"key_objects", select_key_objects(scene.views[v], projections[v], policy)},
                     {"objects", objs}});
  }
  return json{{"scene_id", scene.scene_id}, {"views", views}}.dump(2) + "\n";
}

std::string tokens_to_json(const Scene& scene, const SceneTokens& tokens, bool embedding_fusion) {
  json seq = json::array();
  for (const auto& [id, block] : tokens.sequence) {
    json jb = {{"identifier", id}};
    for (int s = 0; s < ObjectTokenBlock::kSlots; ++s) {
      const auto& v = block.slot(s);
      jb[ObjectTokenBlock::kSlotNames[s]] = std::vector<double>(v.data(), v.data() + v.size());
    }
    seq.push_back(std::move(jb));
  }
  return json{{"scene_id", scene.scene_id},
              {"token_dim", tokens.matrix.cols()},
              {"embedding_fusion", embedding_fusion},
              {"sequence", seq}}
             .dump() + "\n";
}

}  // namespace relscene
