#include "stagehand/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "stagehand/json_codec.hpp"
#include "stagehand/png_io.hpp"

namespace stagehand {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary readers assume a little-endian host");

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<char> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------- PLY

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<PlyType> ply_type(std::string_view name) {
  static const std::map<std::string_view, PlyType> types = {
      {"char", PlyType::i8},    {"int8", PlyType::i8},     {"uchar", PlyType::u8},
      {"uint8", PlyType::u8},   {"short", PlyType::i16},   {"int16", PlyType::i16},
      {"ushort", PlyType::u16}, {"uint16", PlyType::u16},  {"int", PlyType::i32},
      {"int32", PlyType::i32},  {"uint", PlyType::u32},    {"uint32", PlyType::u32},
      {"float", PlyType::f32},  {"float32", PlyType::f32}, {"double", PlyType::f64},
      {"float64", PlyType::f64}};
  const auto it = types.find(name);
  return it == types.end() ? std::nullopt : std::optional(it->second);
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::i8: case PlyType::u8: return 1;
    case PlyType::i16: case PlyType::u16: return 2;
    case PlyType::i32: case PlyType::u32: case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double ply_value(PlyType t, const char* p) {
  switch (t) {
    case PlyType::i8: return load_le<std::int8_t>(p);
    case PlyType::u8: return load_le<std::uint8_t>(p);
    case PlyType::i16: return load_le<std::int16_t>(p);
    case PlyType::u16: return load_le<std::uint16_t>(p);
    case PlyType::i32: return load_le<std::int32_t>(p);
    case PlyType::u32: return load_le<std::uint32_t>(p);
    case PlyType::f32: return load_le<float>(p);
    case PlyType::f64: return load_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
  std::size_t offset;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  constexpr double kEps = 1e-7;
  p = std::clamp(p, kEps, 1.0 - kEps);
  return std::log(p / (1.0 - p));
}

}  // namespace

GaussianField parse_ply(std::span<const char> bytes) {
  const std::string_view data(bytes.data(), bytes.size());
  const std::size_t header_end = data.find("end_header\n");
  if (data.substr(0, 4) != "ply\n") throw ParseError("magic", "ply: missing 'ply' magic line");
  if (header_end == std::string_view::npos)
    throw ParseError("end_header", "ply: header is not terminated by end_header");

  std::istringstream header(std::string(data.substr(4, header_end - 4)));
  std::string line;
  bool have_format = false, in_vertex = false, seen_vertex = false;
  long long vertex_count = -1;
  std::vector<PlyProperty> props;
  std::size_t stride = 0;
  while (std::getline(header, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt != "binary_little_endian")
        throw ParseError("format", "ply: unsupported format '" + fmt + "', expected binary_little_endian");
      have_format = true;
    } else if (kw == "element") {
      std::string name;
      long long count = -1;
      ls >> name >> count;
      if (name == "vertex") {
        if (ls.fail() || count < 0) throw ParseError("element vertex", "ply: invalid vertex count");
        vertex_count = count;
        in_vertex = true;
        seen_vertex = true;
      } else {
        if (!seen_vertex)
          throw ParseError("element " + name, "ply: element '" + name + "' precedes the vertex element");
        in_vertex = false;
      }
    } else if (kw == "property") {
      if (!in_vertex) {
        if (!seen_vertex) throw ParseError("property", "ply: property declared outside any element");
        continue;
      }
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw ParseError(name, "ply: list properties are not supported on vertices");
      const auto t = ply_type(type);
      if (!t) throw ParseError(name, "ply: unknown type '" + type + "' for property '" + name + "'");
      if (name.empty()) throw ParseError("property", "ply: property without a name");
      props.push_back({name, *t, stride});
      stride += ply_size(*t);
    } else {
      throw ParseError(kw, "ply: unexpected header keyword '" + kw + "'");
    }
  }
  if (!have_format) throw ParseError("format", "ply: missing format line");
  if (!seen_vertex) throw ParseError("element vertex", "ply: missing vertex element");

  auto find = [&](const std::string& name) -> const PlyProperty& {
    for (const auto& p : props)
      if (p.name == name) return p;
    throw ParseError(name, "ply: missing vertex property '" + name + "'");
  };
  const char* required[] = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                            "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
  std::vector<const PlyProperty*> req;
  for (const char* name : required) req.push_back(&find(name));

  int rest_count = 0;
  while (std::any_of(props.begin(), props.end(), [&](const PlyProperty& p) {
    return p.name == "f_rest_" + std::to_string(rest_count);
  }))
    ++rest_count;
  const int total_rest = static_cast<int>(std::count_if(props.begin(), props.end(), [](const PlyProperty& p) {
    return p.name.rfind("f_rest_", 0) == 0;
  }));
  if (total_rest != rest_count)
    throw ParseError("f_rest_" + std::to_string(rest_count), "ply: f_rest properties are not contiguous");
  int degree = -1;
  for (int d = 0; d <= 3; ++d)
    if (appearance_size(d) - 3 == rest_count) degree = d;
  if (degree < 0)
    throw ParseError("f_rest", "ply: " + std::to_string(rest_count) + " f_rest coefficients match no SH degree");
  std::vector<const PlyProperty*> rest;
  for (int i = 0; i < rest_count; ++i) rest.push_back(&find("f_rest_" + std::to_string(i)));

  const std::size_t body_offset = header_end + std::string_view("end_header\n").size();
  const std::size_t needed = static_cast<std::size_t>(vertex_count) * stride;
  if (data.size() - body_offset < needed)
    throw ParseError("vertex body", "ply: body truncated: expected " + std::to_string(needed) +
                                        " bytes of vertex data, found " +
                                        std::to_string(data.size() - body_offset));

  std::vector<GaussianPrimitive> prims(static_cast<std::size_t>(vertex_count));
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const char* row = data.data() + body_offset + i * stride;
    auto value = [&](const PlyProperty* p) {
      const double v = ply_value(p->type, row + p->offset);
      if (!std::isfinite(v))
        throw ParseError(p->name, "ply: vertex " + std::to_string(i) + " has non-finite '" + p->name + "'");
      return v;
    };
    GaussianPrimitive& g = prims[i];
    g.center = Vec3(value(req[0]), value(req[1]), value(req[2]));
    g.appearance.assign(appearance_size(degree), 0.0);
    for (int c = 0; c < 3; ++c) g.appearance[c] = value(req[3 + c]);
    for (int k = 0; k < rest_count; ++k) g.appearance[3 + k] = value(rest[k]);
    g.opacity = sigmoid(value(req[6]));
    g.scale = Vec3(std::exp(value(req[7])), std::exp(value(req[8])), std::exp(value(req[9])));
    g.rotation = Quat(value(req[10]), value(req[11]), value(req[12]), value(req[13]));
  }
  return GaussianField(std::move(prims), degree);
}

GaussianField load_ply(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_binary_file(path);
  try {
    return parse_ply(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.element(), path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_ply(const GaussianField& field, const std::filesystem::path& path) {
  const int rest = appearance_size(field.sh_degree()) - 3;
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << field.size() << "\n";
  for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
    h << "property float " << n << "\n";
  for (int k = 0; k < rest; ++k) h << "property float f_rest_" << k << "\n";
  for (const char* n : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    h << "property float " << n << "\n";
  h << "end_header\n";

  std::string out = h.str();
  std::vector<float> row;
  for (const auto& p : field) {
    row.clear();
    for (int a = 0; a < 3; ++a) row.push_back(static_cast<float>(p.center[a]));
    row.insert(row.end(), 3, 0.0f);
    for (double c : p.appearance) row.push_back(static_cast<float>(c));
    row.push_back(static_cast<float>(logit(p.opacity)));
    for (int a = 0; a < 3; ++a) row.push_back(static_cast<float>(std::log(p.scale[a])));
    row.push_back(static_cast<float>(p.rotation.w()));
    row.push_back(static_cast<float>(p.rotation.x()));
    row.push_back(static_cast<float>(p.rotation.y()));
    row.push_back(static_cast<float>(p.rotation.z()));
    out.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
  write_bytes(path, out);
}

// ---------------------------------------------------------------- PFM

DepthMap parse_pfm(std::span<const char> bytes) {
  const std::string_view data(bytes.data(), bytes.size());
  std::size_t pos = 0;
  auto token = [&](const char* what) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw ParseError(what, std::string("pfm: missing ") + what);
    return data.substr(start, pos - start);
  };

  const std::string_view magic = token("magic");
  if (magic == "PF") throw ParseError("magic", "pfm: color PFM is not a depth map, expected 'Pf'");
  if (magic != "Pf") throw ParseError("magic", "pfm: bad magic, expected 'Pf'");

  auto parse_int = [](std::string_view s, const char* what) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 1 || v > (1 << 16))
      throw ParseError(what, std::string("pfm: invalid ") + what + " '" + std::string(s) + "'");
    return static_cast<int>(v);
  };
  const int width = parse_int(token("width"), "width");
  const int height = parse_int(token("height"), "height");

  const std::string scale_text(token("scale"));
  char* end = nullptr;
  const double scale = std::strtod(scale_text.c_str(), &end);
  if (end != scale_text.c_str() + scale_text.size() || scale == 0.0 || !std::isfinite(scale))
    throw ParseError("scale", "pfm: invalid scale line '" + scale_text + "'");
  const bool big_endian = scale > 0.0;
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw ParseError("scale", "pfm: header not terminated after the scale line");
  ++pos;

  const std::size_t needed = static_cast<std::size_t>(width) * height * 4;
  if (data.size() - pos < needed)
    throw ParseError("pixel data", "pfm: pixel data truncated: expected " + std::to_string(needed) +
                                        " bytes, found " + std::to_string(data.size() - pos));

  std::vector<double> values(static_cast<std::size_t>(width) * height);
  for (int row = 0; row < height; ++row) {
    const int v = height - 1 - row;  // PFM stores the bottom row first
    for (int u = 0; u < width; ++u) {
      std::uint32_t raw;
      std::memcpy(&raw, data.data() + pos + (static_cast<std::size_t>(row) * width + u) * 4, 4);
      if (big_endian) raw = __builtin_bswap32(raw);
      const float f = std::bit_cast<float>(raw);
      if (!std::isfinite(f))
        throw ParseError("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ")",
                         "pfm: non-finite depth at pixel (" + std::to_string(u) + ", " +
                             std::to_string(v) + ")");
      values[static_cast<std::size_t>(v) * width + u] = f > 0.0f ? f : DepthMap::kInvalid;
    }
  }
  return DepthMap(width, height, std::move(values));
}

DepthMap load_depth(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_binary_file(path);
  try {
    return parse_pfm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.element(), path.string() + ": " + e.what());
  }
}

void write_depth(const DepthMap& depth, const std::filesystem::path& path) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1.0\n";
  out.reserve(out.size() + static_cast<std::size_t>(depth.width()) * depth.height() * 4);
  for (int v = depth.height() - 1; v >= 0; --v)
    for (int u = 0; u < depth.width(); ++u) {
      const float f = depth.valid(u, v) ? static_cast<float>(depth.at(u, v)) : 0.0f;
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  write_bytes(path, out);
}

// ---------------------------------------------------------------- JSON documents

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("json", std::string(what) + ": invalid JSON: " + e.what());
  }
}

double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(where + "." + key, "missing field '" + where + "." + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ParseError(where + "." + key, "field '" + where + "." + key + "' is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(where + "." + key, "field '" + where + "." + key + "' is not finite");
  return d;
}

int integer(const json& obj, const std::string& key, const std::string& where) {
  const double d = number(obj, key, where);
  if (d != std::floor(d) || std::abs(d) > 1e9)
    throw ParseError(where + "." + key, "field '" + where + "." + key + "' is not an integer");
  return static_cast<int>(d);
}

Vec3 vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ParseError(where, "'" + where + "' must be an array of 3 numbers");
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    if (!v[a].is_number()) throw ParseError(where, "'" + where + "' must contain numbers");
    out[a] = v[a].get<double>();
  }
  if (!out.allFinite()) throw ParseError(where, "'" + where + "' is not finite");
  return out;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

CameraIntrinsics parse_intrinsics_json(const json& j, const std::string& where) {
  CameraIntrinsics K;
  K.fx = number(j, "fx", where);
  K.fy = number(j, "fy", where);
  K.cx = number(j, "cx", where);
  K.cy = number(j, "cy", where);
  K.width = integer(j, "width", where);
  K.height = integer(j, "height", where);
  try {
    K.validate();
  } catch (const ValidationError& e) {
    throw ParseError(where, e.what());
  }
  return K;
}

json intrinsics_json(const CameraIntrinsics& K) {
  return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

CameraPose parse_pose_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 16)
    throw ParseError(where, where + ": expected 16 row-major numbers");
  Mat4 m;
  for (int i = 0; i < 16; ++i) {
    if (!j[i].is_number()) throw ParseError(where, where + ": entry " + std::to_string(i) + " is not a number");
    m(i / 4, i % 4) = j[i].get<double>();
  }
  if (auto problem = rigid_transform_problem(m); !problem.empty())
    throw ParseError(where, where + ": " + problem);
  return CameraPose(m);
}

json pose_json(const CameraPose& pose) {
  json arr = json::array();
  for (int i = 0; i < 16; ++i) arr.push_back(pose.camera_to_world()(i / 4, i % 4));
  return arr;
}

Trajectory parse_trajectory(const std::string& text) {
  const json j = parse_json(text, "trajectory");
  if (!j.is_object()) throw ParseError("trajectory", "trajectory: document must be an object");
  if (!j.contains("intrinsics")) throw ParseError("intrinsics", "trajectory: missing 'intrinsics'");
  const CameraIntrinsics K = parse_intrinsics_json(j.at("intrinsics"), "intrinsics");
  if (!j.contains("poses") || !j.at("poses").is_array())
    throw ParseError("poses", "trajectory: missing 'poses' array");
  const json& poses = j.at("poses");
  if (poses.empty()) throw ParseError("poses", "trajectory: 'poses' is empty");
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < poses.size(); ++i)
    cams.push_back({K, parse_pose_json(poses[i], "poses[" + std::to_string(i) + "]")});
  return Trajectory(std::move(cams));
}

std::string format_trajectory(const Trajectory& trajectory) {
  const CameraIntrinsics& K = trajectory[0].intrinsics;
  json poses = json::array();
  for (const auto& c : trajectory) {
    if (!(c.intrinsics == K))
      throw ValidationError("trajectory: the file format requires shared intrinsics");
    poses.push_back(pose_json(c.pose));
  }
  return json{{"intrinsics", intrinsics_json(K)}, {"poses", poses}}.dump(2) + "\n";
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  try {
    return parse_trajectory(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.element(), path.string() + ": " + e.what());
  }
}

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
  write_bytes(path, format_trajectory(trajectory));
}

PlacementSolution parse_placement(const std::string& text) {
  const json j = parse_json(text, "placement");
  if (!j.is_object()) throw ParseError("placement", "placement: document must be an object");
  PlacementSolution s;
  s.scale = number(j, "scale", "placement");
  if (!(s.scale > 0.0)) throw ParseError("placement.scale", "placement: scale must be positive");
  s.pooled_depth = number(j, "pooled_depth", "placement");
  if (!j.contains("base_anchor")) throw ParseError("placement.base_anchor", "placement: missing 'base_anchor'");
  s.base_anchor = vec3(j.at("base_anchor"), "base_anchor");

  auto array = [&](const char* key) -> const json& {
    if (!j.contains(key) || !j.at(key).is_array())
      throw ParseError(std::string("placement.") + key, std::string("placement: missing array '") + key + "'");
    return j.at(key);
  };
  const json& anchors = array("anchors");
  const json& roots = array("roots");
  const json& flags = array("collisions_resolved");
  const json& counts = array("resolution_counts");
  if (anchors.empty()) throw ParseError("placement.anchors", "placement: 'anchors' is empty");
  if (roots.size() != anchors.size() || flags.size() != anchors.size() || counts.size() != anchors.size())
    throw ParseError("placement", "placement: per-frame arrays differ in length");
  for (std::size_t t = 0; t < anchors.size(); ++t) {
    const std::string idx = "[" + std::to_string(t) + "]";
    s.anchor_points.push_back(vec3(anchors[t], "anchors" + idx));
    s.roots.push_back(vec3(roots[t], "roots" + idx));
    if (!flags[t].is_boolean()) throw ParseError("collisions_resolved" + idx, "placement: flag is not a boolean");
    s.collisions_resolved.push_back(flags[t].get<bool>());
    if (!counts[t].is_number_integer() || counts[t].get<int>() < 0)
      throw ParseError("resolution_counts" + idx, "placement: count is not a non-negative integer");
    s.resolution_counts.push_back(counts[t].get<int>());
  }
  return s;
}

std::string format_placement(const PlacementSolution& s) {
  json anchors = json::array(), roots = json::array();
  for (const auto& a : s.anchor_points) anchors.push_back(vec3_json(a));
  for (const auto& r : s.roots) roots.push_back(vec3_json(r));
  json flags = json::array();
  for (bool b : s.collisions_resolved) flags.push_back(b);
  const json j = {{"scale", s.scale},
                  {"pooled_depth", s.pooled_depth},
                  {"base_anchor", vec3_json(s.base_anchor)},
                  {"anchors", anchors},
                  {"roots", roots},
                  {"collisions_resolved", flags},
                  {"resolution_counts", s.resolution_counts}};
  return j.dump(2) + "\n";
}

PlacementSolution load_placement(const std::filesystem::path& path) {
  try {
    return parse_placement(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.element(), path.string() + ": " + e.what());
  }
}

void write_placement(const PlacementSolution& placement, const std::filesystem::path& path) {
  write_bytes(path, format_placement(placement));
}

// ---------------------------------------------------------------- frames

std::vector<std::filesystem::path> write_frames(std::span<const ImageBuffer> frames,
                                                const std::filesystem::path& dir,
                                                const std::string& prefix) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ImageBuffer& f = frames[i];
    Rgb8Image img{f.width, f.height, std::vector<std::uint8_t>(f.color.size())};
    for (std::size_t k = 0; k < f.color.size(); ++k)
      img.pixels[k] = static_cast<std::uint8_t>(std::lround(std::clamp(f.color[k], 0.0f, 1.0f) * 255.0f));
    std::ostringstream name;
    name << prefix << "_" << std::setw(4) << std::setfill('0') << i << ".png";
    paths.push_back(dir / name.str());
    write_png_rgb(paths.back(), img);
  }
  return paths;
}

void write_mask(const HoleMask& mask, const std::filesystem::path& path) {
  write_png_mask(path, mask.width, mask.height, mask.mask);
}

}  // namespace stagehand
