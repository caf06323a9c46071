#include "kreg/cloud_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "kreg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

namespace kreg {

namespace {

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext;
}

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<PlyType> parse_ply_type(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::i8;
  if (s == "uchar" || s == "uint8") return PlyType::u8;
  if (s == "short" || s == "int16") return PlyType::i16;
  if (s == "ushort" || s == "uint16") return PlyType::u16;
  if (s == "int" || s == "int32") return PlyType::i32;
  if (s == "uint" || s == "uint32") return PlyType::u32;
  if (s == "float" || s == "float32") return PlyType::f32;
  if (s == "double" || s == "float64") return PlyType::f64;
  return std::nullopt;
}

size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

double decode_binary(const char* p, PlyType t) {
  switch (t) {
    case PlyType::i8: return *reinterpret_cast<const int8_t*>(p);
    case PlyType::u8: return *reinterpret_cast<const uint8_t*>(p);
    case PlyType::i16: { int16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::u16: { uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::i32: { int32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::u32: { uint32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::f32: { float v; std::memcpy(&v, p, 4); return v; }
    case PlyType::f64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
  bool has_list = false;
};

// Normalization applied to integer-typed feature properties.
double int_norm(PlyType t) {
  switch (t) {
    case PlyType::u8: return 255.0;
    case PlyType::u16: return 65535.0;
    default: return 1.0;
  }
}

struct VertexLayout {
  int x = -1, y = -1, z = -1;
  std::array<int, 3> rgb{-1, -1, -1};
  int intensity = -1;
  std::vector<int> semantic;  // property index per class, contiguous from semantic_0
};

PointCloud assemble(const std::vector<std::vector<double>>& columns, const PlyElement& vertex,
                    const VertexLayout& lay, const std::string& path) {
  const size_t n = vertex.count;
  std::vector<Eigen::Vector3d> positions(n);
  for (size_t r = 0; r < n; ++r) {
    positions[r] = Eigen::Vector3d(columns[static_cast<size_t>(lay.x)][r],
                                   columns[static_cast<size_t>(lay.y)][r],
                                   columns[static_cast<size_t>(lay.z)][r]);
  }

  std::vector<Channel> channels;
  const bool has_color = lay.rgb[0] >= 0;
  const bool has_intensity = lay.intensity >= 0;
  const bool has_semantic = !lay.semantic.empty();
  if (has_color) channels.push_back({"color", 3, ChannelKind::color});
  if (has_intensity) channels.push_back({"intensity", 1, ChannelKind::intensity});
  if (has_semantic) {
    channels.push_back({"semantic", static_cast<int>(lay.semantic.size()), ChannelKind::semantic});
  }
  FeatureSchema schema{channels};

  std::vector<double> features(n * static_cast<size_t>(schema.total_dim()));
  size_t at = 0;
  for (size_t r = 0; r < n; ++r) {
    if (has_color) {
      for (int c = 0; c < 3; ++c) {
        const int col = lay.rgb[static_cast<size_t>(c)];
        const double norm = int_norm(vertex.properties[static_cast<size_t>(col)].type);
        features[at++] = columns[static_cast<size_t>(col)][r] / norm;
      }
    }
    if (has_intensity) {
      const double norm = int_norm(vertex.properties[static_cast<size_t>(lay.intensity)].type);
      features[at++] = columns[static_cast<size_t>(lay.intensity)][r] / norm;
    }
    for (const int col : lay.semantic) {
      features[at++] = columns[static_cast<size_t>(col)][r];
    }
  }
  (void)path;
  return PointCloud(std::move(positions), std::move(schema), std::move(features));
}

PointCloud read_ply(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);

  int line_no = 0;
  auto next_line = [&](std::string& line) {
    if (!std::getline(in, line)) throw ParseError(path, line_no, "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
  };

  std::string line;
  next_line(line);
  if (line != "ply") throw ParseError(path, 1, "missing 'ply' magic");

  bool binary = false;
  bool format_seen = false;
  std::vector<PlyElement> elements;
  while (true) {
    next_line(line);
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw ParseError(path, line_no, "unsupported format '" + fmt + "'");
      }
      format_seen = true;
    } else if (word == "element") {
      PlyElement el;
      if (!(ls >> el.name >> el.count)) {
        throw ParseError(path, line_no, "malformed element line");
      }
      elements.push_back(el);
    } else if (word == "property") {
      if (elements.empty()) throw ParseError(path, line_no, "property before any element");
      std::string type_word;
      ls >> type_word;
      if (type_word == "list") {
        elements.back().has_list = true;
        continue;
      }
      const auto type = parse_ply_type(type_word);
      if (!type) throw ParseError(path, line_no, "unknown property type '" + type_word + "'");
      std::string name;
      if (!(ls >> name)) throw ParseError(path, line_no, "property without a name");
      elements.back().properties.push_back({name, *type});
    } else if (word == "end_header") {
      break;
    } else {
      throw ParseError(path, line_no, "unrecognized header keyword '" + word + "'");
    }
  }
  if (!format_seen) throw ParseError(path, line_no, "missing format line");

  const auto vertex_it =
      std::find_if(elements.begin(), elements.end(),
                   [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw ParseError(path, line_no, "no vertex element");
  const PlyElement& vertex = *vertex_it;
  if (vertex.has_list) throw ParseError(path, line_no, "list properties on vertices unsupported");

  // Elements declared before vertex would have to be skipped over; reject the
  // variable-length ones we cannot size.
  for (auto it = elements.begin(); it != vertex_it; ++it) {
    if (it->has_list) {
      throw ParseError(path, line_no, "cannot skip list element '" + it->name + "' before vertex");
    }
  }

  VertexLayout lay;
  std::map<int, int> semantic_cols;  // class index -> property column
  for (size_t p = 0; p < vertex.properties.size(); ++p) {
    const std::string& name = vertex.properties[p].name;
    const int col = static_cast<int>(p);
    if (name == "x") lay.x = col;
    else if (name == "y") lay.y = col;
    else if (name == "z") lay.z = col;
    else if (name == "red") lay.rgb[0] = col;
    else if (name == "green") lay.rgb[1] = col;
    else if (name == "blue") lay.rgb[2] = col;
    else if (name == "intensity") lay.intensity = col;
    else if (name.rfind("semantic_", 0) == 0) {
      try {
        semantic_cols[std::stoi(name.substr(9))] = col;
      } catch (const std::exception&) {
        throw ParseError(path, line_no, "malformed semantic property '" + name + "'");
      }
    } else if (warnings) {
      warnings->push_back("property '" + name + "' skipped");
    }
  }
  if (lay.x < 0 || lay.y < 0 || lay.z < 0) {
    throw ParseError(path, line_no, "vertex element lacks x/y/z properties");
  }
  const bool any_rgb = lay.rgb[0] >= 0 || lay.rgb[1] >= 0 || lay.rgb[2] >= 0;
  if (any_rgb && (lay.rgb[0] < 0 || lay.rgb[1] < 0 || lay.rgb[2] < 0)) {
    throw ParseError(path, line_no, "incomplete red/green/blue property triple");
  }
  for (const auto& [cls, col] : semantic_cols) {
    if (cls != static_cast<int>(lay.semantic.size())) {
      throw ParseError(path, line_no, "semantic properties must be contiguous from semantic_0");
    }
    lay.semantic.push_back(col);
  }

  std::vector<std::vector<double>> columns(vertex.properties.size());
  for (auto& c : columns) c.resize(vertex.count);

  if (binary) {
    // Skip fixed-size elements that precede the vertices.
    for (auto it = elements.begin(); it != vertex_it; ++it) {
      size_t record = 0;
      for (const auto& prop : it->properties) record += ply_type_size(prop.type);
      in.seekg(static_cast<std::streamoff>(record * it->count), std::ios::cur);
    }
    size_t record = 0;
    for (const auto& prop : vertex.properties) record += ply_type_size(prop.type);
    std::vector<char> buf(record);
    for (size_t r = 0; r < vertex.count; ++r) {
      in.read(buf.data(), static_cast<std::streamsize>(record));
      if (static_cast<size_t>(in.gcount()) != record) {
        throw ParseError(path, line_no, "truncated binary vertex data");
      }
      size_t off = 0;
      for (size_t p = 0; p < vertex.properties.size(); ++p) {
        columns[p][r] = decode_binary(buf.data() + off, vertex.properties[p].type);
        off += ply_type_size(vertex.properties[p].type);
      }
    }
  } else {
    for (auto it = elements.begin(); it != vertex_it; ++it) {
      for (size_t r = 0; r < it->count; ++r) next_line(line);
    }
    for (size_t r = 0; r < vertex.count; ++r) {
      next_line(line);
      std::istringstream ls(line);
      for (size_t p = 0; p < vertex.properties.size(); ++p) {
        if (!(ls >> columns[p][r])) {
          throw ParseError(path, line_no, "vertex line has too few values");
        }
      }
      std::string extra;
      if (ls >> extra) {
        throw ParseError(path, line_no, "trailing data '" + extra + "' on vertex line");
      }
    }
  }
  return assemble(columns, vertex, lay, path);
}

uint32_t pack_rgb(double r, double g, double b) {
  auto q = [](double v) {
    return static_cast<uint32_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  return (q(r) << 16) | (q(g) << 8) | q(b);
}

PointCloud read_pcd(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  int line_no = 0;
  std::vector<std::string> fields;
  size_t points = 0;
  bool data_seen = false;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "FIELDS") {
      std::string f;
      while (ls >> f) fields.push_back(f);
    } else if (key == "POINTS") {
      if (!(ls >> points)) throw ParseError(path, line_no, "malformed POINTS line");
    } else if (key == "DATA") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii") throw ParseError(path, line_no, "only DATA ascii PCD is supported");
      data_seen = true;
      break;
    }
    // VERSION/SIZE/TYPE/COUNT/WIDTH/HEIGHT/VIEWPOINT carry nothing we need.
  }
  if (!data_seen) throw ParseError(path, line_no, "missing DATA line");
  if (fields.empty()) throw ParseError(path, line_no, "missing FIELDS line");

  int fx = -1, fy = -1, fz = -1, frgb = -1, fintensity = -1;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] == "x") fx = static_cast<int>(i);
    else if (fields[i] == "y") fy = static_cast<int>(i);
    else if (fields[i] == "z") fz = static_cast<int>(i);
    else if (fields[i] == "rgb") frgb = static_cast<int>(i);
    else if (fields[i] == "intensity") fintensity = static_cast<int>(i);
    else if (warnings) warnings->push_back("field '" + fields[i] + "' skipped");
  }
  if (fx < 0 || fy < 0 || fz < 0) throw ParseError(path, line_no, "PCD lacks x/y/z fields");

  std::vector<Eigen::Vector3d> positions;
  positions.reserve(points);
  std::vector<double> colors, intensities;
  for (size_t r = 0; r < points; ++r) {
    if (!std::getline(in, line)) throw ParseError(path, line_no, "fewer data rows than POINTS");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.size() != fields.size()) {
      throw ParseError(path, line_no, "expected " + std::to_string(fields.size()) +
                                          " columns, got " + std::to_string(row.size()));
    }
    positions.emplace_back(row[static_cast<size_t>(fx)], row[static_cast<size_t>(fy)],
                           row[static_cast<size_t>(fz)]);
    if (frgb >= 0) {
      // Both packed-rgb conventions occur in the wild: the 24-bit integer
      // stored as the float's *value*, and the integer stored as the float's
      // *bit pattern* (which reads back as a denormal). Take whichever fits.
      const double raw = row[static_cast<size_t>(frgb)];
      uint32_t packed;
      if (raw >= 1.0) {
        packed = static_cast<uint32_t>(std::llround(raw));
      } else {
        const float f = static_cast<float>(raw);
        std::memcpy(&packed, &f, 4);
      }
      colors.push_back(((packed >> 16) & 0xFF) / 255.0);
      colors.push_back(((packed >> 8) & 0xFF) / 255.0);
      colors.push_back((packed & 0xFF) / 255.0);
    }
    if (fintensity >= 0) intensities.push_back(row[static_cast<size_t>(fintensity)]);
  }

  std::vector<Channel> channels;
  if (frgb >= 0) channels.push_back({"color", 3, ChannelKind::color});
  if (fintensity >= 0) channels.push_back({"intensity", 1, ChannelKind::intensity});
  FeatureSchema schema{channels};
  std::vector<double> features;
  features.reserve(positions.size() * static_cast<size_t>(schema.total_dim()));
  for (size_t r = 0; r < positions.size(); ++r) {
    if (frgb >= 0) {
      features.push_back(colors[3 * r]);
      features.push_back(colors[3 * r + 1]);
      features.push_back(colors[3 * r + 2]);
    }
    if (fintensity >= 0) features.push_back(intensities[r]);
  }
  return PointCloud(std::move(positions), std::move(schema), std::move(features));
}

void write_pcd(const PointCloud& cloud, const std::string& path) {
  int color_ch = -1, intensity_ch = -1;
  for (int k = 0; k < cloud.schema().channel_count(); ++k) {
    const Channel& ch = cloud.schema().channel(k);
    if (ch.kind == ChannelKind::color) color_ch = k;
    else if (ch.kind == ChannelKind::intensity) intensity_ch = k;
    else {
      throw std::invalid_argument("write_pcd: channel '" + ch.name +
                                  "' is not representable in PCD (use PLY)");
    }
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::string fields = "x y z";
  int nfields = 3;
  if (color_ch >= 0) { fields += " rgb"; ++nfields; }
  if (intensity_ch >= 0) { fields += " intensity"; ++nfields; }
  auto repeat = [&](const std::string& s) {
    std::string r;
    for (int i = 0; i < nfields; ++i) r += (i ? " " : "") + s;
    return r;
  };
  out << "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n";
  out << "FIELDS " << fields << "\n";
  out << "SIZE " << repeat("4") << "\nTYPE " << repeat("F") << "\nCOUNT " << repeat("1") << "\n";
  out << "WIDTH " << cloud.size() << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\n";
  out << "POINTS " << cloud.size() << "\nDATA ascii\n";

  char buf[256];
  for (int i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.position(i);
    const auto row = cloud.feature_row(i);
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", p.x(), p.y(), p.z());
    out << buf;
    if (color_ch >= 0) {
      const int off = cloud.schema().channel_offset(color_ch);
      const uint32_t packed = pack_rgb(row[static_cast<size_t>(off)],
                                       row[static_cast<size_t>(off) + 1],
                                       row[static_cast<size_t>(off) + 2]);
      out << " " << packed;
    }
    if (intensity_ch >= 0) {
      const int off = cloud.schema().channel_offset(intensity_ch);
      std::snprintf(buf, sizeof(buf), " %.9g", row[static_cast<size_t>(off)]);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::string& path, bool binary) {
  int color_ch = -1, intensity_ch = -1, semantic_ch = -1;
  for (int k = 0; k < cloud.schema().channel_count(); ++k) {
    switch (cloud.schema().channel(k).kind) {
      case ChannelKind::color: color_ch = k; break;
      case ChannelKind::intensity: intensity_ch = k; break;
      case ChannelKind::semantic: semantic_ch = k; break;
      case ChannelKind::custom:
        throw std::invalid_argument("write_ply: custom channels have no file mapping");
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (color_ch >= 0) {
    out << "property float red\nproperty float green\nproperty float blue\n";
  }
  if (intensity_ch >= 0) out << "property float intensity\n";
  if (semantic_ch >= 0) {
    for (int d = 0; d < cloud.schema().channel(semantic_ch).dim; ++d) {
      out << "property float semantic_" << d << "\n";
    }
  }
  out << "end_header\n";

  auto feature_cols = [&](int i) {
    std::vector<float> vals;
    const auto row = cloud.feature_row(i);
    auto push_channel = [&](int ch) {
      if (ch < 0) return;
      const int off = cloud.schema().channel_offset(ch);
      for (int d = 0; d < cloud.schema().channel(ch).dim; ++d) {
        vals.push_back(static_cast<float>(row[static_cast<size_t>(off + d)]));
      }
    };
    push_channel(color_ch);
    push_channel(intensity_ch);
    push_channel(semantic_ch);
    return vals;
  };

  if (binary) {
    for (int i = 0; i < cloud.size(); ++i) {
      const Eigen::Vector3d& p = cloud.position(i);
      double xyz[3] = {p.x(), p.y(), p.z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      const auto vals = feature_cols(i);
      if (!vals.empty()) {
        out.write(reinterpret_cast<const char*>(vals.data()),
                  static_cast<std::streamsize>(vals.size() * sizeof(float)));
      }
    }
  } else {
    char buf[64];
    for (int i = 0; i < cloud.size(); ++i) {
      const Eigen::Vector3d& p = cloud.position(i);
      // %.17g round-trips doubles exactly even through text
      std::snprintf(buf, sizeof(buf), "%.17g", p.x());
      out << buf;
      std::snprintf(buf, sizeof(buf), " %.17g", p.y());
      out << buf;
      std::snprintf(buf, sizeof(buf), " %.17g", p.z());
      out << buf;
      for (const float v : feature_cols(i)) {
        std::snprintf(buf, sizeof(buf), " %.9g", v);
        out << buf;
      }
      out << "\n";
    }
  }
}

PointCloud read_cloud(const std::string& path, std::vector<std::string>* warnings) {
  const std::string ext = lower_ext(path);
  if (ext == ".ply") return read_ply(path, warnings);
  if (ext == ".pcd") return read_pcd(path, warnings);
  throw std::invalid_argument("read_cloud: unsupported extension '" + ext + "' (want .ply/.pcd)");
}

void write_cloud(const PointCloud& cloud, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ply") {
    write_ply(cloud, path, /*binary=*/true);
  } else if (ext == ".pcd") {
    write_pcd(cloud, path);
  } else {
    throw std::invalid_argument("write_cloud: unsupported extension '" + ext + "'");
  }
}

}  // namespace kreg
