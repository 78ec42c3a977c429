#include "quadlayout/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "quadlayout/classes.hpp"
#include "quadlayout/errors.hpp"

namespace quadlayout {

using nlohmann::json;

namespace {

double snap(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cannot write a non-finite number");
  // Dividing by the exact integer 1e9 gives the double nearest to n / 1e9.
  const double q = std::round(x * kWriteScale) / kWriteScale;
  return q == 0.0 ? 0.0 : q;
}

void snap_all(json& j) {
  if (j.is_number_float()) {
    j = snap(j.get<double>());
  } else if (j.is_structured()) {
    for (auto& child : j) snap_all(child);
  }
}

// Line number (1-based) and line start offset of byte position `pos`.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  std::size_t line = 1;
  std::size_t start = 0;
  for (std::size_t i = 0; i < pos; ++i) {
    if (text[i] == '\n') {
      ++line;
      start = i + 1;
    }
  }
  return {line, start};
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

// Schema helpers. Each names the field it is reading in the error.
const json& require(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) throw SchemaError(field, "missing");
  return j.at(field);
}

double number(const json& j, const char* field) {
  if (!j.is_number()) throw SchemaError(field, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw SchemaError(field, "not finite");
  return x;
}

Vec3 vec3(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(field, "expected an array of 3 numbers");
  return {number(j[0], field), number(j[1], field), number(j[2], field)};
}

std::vector<Vec3> vec3_list(const json& j, const char* field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of points");
  std::vector<Vec3> out;
  for (const auto& v : j) out.push_back(vec3(v, field));
  return out;
}

std::vector<double> number_list(const json& j, const char* field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, field));
  return out;
}

double optional_score(const json& item) {
  if (!item.contains("score")) return 1.0;
  const double s = number(item.at("score"), "score");
  if (s < 0.0 || s > 1.0) throw SchemaError("score", "must lie in [0, 1]");
  return s;
}

int class_id(const json& j, const std::vector<std::string>& table) {
  const auto& names = table.empty() ? default_class_names() : table;
  if (j.is_string()) {
    const auto it = std::find(names.begin(), names.end(), j.get<std::string>());
    if (it == names.end()) throw SchemaError("class", "unknown class name '" + j.get<std::string>() + "'");
    return static_cast<int>(it - names.begin());
  }
  if (!j.is_number_integer()) throw SchemaError("class", "expected an integer id or a class name");
  const int c = j.get<int>();
  if (c < 0 || static_cast<std::size_t>(c) >= names.size()) throw SchemaError("class", "id out of range");
  return c;
}

OrientedBox object_from_json(const json& o, const std::vector<std::string>& table) {
  if (!o.is_object()) throw SchemaError("objects", "expected an object");
  OrientedBox b;
  b.center = vec3(require(o, "center"), "center");
  b.size = vec3(require(o, "size"), "size");
  if (!(b.size.x > 0.0 && b.size.y > 0.0 && b.size.z > 0.0)) throw SchemaError("size", "extents must be positive");
  b.heading = number(require(o, "heading"), "heading");
  b.class_id = class_id(require(o, "class"), table);
  b.score = optional_score(o);
  return b;
}

Quad quad_from_json(const json& o) {
  if (!o.is_object()) throw SchemaError("quads", "expected an object");
  Quad q;
  q.center = vec3(require(o, "center"), "center");
  q.width = number(require(o, "width"), "width");
  if (!(q.width > 0.0)) throw SchemaError("width", "must be positive");
  q.height = number(require(o, "height"), "height");
  if (!(q.height > 0.0)) throw SchemaError("height", "must be positive");
  const Vec3 n = vec3(require(o, "normal"), "normal");
  const double len = norm(n);
  if (!(len > 1e-6)) throw SchemaError("normal", "must be non-zero");
  q.normal = n / len;
  if (std::abs(q.normal.z) > 0.1) throw SchemaError("normal", "walls must be near vertical (|n.z| <= 0.1)");
  return q;
}

json set_to_json(const SetPredictions& s) {
  json ob = json::array();
  json ov = json::array();
  json qb = json::array();
  json qv = json::array();
  for (const auto& v : s.object_bases) ob.push_back(vec_json(v));
  for (const auto& v : s.object_vectors) ov.push_back(v);
  for (const auto& v : s.quad_bases) qb.push_back(vec_json(v));
  for (const auto& v : s.quad_vectors) qv.push_back(std::vector<double>(v.begin(), v.end()));
  return {{"object_bases", ob}, {"object_vectors", ov}, {"quad_bases", qb}, {"quad_vectors", qv}};
}

SetPredictions set_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("sets", "expected an object per set");
  SetPredictions s;
  s.object_bases = vec3_list(require(j, "object_bases"), "object_bases");
  const auto& ov = require(j, "object_vectors");
  if (!ov.is_array()) throw SchemaError("object_vectors", "expected an array");
  for (const auto& v : ov) s.object_vectors.push_back(number_list(v, "object_vectors"));
  s.quad_bases = vec3_list(require(j, "quad_bases"), "quad_bases");
  const auto& qv = require(j, "quad_vectors");
  if (!qv.is_array()) throw SchemaError("quad_vectors", "expected an array");
  for (const auto& v : qv) {
    const auto row = number_list(v, "quad_vectors");
    if (row.size() != kQuadVectorSize) throw SchemaError("quad_vectors", "each row needs 10 values");
    std::array<double, kQuadVectorSize> a{};
    std::copy(row.begin(), row.end(), a.begin());
    s.quad_vectors.push_back(a);
  }
  if (s.object_bases.size() != s.object_vectors.size()) {
    throw SchemaError("object_vectors", "count differs from object_bases");
  }
  if (s.quad_bases.size() != s.quad_vectors.size()) throw SchemaError("quad_vectors", "count differs from quad_bases");
  return s;
}

// PLY --------------------------------------------------------------------

struct Line {
  std::string_view text;
  std::size_t number;
  std::size_t offset;
};

class LineReader {
 public:
  explicit LineReader(const std::string& text) : text_(text) {}

  bool next(Line& out) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    std::string_view t(text_.data() + pos_, end - pos_);
    if (!t.empty() && t.back() == '\r') t.remove_suffix(1);
    out = {t, ++line_, pos_};
    pos_ = end + 1;
    return true;
  }

  std::size_t line() const { return line_; }
  std::size_t offset() const { return std::min(pos_, text_.size()); }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_scalar_type(std::string_view t) {
  static const char* kTypes[] = {"char",  "uchar",  "short",  "ushort",  "int",     "uint",    "float",
                                 "double", "int8",  "uint8",  "int16",   "uint16",  "int32",   "uint32",
                                 "float32", "float64"};
  return std::any_of(std::begin(kTypes), std::end(kTypes), [&](const char* k) { return t == k; });
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  std::size_t line = 0;
  std::size_t offset = 0;
};

}  // namespace

std::string format_real(double x) {
  const double q = snap(x);
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, q);
  return std::string(buf, res.ptr);
}

std::string dump_stable(const json& j) {
  json copy = j;
  snap_all(copy);
  return copy.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = e.byte == 0 ? 0 : e.byte - 1;
    const auto [line, start] = locate(text, pos);
    throw ParseError(std::string("invalid JSON: ") + e.what(), line, start);
  }
}

std::string ply_to_string(const PointCloud& cloud) {
  if (cloud.features.rows() != 0 && static_cast<std::size_t>(cloud.features.rows()) != cloud.size()) {
    throw ShapeMismatch("feature rows differ from point count");
  }
  const auto cols = static_cast<std::size_t>(cloud.size() == 0 ? 0 : cloud.features.cols());
  if (cols != cloud.feature_names.size()) throw ShapeMismatch("feature names differ from feature columns");
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  for (const auto& n : cloud.feature_names) out += "property double " + n + "\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    out += format_real(p.x);
    out += ' ';
    out += format_real(p.y);
    out += ' ';
    out += format_real(p.z);
    for (std::size_t c = 0; c < cols; ++c) {
      out += ' ';
      out += format_real(cloud.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
    out += '\n';
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  write_text_file(path, ply_to_string(cloud));
}

PointCloud ply_from_string(const std::string& text) {
  LineReader reader(text);
  Line line;
  if (!reader.next(line) || line.text != "ply") throw ParseError("missing 'ply' magic", 1, 0);

  std::vector<PlyElement> elements;
  bool have_format = false;
  bool ended = false;
  while (reader.next(line)) {
    const auto tok = split(line.text);
    if (tok.empty()) continue;
    const auto fail = [&](const std::string& what) { throw ParseError(what, line.number, line.offset); };
    if (tok[0] == "format") {
      if (tok.size() != 3) fail("malformed format line");
      if (tok[1] != "ascii") fail("unsupported PLY format '" + std::string(tok[1]) + "' (only ascii)");
      if (tok[2] != "1.0") fail("unsupported PLY version");
      have_format = true;
    } else if (tok[0] == "comment" || tok[0] == "obj_info") {
      continue;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) fail("malformed element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      e.line = line.number;
      e.offset = line.offset;
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (r.ec != std::errc() || r.ptr != tok[2].data() + tok[2].size()) fail("bad element count");
      elements.push_back(e);
    } else if (tok[0] == "property") {
      if (elements.empty()) fail("property before any element");
      if (tok.size() == 5 && tok[1] == "list") {
        if (!is_scalar_type(tok[2]) || !is_scalar_type(tok[3])) fail("unknown list property type");
        if (elements.back().name == "vertex") fail("list properties on vertices are not supported");
        elements.back().properties.emplace_back(tok[4]);
      } else if (tok.size() == 3) {
        if (!is_scalar_type(tok[1])) fail("unknown property type '" + std::string(tok[1]) + "'");
        elements.back().properties.emplace_back(tok[2]);
      } else {
        fail("malformed property line");
      }
    } else if (tok[0] == "end_header") {
      if (tok.size() != 1) fail("malformed end_header line");
      ended = true;
      break;
    } else {
      fail("unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!ended) throw ParseError("header has no end_header", reader.line() + 1, reader.offset());
  if (!have_format) throw ParseError("header has no format line", line.number, line.offset);

  const auto vertex = std::find_if(elements.begin(), elements.end(), [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) throw ParseError("no vertex element", line.number, line.offset);
  const auto col = [&](const char* n) {
    const auto it = std::find(vertex->properties.begin(), vertex->properties.end(), n);
    return it == vertex->properties.end() ? -1 : static_cast<int>(it - vertex->properties.begin());
  };
  const int ix = col("x");
  const int iy = col("y");
  const int iz = col("z");
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element needs x, y and z", vertex->line, vertex->offset);

  PointCloud cloud;
  std::vector<int> feature_cols;
  for (std::size_t p = 0; p < vertex->properties.size(); ++p) {
    const int c = static_cast<int>(p);
    if (c == ix || c == iy || c == iz) continue;
    feature_cols.push_back(c);
    cloud.feature_names.push_back(vertex->properties[p]);
  }
  cloud.features.resize(static_cast<Eigen::Index>(vertex->count), static_cast<Eigen::Index>(feature_cols.size()));
  cloud.positions.reserve(vertex->count);

  std::vector<double> values;
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!reader.next(line)) {
        throw ParseError("unexpected end of data in element '" + e.name + "'", reader.line() + 1, reader.offset());
      }
      if (&e != &*vertex) continue;
      const auto tok = split(line.text);
      if (tok.size() != e.properties.size()) {
        throw ParseError("expected " + std::to_string(e.properties.size()) + " values, got " +
                             std::to_string(tok.size()),
                         line.number, line.offset);
      }
      values.assign(tok.size(), 0.0);
      for (std::size_t k = 0; k < tok.size(); ++k) {
        const auto r = std::from_chars(tok[k].data(), tok[k].data() + tok[k].size(), values[k]);
        if (r.ec != std::errc() || r.ptr != tok[k].data() + tok[k].size()) {
          throw ParseError("bad number '" + std::string(tok[k]) + "'", line.number, line.offset);
        }
      }
      cloud.positions.push_back({values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                                 values[static_cast<std::size_t>(iz)]});
      const auto row = static_cast<Eigen::Index>(cloud.positions.size() - 1);
      for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        cloud.features(row, static_cast<Eigen::Index>(f)) = values[static_cast<std::size_t>(feature_cols[f])];
      }
    }
  }
  while (reader.next(line)) {
    if (!split(line.text).empty()) throw ParseError("trailing data after the last element", line.number, line.offset);
  }
  return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) { return ply_from_string(read_text_file(path)); }

json to_json(const Document& doc) {
  json objects = json::array();
  for (const auto& b : doc.objects) {
    objects.push_back({{"center", vec_json(b.center)},
                       {"size", vec_json(b.size)},
                       {"heading", b.heading},
                       {"class", b.class_id},
                       {"score", b.score}});
  }
  json quads = json::array();
  for (std::size_t i = 0; i < doc.quads.size(); ++i) {
    const Quad& q = doc.quads[i];
    json item = {{"center", vec_json(q.center)},
                 {"width", q.width},
                 {"height", q.height},
                 {"normal", vec_json(q.normal)}};
    if (!doc.quad_scores.empty()) item["score"] = doc.quad_scores.at(i);
    quads.push_back(item);
  }
  json j = {{"id", doc.id}, {"objects", objects}, {"quads", quads}};
  if (!doc.layout.empty()) {
    json layout = json::object();
    for (const auto& p : doc.layout) {
      json verts = json::array();
      for (const auto& v : p.vertices) verts.push_back(vec_json(v));
      layout[to_string(p.kind)] = verts;
    }
    j["layout"] = layout;
  }
  json meta = json::object();
  if (!doc.class_table.empty()) meta["class_table"] = doc.class_table;
  if (doc.room_center) meta["room_center"] = vec_json(*doc.room_center);
  if (!doc.cloud.empty()) meta["cloud"] = doc.cloud;
  j["meta"] = meta;
  if (!doc.sets.empty()) {
    json sets = json::array();
    for (const auto& s : doc.sets) sets.push_back(set_to_json(s));
    j["sets"] = sets;
  }
  if (doc.votes) {
    json seeds = json::array();
    json offsets = json::array();
    for (const auto& s : doc.votes->seeds) seeds.push_back(vec_json(s));
    for (Eigen::Index r = 0; r < doc.votes->offsets.rows(); ++r) {
      offsets.push_back({doc.votes->offsets(r, 0), doc.votes->offsets(r, 1), doc.votes->offsets(r, 2)});
    }
    j["votes"] = {{"seeds", seeds}, {"offsets", offsets}};
  }
  return j;
}

Document document_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "document must be a JSON object");
  Document doc;
  if (j.contains("id")) {
    if (!j.at("id").is_string()) throw SchemaError("id", "expected a string");
    doc.id = j.at("id").get<std::string>();
  }
  if (j.contains("meta")) {
    const auto& meta = j.at("meta");
    if (!meta.is_object()) throw SchemaError("meta", "expected an object");
    if (meta.contains("class_table")) {
      const auto& t = meta.at("class_table");
      if (!t.is_array()) throw SchemaError("class_table", "expected an array of strings");
      for (const auto& n : t) {
        if (!n.is_string()) throw SchemaError("class_table", "expected an array of strings");
        doc.class_table.push_back(n.get<std::string>());
      }
    }
    if (meta.contains("room_center")) doc.room_center = vec3(meta.at("room_center"), "room_center");
    if (meta.contains("cloud")) {
      if (!meta.at("cloud").is_string()) throw SchemaError("cloud", "expected a file name");
      doc.cloud = meta.at("cloud").get<std::string>();
    }
  }
  if (j.contains("objects")) {
    const auto& objects = j.at("objects");
    if (!objects.is_array()) throw SchemaError("objects", "expected an array");
    for (const auto& o : objects) doc.objects.push_back(object_from_json(o, doc.class_table));
  }
  if (j.contains("quads")) {
    const auto& quads = j.at("quads");
    if (!quads.is_array()) throw SchemaError("quads", "expected an array");
    bool any_score = false;
    for (const auto& q : quads) {
      doc.quads.push_back(quad_from_json(q));
      any_score = any_score || (q.is_object() && q.contains("score"));
    }
    if (any_score) {
      for (const auto& q : quads) doc.quad_scores.push_back(optional_score(q));
    }
  }
  if (j.contains("layout")) {
    const auto& layout = j.at("layout");
    if (!layout.is_object()) throw SchemaError("layout", "expected an object with ceiling / floor");
    for (const auto& [name, kind] : {std::pair{"ceiling", PolygonKind::ceiling}, std::pair{"floor", PolygonKind::floor}}) {
      if (!layout.contains(name)) continue;
      LayoutPolygon p{vec3_list(layout.at(name), name), kind};
      try {
        validate(p);
      } catch (const InvalidArgument& e) {
        throw SchemaError(name, e.what());
      }
      doc.layout.push_back(std::move(p));
    }
  }
  if (j.contains("sets")) {
    const auto& sets = j.at("sets");
    if (!sets.is_array()) throw SchemaError("sets", "expected an array");
    for (const auto& s : sets) doc.sets.push_back(set_from_json(s));
  }
  if (j.contains("votes")) {
    const auto& v = j.at("votes");
    VoteRecord rec;
    rec.seeds = vec3_list(require(v, "seeds"), "seeds");
    const auto offsets = vec3_list(require(v, "offsets"), "offsets");
    if (offsets.size() != rec.seeds.size()) throw SchemaError("offsets", "count differs from seeds");
    rec.offsets.resize(static_cast<Eigen::Index>(offsets.size()), 3);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      rec.offsets.row(static_cast<Eigen::Index>(i)) << offsets[i].x, offsets[i].y, offsets[i].z;
    }
    doc.votes = std::move(rec);
  }
  return doc;
}

Document read_document(const std::filesystem::path& path) {
  return document_from_json(parse_json(read_text_file(path)));
}

void write_document(const std::filesystem::path& path, const Document& doc) {
  write_text_file(path, dump_stable(to_json(doc)));
}

Document to_document(const Scene& scene, const std::string& cloud_file) {
  Document doc;
  doc.id = scene.id;
  doc.objects = scene.gt_boxes;
  doc.quads = scene.gt_quads;
  doc.layout = scene.gt_layout;
  doc.class_table = scene.class_table;
  doc.room_center = scene.room_center;
  doc.cloud = cloud_file;
  return doc;
}

Scene read_scene(const std::filesystem::path& path) {
  const Document doc = read_document(path);
  Scene s;
  s.id = doc.id;
  s.gt_boxes = doc.objects;
  s.gt_quads = doc.quads;
  s.gt_layout = doc.layout;
  s.class_table = doc.class_table.empty() ? default_class_names() : doc.class_table;
  if (doc.room_center) {
    s.room_center = *doc.room_center;
  } else if (!doc.quads.empty()) {
    for (const auto& q : doc.quads) s.room_center += q.center;
    s.room_center = s.room_center / static_cast<double>(doc.quads.size());
  }
  if (!doc.cloud.empty()) s.cloud = read_ply(path.parent_path() / doc.cloud);
  return s;
}

std::vector<QuadPrediction> quad_predictions(const Document& doc) {
  std::vector<QuadPrediction> out;
  for (std::size_t i = 0; i < doc.quads.size(); ++i) {
    QuadPrediction p;
    p.quad = doc.quads[i];
    const double s = doc.quad_scores.empty() ? 1.0 : doc.quad_scores[i];
    p.quadness = {1.0 - s, s};
    out.push_back(p);
  }
  return out;
}

EvalScene to_eval_scene(const Document& doc) {
  EvalScene e;
  e.id = doc.id;
  e.boxes = doc.objects;
  e.quads = doc.quads;
  e.layout = layout_polygons(doc.quads, doc.layout);
  return e;
}

std::vector<std::filesystem::path> document_paths(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(path, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
    }
    if (ec) throw IoError("cannot list '" + path.string() + "': " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
  }
  if (!std::filesystem::exists(path, ec)) throw IoError("no such file or directory: '" + path.string() + "'");
  return {path};
}

}  // namespace quadlayout
