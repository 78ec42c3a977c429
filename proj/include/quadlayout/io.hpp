#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quadlayout/losses.hpp"
#include "quadlayout/metrics.hpp"
#include "quadlayout/scene.hpp"

namespace quadlayout {

/// Grid all written reals are snapped to before printing.
inline constexpr double kWriteQuantum = 1e-9;
inline constexpr double kWriteScale = 1e9;

/// Snaps every floating-point number to kWriteQuantum (negative zero becomes
/// zero) and prints with sorted keys, two-space indent and a trailing
/// newline. Throws InvalidArgument on non-finite numbers.
std::string dump_stable(const nlohmann::json& j);

/// Shortest text of a real after snapping it to kWriteQuantum.
std::string format_real(double x);

std::string read_text_file(const std::filesystem::path& path);
/// Creates missing parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Parses JSON text; syntax errors become ParseError with line and offset.
nlohmann::json parse_json(const std::string& text);

// ASCII PLY ---------------------------------------------------------------

/// Vertex element with double properties x y z followed by one property per
/// feature column.
std::string ply_to_string(const PointCloud& cloud);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// Accepts ASCII PLY with a vertex element holding x, y, z and any number of
/// other scalar properties (kept as features). Other elements are skipped.
/// Binary formats and malformed input raise ParseError.
PointCloud ply_from_string(const std::string& text);
PointCloud read_ply(const std::filesystem::path& path);

// Scene / prediction documents ---------------------------------------------

struct VoteRecord {
  std::vector<Vec3> seeds;
  Matrix offsets;  // M x 3
};

/// One JSON document; ground-truth scenes and predictions share the schema.
struct Document {
  std::string id;
  std::vector<OrientedBox> objects;
  std::vector<Quad> quads;
  /// Empty, or one quadness score per quad.
  std::vector<double> quad_scores;
  /// Ceiling and floor polygons, when present.
  std::vector<LayoutPolygon> layout;
  std::vector<std::string> class_table;
  std::optional<Vec3> room_center;
  /// Point cloud file, relative to the document's directory.
  std::string cloud;
  /// Raw head outputs, one entry per set (proposal module first).
  std::vector<SetPredictions> sets;
  std::optional<VoteRecord> votes;
};

nlohmann::json to_json(const Document& doc);
/// Throws SchemaError naming the offending field.
Document document_from_json(const nlohmann::json& j);

Document read_document(const std::filesystem::path& path);
void write_document(const std::filesystem::path& path, const Document& doc);

Document to_document(const Scene& scene, const std::string& cloud_file);

/// Reads the document and, when it names one, its point cloud.
Scene read_scene(const std::filesystem::path& path);

std::vector<QuadPrediction> quad_predictions(const Document& doc);

/// Walls from the quads plus any ceiling/floor polygons.
EvalScene to_eval_scene(const Document& doc);

/// Documents in a directory (sorted *.json paths), or the single file.
std::vector<std::filesystem::path> document_paths(const std::filesystem::path& path);

}  // namespace quadlayout
