#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace plateid {

using Point = Eigen::Vector2d;
using Index = std::int32_t;

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Side of the rectangle that is bolted to the vibrating stand.
enum class ClampedSide { right, left, bottom, top };

std::string to_string(ClampedSide side);
ClampedSide clamped_side_from_string(const std::string& name);

/// Geometry of the rectangular strip specimen and its instrumentation.
///
/// Lengths are in meters, the accelerometer mass in kilograms. An accelerometer
/// is considered present iff `accel_mass > 0`.
struct GeometryConfig {
  double length = 0.1;
  double width = 0.02;
  double thickness = 1e-3;
  int nx = 50;
  int ny = 10;
  Point accel_center{0.005, 0.015};
  double accel_radius = 1e-3;
  double accel_mass = 1e-3;
  Point test_point{0.005, 0.015};
  ClampedSide clamped_side = ClampedSide::right;

  double half_thickness() const { return 0.5 * thickness; }
  bool has_accelerometer() const { return accel_mass > 0.0; }

  /// Throws MeshError if the configuration is not physically meaningful.
  void validate() const;
};

struct Edge {
  std::array<Index, 2> nodes{};  // nodes[0] < nodes[1]
  Point midpoint = Point::Zero();
  // Outward for boundary edges; for interior edges the tangent from the lower
  // to the higher node index rotated clockwise.
  Point normal = Point::Zero();
  bool boundary = false;
};

struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<Index, 3>> triangles;  // counterclockwise
  std::vector<Edge> edges;
  // Local edge j of a triangle is the one opposite local vertex j.
  std::vector<std::array<Index, 3>> triangle_edges;
  std::vector<Index> clamped_edges;    // sorted
  std::vector<Index> accel_triangles;  // sorted
  double accel_area = 0.0;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double triangle_area(std::size_t t) const;
  Point triangle_centroid(std::size_t t) const;

  /// Nodes touched by a clamped edge, sorted.
  std::vector<Index> clamped_nodes() const;

  /// Index of the first triangle containing `p` (closed triangles, small
  /// tolerance), or nullopt.
  std::optional<Index> locate(const Point& p) const;

  bool operator==(const Mesh& other) const;
};

/// Rebuilds `edges`, `triangle_edges` and `accel_area` from nodes, triangles
/// and accel_triangles. Clamped edges must be re-resolved by the caller since
/// edge numbering is recomputed.
void build_topology(Mesh& mesh);

/// Structured triangulation of [0,L]x[0,b], each grid cell split along its
/// (i,j)-(i+1,j+1) diagonal.
Mesh generate_strip_mesh(const GeometryConfig& cfg);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

}  // namespace plateid
