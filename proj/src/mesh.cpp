#include "plateid/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace plateid {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

bool on_clamped_side(const Point& p, const GeometryConfig& cfg) {
  constexpr double tol = 1e-12;
  switch (cfg.clamped_side) {
    case ClampedSide::right:
      return std::abs(p.x() - cfg.length) <= tol * cfg.length;
    case ClampedSide::left:
      return std::abs(p.x()) <= tol * cfg.length;
    case ClampedSide::bottom:
      return std::abs(p.y()) <= tol * cfg.width;
    case ClampedSide::top:
      return std::abs(p.y() - cfg.width) <= tol * cfg.width;
  }
  return false;
}

}  // namespace

std::string to_string(ClampedSide side) {
  switch (side) {
    case ClampedSide::right: return "right";
    case ClampedSide::left: return "left";
    case ClampedSide::bottom: return "bottom";
    case ClampedSide::top: return "top";
  }
  return "right";
}

ClampedSide clamped_side_from_string(const std::string& name) {
  if (name == "right") return ClampedSide::right;
  if (name == "left") return ClampedSide::left;
  if (name == "bottom") return ClampedSide::bottom;
  if (name == "top") return ClampedSide::top;
  throw MeshError("unknown clamped side '" + name + "'");
}

void GeometryConfig::validate() const {
  if (!(length > 0.0) || !(width > 0.0) || !(thickness > 0.0))
    throw MeshError("length, width and thickness must be positive");
  if (nx <= 0 || ny <= 0) throw MeshError("subdivision counts nx, ny must be positive");
  auto inside = [&](const Point& p) {
    return p.x() >= 0.0 && p.x() <= length && p.y() >= 0.0 && p.y() <= width;
  };
  if (!inside(test_point)) throw MeshError("test point lies outside the plate");
  if (accel_mass < 0.0) throw MeshError("accelerometer mass must be nonnegative");
  if (has_accelerometer()) {
    if (!(accel_radius > 0.0)) throw MeshError("accelerometer radius must be positive");
    const auto& c = accel_center;
    if (c.x() - accel_radius < 0.0 || c.x() + accel_radius > length ||
        c.y() - accel_radius < 0.0 || c.y() + accel_radius > width)
      throw MeshError("accelerometer footprint does not fit inside the plate");
  }
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

Point Mesh::triangle_centroid(std::size_t t) const {
  const auto& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

std::vector<Index> Mesh::clamped_nodes() const {
  std::vector<Index> out;
  for (Index e : clamped_edges) {
    out.push_back(edges[e].nodes[0]);
    out.push_back(edges[e].nodes[1]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<Index> Mesh::locate(const Point& p) const {
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    const Point& a = nodes[tri[0]];
    const Point& b = nodes[tri[1]];
    const Point& c = nodes[tri[2]];
    const double area = signed_area(a, b, c);
    const double tol = -1e-12 * area;
    if (signed_area(p, b, c) >= tol && signed_area(a, p, c) >= tol && signed_area(a, b, p) >= tol)
      return static_cast<Index>(t);
  }
  return std::nullopt;
}

bool Mesh::operator==(const Mesh& other) const {
  return nodes == other.nodes && triangles == other.triangles &&
         clamped_edges == other.clamped_edges && accel_triangles == other.accel_triangles &&
         triangle_edges == other.triangle_edges && accel_area == other.accel_area;
}

void build_topology(Mesh& mesh) {
  mesh.edges.clear();
  mesh.triangle_edges.assign(mesh.triangles.size(), {});
  std::map<std::pair<Index, Index>, Index> lookup;
  std::vector<int> use_count;
  std::vector<Index> first_owner;

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (!(mesh.triangle_area(t) > 0.0))
      throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
    for (int j = 0; j < 3; ++j) {
      Index a = tri[(j + 1) % 3];
      Index b = tri[(j + 2) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = lookup.try_emplace({a, b}, static_cast<Index>(mesh.edges.size()));
      if (inserted) {
        Edge edge;
        edge.nodes = {a, b};
        edge.midpoint = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
        mesh.edges.push_back(edge);
        use_count.push_back(0);
        first_owner.push_back(static_cast<Index>(t));
      }
      ++use_count[it->second];
      mesh.triangle_edges[t][j] = it->second;
    }
  }

  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    if (use_count[e] > 2) throw MeshError("edge " + std::to_string(e) + " shared by more than 2 triangles");
    Edge& edge = mesh.edges[e];
    const Point tangent = mesh.nodes[edge.nodes[1]] - mesh.nodes[edge.nodes[0]];
    Point normal(tangent.y(), -tangent.x());
    normal.normalize();
    edge.boundary = use_count[e] == 1;
    if (edge.boundary) {
      const Point outward = edge.midpoint - mesh.triangle_centroid(first_owner[e]);
      if (normal.dot(outward) < 0.0) normal = -normal;
    }
    edge.normal = normal;
  }

  mesh.accel_area = 0.0;
  for (Index t : mesh.accel_triangles) mesh.accel_area += mesh.triangle_area(t);
}

Mesh generate_strip_mesh(const GeometryConfig& cfg) {
  cfg.validate();
  Mesh mesh;
  const int nx = cfg.nx;
  const int ny = cfg.ny;
  auto node_id = [nx](int i, int j) { return static_cast<Index>(j * (nx + 1) + i); };

  mesh.nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      // Boundary coordinates are set exactly so side tests are robust.
      const double x = i == nx ? cfg.length : cfg.length * i / nx;
      const double y = j == ny ? cfg.width : cfg.width * j / ny;
      mesh.nodes.emplace_back(x, y);
    }

  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Index n00 = node_id(i, j), n10 = node_id(i + 1, j);
      const Index n01 = node_id(i, j + 1), n11 = node_id(i + 1, j + 1);
      mesh.triangles.push_back({n00, n10, n11});
      mesh.triangles.push_back({n00, n11, n01});
    }

  if (cfg.has_accelerometer()) {
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
      if ((mesh.triangle_centroid(t) - cfg.accel_center).norm() <= cfg.accel_radius)
        mesh.accel_triangles.push_back(static_cast<Index>(t));
    if (mesh.accel_triangles.empty())
      throw MeshError("accelerometer footprint contains no triangle centroid; refine the mesh");
  }

  build_topology(mesh);

  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const Edge& edge = mesh.edges[e];
    if (edge.boundary && on_clamped_side(mesh.nodes[edge.nodes[0]], cfg) &&
        on_clamped_side(mesh.nodes[edge.nodes[1]], cfg))
      mesh.clamped_edges.push_back(static_cast<Index>(e));
  }
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "# plateid mesh\n";
  out << "nodes " << mesh.nodes.size() << "\n";
  for (const auto& p : mesh.nodes) out << p.x() << ' ' << p.y() << '\n';
  out << "triangles " << mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "# clamped edges as node pairs\n";
  out << "clamped_edges " << mesh.clamped_edges.size() << "\n";
  for (Index e : mesh.clamped_edges) out << mesh.edges[e].nodes[0] << ' ' << mesh.edges[e].nodes[1] << '\n';
  out << "accel_triangles " << mesh.accel_triangles.size() << "\n";
  for (Index t : mesh.accel_triangles) out << t << '\n';
  if (!out) throw MeshError("failed writing '" + path.string() + "'");
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open '" + path.string() + "'");

  Mesh mesh;
  std::vector<std::pair<Index, Index>> clamped_pairs;
  std::string line;
  int line_no = 0;
  std::string section;
  long remaining = 0;

  auto fail = [&](const std::string& what) {
    throw MeshError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;

    if (remaining == 0) {
      if (first != "nodes" && first != "triangles" && first != "clamped_edges" && first != "accel_triangles")
        fail("expected section header, got '" + first + "'");
      section = first;
      if (!(ls >> remaining) || remaining < 0) fail("missing record count for section '" + section + "'");
      continue;
    }

    ls.clear();
    ls.str(line);
    std::string extra;
    if (section == "nodes") {
      double x, y;
      if (!(ls >> x >> y) || (ls >> extra)) fail("malformed node record");
      mesh.nodes.emplace_back(x, y);
    } else if (section == "triangles") {
      long a, b, c;
      if (!(ls >> a >> b >> c) || (ls >> extra)) fail("malformed triangle record");
      const long n = static_cast<long>(mesh.nodes.size());
      if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n) fail("triangle references node out of range");
      mesh.triangles.push_back({static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)});
    } else if (section == "clamped_edges") {
      long a, b;
      if (!(ls >> a >> b) || (ls >> extra)) fail("malformed clamped edge record");
      clamped_pairs.emplace_back(static_cast<Index>(std::min(a, b)), static_cast<Index>(std::max(a, b)));
    } else {
      long t;
      if (!(ls >> t) || (ls >> extra)) fail("malformed accelerometer triangle record");
      if (t < 0 || t >= static_cast<long>(mesh.triangles.size())) fail("accelerometer triangle out of range");
      mesh.accel_triangles.push_back(static_cast<Index>(t));
    }
    --remaining;
  }
  if (remaining != 0) fail("unexpected end of file in section '" + section + "'");

  try {
    build_topology(mesh);
  } catch (const MeshError& e) {
    throw MeshError(path.string() + ": " + e.what());
  }
  std::sort(mesh.accel_triangles.begin(), mesh.accel_triangles.end());

  std::map<std::pair<Index, Index>, Index> lookup;
  for (std::size_t e = 0; e < mesh.edges.size(); ++e)
    lookup[{mesh.edges[e].nodes[0], mesh.edges[e].nodes[1]}] = static_cast<Index>(e);
  for (const auto& pair : clamped_pairs) {
    auto it = lookup.find(pair);
    if (it == lookup.end() || !mesh.edges[it->second].boundary)
      throw MeshError(path.string() + ": clamped edge (" + std::to_string(pair.first) + "," +
                      std::to_string(pair.second) + ") is not a boundary edge");
    mesh.clamped_edges.push_back(it->second);
  }
  std::sort(mesh.clamped_edges.begin(), mesh.clamped_edges.end());
  return mesh;
}

}  // namespace plateid
