#include "hmfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <unordered_map>

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

constexpr double kHalf = 0.5;
constexpr double kBoundaryTol = 1e-12;

bool on_face(double x) { return std::abs(std::abs(x) - kHalf) <= kBoundaryTol; }

double signed_volume(int dim, std::span<const double> coords, std::span<const Index> s) {
  auto p = [&](int k, int c) { return coords[static_cast<std::size_t>(s[k]) * dim + c]; };
  if (dim == 2) {
    const double ax = p(1, 0) - p(0, 0), ay = p(1, 1) - p(0, 1);
    const double bx = p(2, 0) - p(0, 0), by = p(2, 1) - p(0, 1);
    return 0.5 * (ax * by - ay * bx);
  }
  double a[3], b[3], c[3];
  for (int i = 0; i < 3; ++i) {
    a[i] = p(1, i) - p(0, i);
    b[i] = p(2, i) - p(0, i);
    c[i] = p(3, i) - p(0, i);
  }
  const double det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                     a[2] * (b[0] * c[1] - b[1] * c[0]);
  return det / 6.0;
}

double distance2(int dim, std::span<const double> coords, Index a, Index b) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double diff = coords[static_cast<std::size_t>(a) * dim + c] -
                        coords[static_cast<std::size_t>(b) * dim + c];
    s += diff * diff;
  }
  return s;
}

// Sort the tuple, then swap the last two entries if the orientation is negative.
void sort_and_orient(int dim, std::span<const double> coords, std::span<Index> s) {
  std::sort(s.begin(), s.end());
  if (signed_volume(dim, coords, s) < 0.0) std::swap(s[dim - 1], s[dim]);
}

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct EdgeTable {
  std::vector<std::array<Index, 2>> edges;
  std::vector<Index> midpoint;  // per simplex, per local edge: global edge id
};

// Local edge numbering: (0,1) (0,2) (1,2) for triangles and
// (0,1) (0,2) (0,3) (1,2) (1,3) (2,3) for tetrahedra.
constexpr std::array<std::array<int, 2>, 3> kTriEdges{{{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

EdgeTable collect_edges(const SimplicialMesh& mesh) {
  EdgeTable table;
  const int ne = mesh.dim() == 2 ? 3 : 6;
  std::unordered_map<std::uint64_t, Index> ids;
  ids.reserve(mesh.num_simplices() * 2);
  table.midpoint.resize(mesh.num_simplices() * ne);
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    for (int e = 0; e < ne; ++e) {
      const auto [i, j] = mesh.dim() == 2 ? kTriEdges[e] : kTetEdges[e];
      const auto key = edge_key(s[i], s[j]);
      auto [it, inserted] = ids.try_emplace(key, static_cast<Index>(table.edges.size()));
      if (inserted) table.edges.push_back({std::min(s[i], s[j]), std::max(s[i], s[j])});
      table.midpoint[t * ne + e] = it->second;
    }
  }
  return table;
}

// Children of a red refinement; `m` holds the midpoint vertex per local edge.
void red_children_2d(std::span<const Index> s, const std::array<Index, 6>& m,
                     std::vector<Index>& out) {
  const Index m01 = m[0], m02 = m[1], m12 = m[2];
  const Index children[4][3] = {
      {s[0], m01, m02}, {m01, s[1], m12}, {m02, m12, s[2]}, {m01, m12, m02}};
  for (const auto& c : children) out.insert(out.end(), c, c + 3);
}

void red_children_3d(std::span<const Index> s, const std::array<Index, 6>& m,
                     std::span<const double> coords, std::vector<Index>& out) {
  const Index m01 = m[0], m02 = m[1], m03 = m[2], m12 = m[3], m13 = m[4], m23 = m[5];
  const Index corners[4][4] = {{s[0], m01, m02, m03},
                               {m01, s[1], m12, m13},
                               {m02, m12, s[2], m23},
                               {m03, m13, m23, s[3]}};
  for (const auto& c : corners) out.insert(out.end(), c, c + 4);

  // Inner octahedron: three candidate diagonals, each with its equatorial cycle.
  struct Diagonal {
    Index p, q;
    std::array<Index, 4> cycle;
  };
  const std::array<Diagonal, 3> diagonals{{{m01, m23, {m02, m03, m13, m12}},
                                           {m02, m13, {m01, m03, m23, m12}},
                                           {m03, m12, {m01, m02, m23, m13}}}};
  std::size_t best = 0;
  double best_len = distance2(3, coords, diagonals[0].p, diagonals[0].q);
  for (std::size_t k = 1; k < diagonals.size(); ++k) {
    const double len = distance2(3, coords, diagonals[k].p, diagonals[k].q);
    const Index low = std::min(diagonals[k].p, diagonals[k].q);
    const Index best_low = std::min(diagonals[best].p, diagonals[best].q);
    if (len < best_len || (len == best_len && low < best_low)) {
      best = k;
      best_len = len;
    }
  }
  const auto& d = diagonals[best];
  for (int k = 0; k < 4; ++k) {
    const Index tet[4] = {d.p, d.q, d.cycle[k], d.cycle[(k + 1) % 4]};
    out.insert(out.end(), tet, tet + 4);
  }
}

std::array<double, 3> random_in_ball(int dim, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::array<double, 3> v{0.0, 0.0, 0.0};
  for (;;) {
    double n2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      v[c] = uniform(rng);
      n2 += v[c] * v[c];
    }
    if (n2 <= 1.0) break;
  }
  for (int c = 0; c < dim; ++c) v[c] *= radius;
  return v;
}

}  // namespace

SimplicialMesh::SimplicialMesh(int dim, std::vector<double> coordinates,
                               std::vector<Index> simplices, int level)
    : dim_(dim), level_(level), coordinates_(std::move(coordinates)),
      simplices_(std::move(simplices)) {
  if (dim_ != 2 && dim_ != 3) throw MeshError("unsupported mesh dimension " + std::to_string(dim));
  if (coordinates_.size() % static_cast<std::size_t>(dim_) != 0 ||
      simplices_.size() % static_cast<std::size_t>(dim_ + 1) != 0)
    throw MeshError("inconsistent mesh array sizes");
  const std::size_t nv = coordinates_.size() / static_cast<std::size_t>(dim_);
  boundary_.assign(nv, 0);
  for (std::size_t i = 0; i < nv; ++i)
    for (int c = 0; c < dim_; ++c)
      if (on_face(coordinates_[i * dim_ + c])) boundary_[i] = 1;
  for (Index v : simplices_)
    if (v < 0 || static_cast<std::size_t>(v) >= nv) throw MeshError("simplex index out of range");
  for (std::size_t t = 0; t < num_simplices(); ++t) h_max_ = std::max(h_max_, diameter(t));
}

double SimplicialMesh::volume(std::size_t t) const {
  return signed_volume(dim_, coordinates_, simplex(t));
}

double SimplicialMesh::diameter(std::size_t t) const {
  auto s = simplex(t);
  double d2 = 0.0;
  for (int i = 0; i <= dim_; ++i)
    for (int j = i + 1; j <= dim_; ++j) d2 = std::max(d2, distance2(dim_, coordinates_, s[i], s[j]));
  return std::sqrt(d2);
}

std::size_t SimplicialMesh::num_boundary_vertices() const {
  return static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), 1));
}

SimplicialMesh base_mesh(int dim) {
  if (dim == 2) {
    std::vector<double> x{-kHalf, -kHalf, kHalf, -kHalf, kHalf, kHalf, -kHalf, kHalf};
    std::vector<Index> s{0, 1, 2, 0, 2, 3};
    for (std::size_t t = 0; t < 2; ++t) sort_and_orient(2, x, std::span<Index>(s).subspan(t * 3, 3));
    return SimplicialMesh(2, std::move(x), std::move(s), 0);
  }
  if (dim == 3) {
    // Vertex k has coordinate bits (k&1, k&2, k&4).
    std::vector<double> x;
    for (int k = 0; k < 8; ++k)
      for (int c = 0; c < 3; ++c) x.push_back((k >> c) & 1 ? kHalf : -kHalf);
    // Kuhn decomposition: one tetrahedron per permutation of the axes, all
    // sharing the diagonal from vertex 0 to vertex 7.
    std::array<int, 3> perm{0, 1, 2};
    std::vector<Index> s;
    do {
      int v = 0;
      s.push_back(0);
      for (int c : perm) {
        v |= 1 << c;
        s.push_back(v);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t t = 0; t < 6; ++t) sort_and_orient(3, x, std::span<Index>(s).subspan(t * 4, 4));
    return SimplicialMesh(3, std::move(x), std::move(s), 0);
  }
  throw MeshError("unsupported mesh dimension " + std::to_string(dim));
}

SimplicialMesh refine_uniform(const SimplicialMesh& mesh,
                              const std::optional<PerturbSpec>& perturbation) {
  const int dim = mesh.dim();
  const std::size_t nv = mesh.num_vertices();
  const int ne = dim == 2 ? 3 : 6;
  const EdgeTable table = collect_edges(mesh);

  std::vector<double> coords = mesh.coordinates();
  coords.resize((nv + table.edges.size()) * dim);
  std::vector<std::uint8_t> new_interior(table.edges.size(), 0);
  for (std::size_t e = 0; e < table.edges.size(); ++e) {
    const auto [a, b] = table.edges[e];
    bool boundary = false;
    for (int c = 0; c < dim; ++c) {
      const double xa = coords[a * dim + c], xb = coords[b * dim + c];
      coords[(nv + e) * dim + c] = 0.5 * (xa + xb);
      if (on_face(xa) && on_face(xb) && xa == xb) boundary = true;
    }
    new_interior[e] = boundary ? 0 : 1;
  }

  std::vector<Index> children;
  children.reserve(mesh.num_simplices() * (dim == 2 ? 4 : 8) * (dim + 1));
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    std::array<Index, 6> m{};
    for (int e = 0; e < ne; ++e) m[e] = static_cast<Index>(nv) + table.midpoint[t * ne + e];
    if (dim == 2)
      red_children_2d(mesh.simplex(t), m, children);
    else
      red_children_3d(mesh.simplex(t), m, coords, children);
  }
  const std::size_t nchild = children.size() / (dim + 1);
  for (std::size_t t = 0; t < nchild; ++t)
    sort_and_orient(dim, coords, std::span<Index>(children).subspan(t * (dim + 1), dim + 1));

  if (!perturbation || perturbation->magnitude == 0.0)
    return SimplicialMesh(dim, std::move(coords), std::move(children), mesh.level() + 1);

  if (!(perturbation->magnitude >= 0.0 && perturbation->magnitude < 0.25))
    throw MeshError("perturbation magnitude must lie in [0, 0.25)");

  // New interior vertices move one at a time in edge order. A shift is
  // halved until every child around the vertex keeps at least half of its
  // unperturbed volume; after the last retry the vertex stays at the
  // midpoint, which is the configuration its neighbours were accepted in.
  constexpr int kMaxRetries = 5;
  constexpr double kMinVolumeRatio = 0.5;
  const std::size_t stride = static_cast<std::size_t>(dim + 1);
  auto child = [&](std::size_t t) { return std::span<const Index>(children).subspan(t * stride, stride); };
  std::vector<double> reference(nchild);
  for (std::size_t t = 0; t < nchild; ++t) reference[t] = signed_volume(dim, coords, child(t));
  std::vector<std::vector<std::uint32_t>> incident(table.edges.size());
  for (std::size_t t = 0; t < nchild; ++t)
    for (Index v : child(t))
      if (static_cast<std::size_t>(v) >= nv) incident[static_cast<std::size_t>(v) - nv].push_back(static_cast<std::uint32_t>(t));

  std::vector<double> moved = coords;
  std::mt19937_64 rng(perturbation->seed);
  for (std::size_t e = 0; e < table.edges.size(); ++e) {
    if (!new_interior[e]) continue;
    const auto [a, b] = table.edges[e];
    const double length = std::sqrt(distance2(dim, coords, a, b));
    const auto shift = random_in_ball(dim, perturbation->magnitude * length, rng);
    double* x = &moved[(nv + e) * dim];
    const double* x0 = &coords[(nv + e) * dim];
    double scale = 1.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxRetries && !accepted; ++attempt, scale *= 0.5) {
      for (int c = 0; c < dim; ++c) x[c] = x0[c] + scale * shift[c];
      accepted = std::all_of(incident[e].begin(), incident[e].end(), [&](std::uint32_t t) {
        return signed_volume(dim, moved, child(t)) >= kMinVolumeRatio * reference[t];
      });
    }
    if (!accepted)
      for (int c = 0; c < dim; ++c) x[c] = x0[c];
  }
  return SimplicialMesh(dim, std::move(moved), std::move(children), mesh.level() + 1);
}

SimplicialMesh build_mesh(int dim, int level, const std::optional<PerturbSpec>& perturbation) {
  if (level < 0) throw MeshError("refinement level must be nonnegative");
  SimplicialMesh mesh = base_mesh(dim);
  for (int k = 0; k < level; ++k) {
    std::optional<PerturbSpec> step;
    if (perturbation) step = PerturbSpec{perturbation->magnitude, perturbation->seed + static_cast<std::uint64_t>(k)};
    mesh = refine_uniform(mesh, step);
  }
  return mesh;
}

double mesh_size(const SimplicialMesh& mesh) { return mesh.h_max(); }

double total_volume(const SimplicialMesh& mesh) {
  double v = 0.0;
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) v += mesh.volume(t);
  return v;
}

bool is_conforming(const SimplicialMesh& mesh) {
  const int dim = mesh.dim();
  std::map<std::array<Index, 3>, int> facets;
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    for (int skip = 0; skip <= dim; ++skip) {
      std::array<Index, 3> f{-1, -1, -1};
      int k = 0;
      for (int i = 0; i <= dim; ++i)
        if (i != skip) f[k++] = s[i];
      std::sort(f.begin(), f.begin() + dim);
      ++facets[f];
    }
  }
  for (const auto& [f, count] : facets) {
    if (count > 2) return false;
    if (count == 1) {
      // A facet seen once must lie in one face of the cube.
      bool in_face = false;
      for (int c = 0; c < dim && !in_face; ++c) {
        const double x0 = mesh.vertex(f[0])[c];
        bool all = on_face(x0);
        for (int i = 1; i < dim && all; ++i) all = mesh.vertex(f[i])[c] == x0;
        in_face = all;
      }
      if (!in_face) return false;
    }
  }
  return true;
}

void write_mesh(std::ostream& out, const SimplicialMesh& mesh) {
  const auto old_precision = out.precision(17);
  out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_simplices() << ' '
      << mesh.level() << '\n';
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    auto x = mesh.vertex(i);
    for (int c = 0; c < mesh.dim(); ++c) out << (c ? " " : "") << x[c];
    out << '\n';
  }
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    for (int i = 0; i <= mesh.dim(); ++i) out << (i ? " " : "") << s[i];
    out << '\n';
  }
  out.precision(old_precision);
}

SimplicialMesh read_mesh(std::istream& in) {
  int dim = 0, level = 0;
  std::size_t nv = 0, ns = 0;
  if (!(in >> dim >> nv >> ns >> level)) throw IoError("malformed mesh header");
  if (dim != 2 && dim != 3) throw MeshError("unsupported mesh dimension " + std::to_string(dim));
  std::vector<double> x(nv * dim);
  for (auto& v : x)
    if (!(in >> v)) throw IoError("truncated vertex block");
  std::vector<Index> s(ns * (dim + 1));
  for (auto& v : s)
    if (!(in >> v)) throw IoError("truncated simplex block");
  return SimplicialMesh(dim, std::move(x), std::move(s), level);
}

}  // namespace hmfem
