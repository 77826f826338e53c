#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>

#include "sqc/meshops.h"

namespace sqc {

namespace {

constexpr double kPlaneEps = 1e-9;  // coplanarity tolerance of every split
constexpr double kWeldTol = 1e-9;

// Convex polygon carrying its (fixed) supporting plane: n.dot(x) = w. Pieces
// of a split keep the parent plane so repeated cuts cannot drift.
struct Poly {
  std::vector<Vec3> v;
  Vec3 n = Vec3::UnitZ();
  double w = 0.0;
  int tag = -1;

  void flip() {
    std::reverse(v.begin(), v.end());
    n = -n;
    w = -w;
  }
};

enum : int { kCoplanar = 0, kFront = 1, kBack = 2, kSpanning = 3 };

void split_polygon(const Vec3& n, double w, const Poly& p, std::vector<Poly>* co_front,
                   std::vector<Poly>* co_back, std::vector<Poly>* front,
                   std::vector<Poly>* back) {
  int mask = 0;
  std::vector<int> types(p.v.size());
  for (size_t i = 0; i < p.v.size(); ++i) {
    const double d = n.dot(p.v[i]) - w;
    types[i] = d < -kPlaneEps ? kBack : (d > kPlaneEps ? kFront : kCoplanar);
    mask |= types[i];
  }
  switch (mask) {
    case kCoplanar:
      (n.dot(p.n) > 0 ? co_front : co_back)->push_back(p);
      return;
    case kFront:
      front->push_back(p);
      return;
    case kBack:
      back->push_back(p);
      return;
  }
  Poly f, b;
  f.n = b.n = p.n;
  f.w = b.w = p.w;
  f.tag = b.tag = p.tag;
  for (size_t i = 0; i < p.v.size(); ++i) {
    const size_t j = (i + 1) % p.v.size();
    const int ti = types[i], tj = types[j];
    const Vec3& vi = p.v[i];
    if (ti != kBack) f.v.push_back(vi);
    if (ti != kFront) b.v.push_back(vi);
    if ((ti | tj) == kSpanning) {
      const Vec3& vj = p.v[j];
      const double t = (w - n.dot(vi)) / n.dot(vj - vi);
      const Vec3 x = vi + t * (vj - vi);
      f.v.push_back(x);
      b.v.push_back(x);
    }
  }
  if (f.v.size() >= 3) front->push_back(std::move(f));
  if (b.v.size() >= 3) back->push_back(std::move(b));
}

int classify_mask(const Vec3& n, double w, const Poly& p) {
  int mask = 0;
  for (const Vec3& v : p.v) {
    const double d = n.dot(v) - w;
    mask |= d < -kPlaneEps ? kBack : (d > kPlaneEps ? kFront : kCoplanar);
  }
  return mask;
}

// Splitter choice drives tree depth: the naive first-polygon pick degenerates
// into an O(F)-deep chain on convex shells, which costs quadratic time and
// memory. Score a few evenly spaced candidates for balance and low spanning.
size_t pick_splitter(const std::vector<Poly>& list) {
  const size_t n_cand = std::min<size_t>(list.size(), 16);
  const size_t n_score = std::min<size_t>(list.size(), 256);
  double best = 0.0;
  size_t best_i = 0;
  for (size_t c = 0; c < n_cand; ++c) {
    const size_t i = c * list.size() / n_cand;
    int nf = 0, nb = 0, ns = 0;
    for (size_t s = 0; s < n_score; ++s) {
      const int m = classify_mask(list[i].n, list[i].w, list[s * list.size() / n_score]);
      if (m == kSpanning) {
        ++ns;
      } else if (m == kFront) {
        ++nf;
      } else if (m == kBack) {
        ++nb;
      }
    }
    const double score = std::abs(nf - nb) + 4.0 * ns;
    if (c == 0 || score < best) {
      best = score;
      best_i = i;
    }
  }
  return best_i;
}

struct Node {
  bool has_plane = false;
  Vec3 n;
  double w = 0.0;
  std::unique_ptr<Node> front, back;
  std::vector<Poly> polys;

  void build(std::vector<Poly> list) {
    if (list.empty()) return;
    if (!has_plane) {
      const size_t i = pick_splitter(list);
      n = list[i].n;
      w = list[i].w;
      has_plane = true;
    }
    std::vector<Poly> f, b;
    for (Poly& p : list) split_polygon(n, w, p, &polys, &polys, &f, &b);
    if (!f.empty()) {
      if (!front) front = std::make_unique<Node>();
      front->build(std::move(f));
    }
    if (!b.empty()) {
      if (!back) back = std::make_unique<Node>();
      back->build(std::move(b));
    }
  }

  // Drops every part of `list` strictly inside this solid.
  std::vector<Poly> clip_polygons(std::vector<Poly> list) const {
    if (!has_plane) return list;
    std::vector<Poly> f, b;
    for (Poly& p : list) split_polygon(n, w, p, &f, &b, &f, &b);
    if (front) f = front->clip_polygons(std::move(f));
    if (back) {
      std::vector<Poly> kept = back->clip_polygons(std::move(b));
      f.insert(f.end(), kept.begin(), kept.end());
    }
    return f;
  }

  void clip_to(const Node& other) {
    polys = other.clip_polygons(std::move(polys));
    if (front) front->clip_to(other);
    if (back) back->clip_to(other);
  }

  void invert() {
    for (Poly& p : polys) p.flip();
    if (has_plane) {
      n = -n;
      w = -w;
    }
    if (front) front->invert();
    if (back) back->invert();
    std::swap(front, back);
  }

  void all_polygons(std::vector<Poly>* out) const {
    out->insert(out->end(), polys.begin(), polys.end());
    if (front) front->all_polygons(out);
    if (back) back->all_polygons(out);
  }
};

std::vector<Poly> to_polys(const TriMesh& m) {
  std::vector<Poly> out;
  out.reserve(m.faces.size());
  for (size_t i = 0; i < m.faces.size(); ++i) {
    Poly p;
    p.v = {m.vertices[size_t(m.faces[i][0])], m.vertices[size_t(m.faces[i][1])],
           m.vertices[size_t(m.faces[i][2])]};
    const Vec3 c = (p.v[1] - p.v[0]).cross(p.v[2] - p.v[0]);
    const double len = c.norm();
    if (len < 1e-14) continue;
    p.n = c / len;
    p.w = p.n.dot(p.v[0]);
    p.tag = m.face_prim.empty() ? -1 : m.face_prim[i];
    out.push_back(std::move(p));
  }
  return out;
}

// Vertex welding through a uniform hash grid (cells of kWeldTol; neighbors
// searched so near-boundary duplicates still merge).
struct Welder {
  std::unordered_map<uint64_t, std::vector<int>> cells;
  std::vector<Vec3>* verts;

  explicit Welder(std::vector<Vec3>* v) : verts(v) {}

  static uint64_t key(int64_t x, int64_t y, int64_t z) {
    uint64_t h = uint64_t(x) * 0x9e3779b97f4a7c15ULL;
    h ^= uint64_t(y) * 0xc2b2ae3d27d4eb4fULL + (h << 6);
    h ^= uint64_t(z) * 0x165667b19e3779f9ULL + (h >> 3);
    return h;
  }

  int canonical(const Vec3& p) {
    const int64_t cx = int64_t(std::floor(p.x() / kWeldTol));
    const int64_t cy = int64_t(std::floor(p.y() / kWeldTol));
    const int64_t cz = int64_t(std::floor(p.z() / kWeldTol));
    for (int64_t dx = -1; dx <= 1; ++dx) {
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells.find(key(cx + dx, cy + dy, cz + dz));
          if (it == cells.end()) continue;
          for (int idx : it->second) {
            if (((*verts)[size_t(idx)] - p).norm() <= kWeldTol) return idx;
          }
        }
      }
    }
    verts->push_back(p);
    const int idx = int(verts->size()) - 1;
    cells[key(cx, cy, cz)].push_back(idx);
    return idx;
  }
};

TriMesh from_polys(const std::vector<Poly>& polys) {
  TriMesh m;
  Welder weld(&m.vertices);
  for (const Poly& p : polys) {
    std::vector<int> idx(p.v.size());
    for (size_t i = 0; i < p.v.size(); ++i) idx[i] = weld.canonical(p.v[i]);
    for (size_t i = 1; i + 1 < idx.size(); ++i) {
      if (idx[0] == idx[i] || idx[i] == idx[i + 1] || idx[i + 1] == idx[0]) continue;
      m.faces.push_back({idx[0], idx[i], idx[i + 1]});
      m.face_prim.push_back(p.tag);
    }
  }
  return m;
}

double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

// BSP splits leave T-junctions where one side of a shared boundary was
// subdivided and the other was not. Insert every vertex lying on a foreign
// edge, re-triangulating the face (fan from the untouched corner, or from
// the centroid when several edges are subdivided), until a fixed point.
void repair_cracks(TriMesh* m) {
  size_t prev_open = SIZE_MAX;
  for (int pass = 0; pass < 8; ++pass) {
    // Only unmatched edges can host T-junction cracks; matched (count 2) edges
    // are already manifold and subdividing them just churns slivers.
    std::unordered_map<uint64_t, int> edge_count;
    edge_count.reserve(m->faces.size() * 3);
    const auto ekey = [](int a, int b) {
      return (uint64_t(uint32_t(std::min(a, b))) << 32) | uint64_t(uint32_t(std::max(a, b)));
    };
    for (const auto& f : m->faces) {
      for (int e = 0; e < 3; ++e) ++edge_count[ekey(f[e], f[(e + 1) % 3])];
    }
    size_t n_open = 0;
    for (const auto& [k, c] : edge_count) n_open += (c == 2) ? 0 : 1;
    if (n_open == 0 || n_open >= prev_open) return;
    prev_open = n_open;

    // Spatial grid over vertices for segment queries.
    double max_edge = 0.0;
    for (const auto& f : m->faces) {
      for (int e = 0; e < 3; ++e) {
        max_edge = std::max(
            max_edge, (m->vertices[size_t(f[e])] - m->vertices[size_t(f[(e + 1) % 3])]).norm());
      }
    }
    const double cell = std::max(1e-6, max_edge);
    std::unordered_map<uint64_t, std::vector<int>> grid;
    const auto cell_key = [&](const Vec3& p) {
      return Welder::key(int64_t(std::floor(p.x() / cell)), int64_t(std::floor(p.y() / cell)),
                         int64_t(std::floor(p.z() / cell)));
    };
    for (int i = 0; i < int(m->vertices.size()); ++i) {
      grid[cell_key(m->vertices[size_t(i)])].push_back(i);
    }
    const auto near_segment = [&](const Vec3& a, const Vec3& b, int ia, int ib,
                                  std::vector<std::pair<double, int>>* hits) {
      const Vec3 lo = a.cwiseMin(b).array() - 2.0 * kWeldTol;
      const Vec3 hi = a.cwiseMax(b).array() + 2.0 * kWeldTol;
      const Vec3 d = b - a;
      const double len2 = d.squaredNorm();
      for (int64_t gx = int64_t(std::floor(lo.x() / cell)); gx <= int64_t(std::floor(hi.x() / cell)); ++gx) {
        for (int64_t gy = int64_t(std::floor(lo.y() / cell)); gy <= int64_t(std::floor(hi.y() / cell)); ++gy) {
          for (int64_t gz = int64_t(std::floor(lo.z() / cell)); gz <= int64_t(std::floor(hi.z() / cell)); ++gz) {
            const auto it = grid.find(Welder::key(gx, gy, gz));
            if (it == grid.end()) continue;
            for (int vi : it->second) {
              if (vi == ia || vi == ib) continue;
              const Vec3& p = m->vertices[size_t(vi)];
              const double t = (p - a).dot(d) / len2;
              if (t <= 0.0 || t >= 1.0) continue;
              if ((p - (a + t * d)).norm() > kWeldTol) continue;
              if ((p - a).norm() <= kWeldTol || (p - b).norm() <= kWeldTol) continue;
              hits->emplace_back(t, vi);
            }
          }
        }
      }
      std::sort(hits->begin(), hits->end());
    };

    std::vector<std::array<int, 3>> faces;
    std::vector<int> tags;
    const auto emit = [&](int a, int b, int c, int tag) {
      if (a == b || b == c || c == a) return;
      if (tri_area(m->vertices[size_t(a)], m->vertices[size_t(b)], m->vertices[size_t(c)]) <
          1e-14) {
        return;
      }
      faces.push_back({a, b, c});
      tags.push_back(tag);
    };

    for (size_t fi = 0; fi < m->faces.size(); ++fi) {
      const auto f = m->faces[fi];
      const int tag = m->face_prim.empty() ? -1 : m->face_prim[fi];
      std::vector<std::pair<double, int>> on[3];
      int subdivided = 0;
      for (int e = 0; e < 3; ++e) {
        if (edge_count[ekey(f[e], f[(e + 1) % 3])] != 2) {
          near_segment(m->vertices[size_t(f[e])], m->vertices[size_t(f[(e + 1) % 3])], f[e],
                       f[(e + 1) % 3], &on[e]);
        }
        subdivided += on[e].empty() ? 0 : 1;
      }
      if (subdivided == 0) {
        emit(f[0], f[1], f[2], tag);
        continue;
      }
      std::vector<int> loop;
      for (int e = 0; e < 3; ++e) {
        loop.push_back(f[e]);
        for (const auto& [t, vi] : on[e]) loop.push_back(vi);
      }
      if (subdivided == 1) {
        // Fan from the corner opposite the one subdivided edge.
        const int e = !on[0].empty() ? 0 : (!on[1].empty() ? 1 : 2);
        const int apex = f[(e + 2) % 3];
        std::vector<int> path;
        path.push_back(f[e]);
        for (const auto& [t, vi] : on[e]) path.push_back(vi);
        path.push_back(f[(e + 1) % 3]);
        for (size_t i = 0; i + 1 < path.size(); ++i) emit(apex, path[i], path[i + 1], tag);
      } else {
        const Vec3 c = (m->vertices[size_t(f[0])] + m->vertices[size_t(f[1])] +
                        m->vertices[size_t(f[2])]) /
                       3.0;
        m->vertices.push_back(c);
        const int ci = int(m->vertices.size()) - 1;
        grid[cell_key(c)].push_back(ci);
        for (size_t i = 0; i < loop.size(); ++i) {
          emit(ci, loop[i], loop[(i + 1) % loop.size()], tag);
        }
      }
    }
    m->faces = std::move(faces);
    m->face_prim = std::move(tags);
  }
}

TriMesh run_difference(const TriMesh& a, const TriMesh& b) {
  Node na, nb;
  na.build(to_polys(a));
  nb.build(to_polys(b));

  na.invert();
  na.clip_to(nb);
  nb.clip_to(na);
  nb.invert();
  nb.clip_to(na);
  nb.invert();
  std::vector<Poly> bp;
  nb.all_polygons(&bp);
  na.build(std::move(bp));
  na.invert();

  std::vector<Poly> out;
  na.all_polygons(&out);
  TriMesh result = from_polys(out);
  repair_cracks(&result);
  return result;
}

bool aabb_overlap(const TriMesh& a, const TriMesh& b) {
  if (a.vertices.empty() || b.vertices.empty()) return false;
  Vec3 alo = a.vertices[0], ahi = a.vertices[0];
  for (const Vec3& v : a.vertices) {
    alo = alo.cwiseMin(v);
    ahi = ahi.cwiseMax(v);
  }
  Vec3 blo = b.vertices[0], bhi = b.vertices[0];
  for (const Vec3& v : b.vertices) {
    blo = blo.cwiseMin(v);
    bhi = bhi.cwiseMax(v);
  }
  for (int i = 0; i < 3; ++i) {
    if (ahi[i] < blo[i] || bhi[i] < alo[i]) return false;
  }
  return true;
}

}  // namespace

TriMesh boolean_difference(const TriMesh& a, const TriMesh& b) {
  if (!mesh_metrics(a).watertight || !mesh_metrics(b).watertight) {
    throw std::runtime_error("boolean_difference: input mesh is not watertight");
  }
  if (!aabb_overlap(a, b)) return a;

  TriMesh result = run_difference(a, b);
  if (mesh_metrics(result).watertight) return result;

  // Degenerate alignments (shared planes, grazing edges) can defeat the
  // epsilon classification. Retry with b nudged by well under the weld
  // tolerance of any downstream consumer.
  TriMesh jittered = b;
  uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (Vec3& v : jittered.vertices) {
    for (int i = 0; i < 3; ++i) {
      h ^= h >> 12;
      h ^= h << 25;
      h ^= h >> 27;
      v[i] += 1e-7 * (double(h * 0x2545f4914f6cdd1dULL >> 11) * 0x1.0p-53 - 0.5);
    }
  }
  result = run_difference(a, jittered);
  if (mesh_metrics(result).watertight) return result;
  throw std::runtime_error("boolean_difference: unresolved intersection (open edges remain)");
}

}  // namespace sqc
