#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "sqc/evalmetrics.h"
#include "sqc/rng.h"

namespace sqc {

namespace {

// Static kd-tree over a point set. Queries prune on the squared splitting
// distance, so the returned minimum equals the brute-force minimum exactly.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) : pts_(points) {
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    axis_.resize(pts_.size());
    if (!pts_.empty()) build(0, int(pts_.size()));
  }

  double nearest_sq(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(q, 0, int(pts_.size()), &best);
    return best;
  }

 private:
  void build(int lo, int hi) {
    if (hi - lo <= 1) return;
    Vec3 mn = pts_[order_[size_t(lo)]], mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(pts_[order_[size_t(i)]]);
      mx = mx.cwiseMax(pts_[order_[size_t(i)]]);
    }
    int axis = 0;
    const Vec3 extent = mx - mn;
    extent.maxCoeff(&axis);
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) { return pts_[size_t(a)][axis] < pts_[size_t(b)][axis]; });
    axis_[size_t(mid)] = axis;
    build(lo, mid);
    build(mid + 1, hi);
  }

  void search(const Vec3& q, int lo, int hi, double* best) const {
    if (hi <= lo) return;
    const int mid = (lo + hi) / 2;
    const Vec3& p = pts_[order_[size_t(mid)]];
    const double d2 = (q - p).squaredNorm();
    if (d2 < *best) *best = d2;
    if (hi - lo == 1) return;
    const int axis = axis_[size_t(mid)];
    const double split = q[axis] - p[axis];
    if (split < 0.0) {
      search(q, lo, mid, best);
      if (split * split < *best) search(q, mid + 1, hi, best);
    } else {
      search(q, mid + 1, hi, best);
      if (split * split < *best) search(q, lo, mid, best);
    }
  }

  const std::vector<Vec3>& pts_;
  std::vector<int> order_;
  std::vector<int> axis_;
};

}  // namespace

std::string eval_report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["chamfer_x1e3"] = r.chamfer_x1e3;
  j["num_vertices"] = r.num_vertices;
  j["num_faces"] = r.num_faces;
  j["nc_loss_x1e3"] = r.nc_loss_x1e3;
  j["silhouette_iou"] = r.silhouette_iou;
  j["runtime_seconds"] = r.runtime_seconds;
  return j.dump(1) + "\n";
}

void mesh_bbox(const TriMesh& m, Vec3* lo, Vec3* hi) {
  if (m.vertices.empty()) throw std::runtime_error("mesh_bbox: empty mesh");
  *lo = *hi = m.vertices[0];
  for (const Vec3& v : m.vertices) {
    *lo = lo->cwiseMin(v);
    *hi = hi->cwiseMax(v);
  }
}

void normalize_by_bbox(TriMesh* m, const Vec3& lo, const Vec3& hi) {
  const Vec3 center = 0.5 * (lo + hi);
  const double extent = (hi - lo).maxCoeff();
  if (extent <= 0.0) throw std::runtime_error("normalize_by_bbox: degenerate box");
  const double s = 1.0 / extent;
  for (Vec3& v : m->vertices) v = (v - center) * s;
}

std::vector<Vec3> sample_mesh_surface(const TriMesh& m, int n, uint64_t seed) {
  std::vector<double> cum(m.faces.size());
  double total = 0.0;
  for (size_t i = 0; i < m.faces.size(); ++i) {
    const Vec3& a = m.vertices[size_t(m.faces[i][0])];
    const Vec3& b = m.vertices[size_t(m.faces[i][1])];
    const Vec3& c = m.vertices[size_t(m.faces[i][2])];
    total += 0.5 * (b - a).cross(c - a).norm();
    cum[i] = total;
  }
  if (m.faces.empty() || total <= 0.0) {
    throw std::runtime_error("sample_mesh_surface: mesh has no area");
  }

  Rng rng = Rng::stream(seed, 8, 0, 0);
  std::vector<Vec3> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01() * total;
    const size_t f = size_t(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    const size_t fi = std::min(f, m.faces.size() - 1);
    const double su = std::sqrt(rng.uniform01());
    const double v = rng.uniform01();
    const Vec3& a = m.vertices[size_t(m.faces[fi][0])];
    const Vec3& b = m.vertices[size_t(m.faces[fi][1])];
    const Vec3& c = m.vertices[size_t(m.faces[fi][2])];
    out[size_t(i)] = (1.0 - su) * a + su * (1.0 - v) * b + su * v * c;
  }
  return out;
}

std::vector<double> nearest_distances(const std::vector<Vec3>& queries,
                                      const std::vector<Vec3>& points) {
  if (points.empty()) throw std::runtime_error("nearest_distances: empty point set");
  const KdTree tree(points);
  std::vector<double> out(queries.size());
  for (size_t i = 0; i < queries.size(); ++i) out[i] = std::sqrt(tree.nearest_sq(queries[i]));
  return out;
}

double chamfer(const TriMesh& a, const TriMesh& b, int n_samples, uint64_t seed) {
  if (a.empty() || b.empty()) throw std::runtime_error("chamfer: empty mesh");
  const std::vector<Vec3> sa = sample_mesh_surface(a, n_samples, seed);
  const std::vector<Vec3> sb = sample_mesh_surface(b, n_samples, seed);
  const std::vector<double> dab = nearest_distances(sa, sb);
  const std::vector<double> dba = nearest_distances(sb, sa);
  const double mab = std::accumulate(dab.begin(), dab.end(), 0.0) / double(dab.size());
  const double mba = std::accumulate(dba.begin(), dba.end(), 0.0) / double(dba.size());
  return 1e3 * 0.5 * (mab + mba);
}

double nc_loss(const std::vector<ImageU8>& pred, const std::vector<ImageU8>& ref,
               const std::vector<ImageU8>& masks, bool* warned_empty) {
  if (pred.size() != ref.size() || pred.size() != masks.size()) {
    throw std::runtime_error("nc_loss: view count mismatch");
  }
  double sum = 0.0;
  long count = 0;
  for (size_t v = 0; v < pred.size(); ++v) {
    const ImageU8& p = pred[v];
    const ImageU8& r = ref[v];
    const ImageU8& mk = masks[v];
    if (p.width != r.width || p.height != r.height || p.width != mk.width ||
        p.height != mk.height || p.channels != 3 || r.channels != 3) {
      throw std::runtime_error("nc_loss: resolution mismatch");
    }
    for (int px = 0; px < p.width * p.height; ++px) {
      if (mk.data[size_t(px)] < 128) continue;
      double l1 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double dp = 2.0 * from_u8(p.data[size_t(px) * 3 + c]) - 1.0;
        const double dr = 2.0 * from_u8(r.data[size_t(px) * 3 + c]) - 1.0;
        l1 += std::abs(dp - dr);
      }
      sum += l1;
      ++count;
    }
  }
  if (warned_empty) *warned_empty = count == 0;
  return count == 0 ? 0.0 : 1e3 * sum / double(count);
}

double silhouette_iou(const ImageU8& pred, const ImageU8& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw std::runtime_error("silhouette_iou: resolution mismatch");
  }
  long inter = 0, uni = 0;
  for (int px = 0; px < pred.width * pred.height; ++px) {
    const bool a = pred.data[size_t(px)] >= 128;
    const bool b = gt.data[size_t(px)] >= 128;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

}  // namespace sqc
