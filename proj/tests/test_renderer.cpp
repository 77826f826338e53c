#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sqc/geometry.h"
#include "sqc/renderer.h"

using namespace sqc;

namespace {

DualPrimitive sphere_primitive(double radius, const Vec3& center, double theta) {
  DualPrimitive s;
  s.psq.scale = Vec3(radius, radius, radius);
  s.psq.shape = Vec2(1.0, 1.0);
  s.psq.translation = center;
  // NSQ shrunk and pushed outside the PSQ so only the base shape remains.
  s.nsq.scale = Vec3(0.02, 0.02, 0.02);
  s.nsq.shape = Vec2(1.0, 1.0);
  s.nsq.translation = center + Vec3(0.9, 0.9, 0.9);
  s.alpha = 1.0;
  s.theta = theta;
  s.basic_color = Vec3(0.8, 0.3, 0.2);
  return s;
}

// Distance from the origin-centered sphere test: does the pixel-center ray
// hit the sphere of the given radius?
bool analytic_hit(const Camera& cam, int col, int row, const Vec3& center, double radius) {
  Vec3 o, v;
  cam.pixel_ray(col, row, &o, &v);
  const Vec3 oc = o - center;
  const double b = oc.dot(v);
  return b * b - (oc.squaredNorm() - radius * radius) > 0.0;
}

}  // namespace

TEST_CASE("pixel rays: optical axis, unit norm, pixel-center offsets") {
  Camera cam;
  cam.width = cam.height = 65;
  cam.fx = cam.fy = 80.0;
  cam.cx = cam.cy = 32.5;
  cam.R = Mat3::Identity();
  cam.t = -Vec3(0, 0, 3);  // camera at (0,0,3) looking down -z

  Vec3 o, v;
  cam.pixel_ray(32, 32, &o, &v);  // center pixel: (32+0.5-32.5) = 0 offset
  CHECK(o == Vec3(0, 0, 3));
  CHECK(v == Vec3(0, 0, -1));

  cam.pixel_ray(0, 0, &o, &v);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.x() < 0.0);  // left of center
  CHECK(v.y() > 0.0);  // rows grow downward, top row looks up

  cam.pixel_ray(64, 64, &o, &v);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.x() > 0.0);
  CHECK(v.y() < 0.0);
}

TEST_CASE("look_at builds an orthonormal frame with the eye as center") {
  const Vec3 eye(0.4, -2.0, 2.5);
  const Camera cam = Camera::look_at(eye, Vec3::Zero(), Vec3(0, 1, 0), 64, 64, 40.0);
  CHECK((cam.R * cam.R.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK((cam.center() - eye).norm() < 1e-12);

  // The camera-space forward axis (-z) maps to the eye->target direction.
  const Vec3 fwd_world = cam.R.transpose() * Vec3(0, 0, -1);
  CHECK((fwd_world - (-eye).normalized()).norm() < 1e-12);

  // Focal length from the field of view.
  CHECK(cam.fx == doctest::Approx(32.0 / std::tan(deg2rad(20.0))).epsilon(1e-12));
}

TEST_CASE("scene box intersection: slab oracle") {
  double t0 = 0.0, t1 = 0.0;
  CHECK(intersect_scene_box(Vec3(0, 0, 3), Vec3(0, 0, -1), kSceneBound, &t0, &t1));
  CHECK(t0 == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(t1 == doctest::Approx(4.1).epsilon(1e-12));

  // Miss: parallel to a slab and outside it.
  CHECK_FALSE(intersect_scene_box(Vec3(2.0, 0, 3), Vec3(0, 0, -1), kSceneBound, &t0, &t1));
  // Miss: pointing away from the box.
  CHECK_FALSE(intersect_scene_box(Vec3(0, 0, 3), Vec3(0, 0, 1), kSceneBound, &t0, &t1));
  // Origin inside: near clip at 0.
  CHECK(intersect_scene_box(Vec3(0.5, 0, 0), Vec3(0, 0, -1), kSceneBound, &t0, &t1));
  CHECK(t0 == 0.0);
  CHECK(t1 == doctest::Approx(1.1).epsilon(1e-12));
}

TEST_CASE("ray samples: stratified, ascending, spacing rules") {
  Camera cam;
  cam.width = cam.height = 65;
  cam.fx = cam.fy = 80.0;
  cam.cx = cam.cy = 32.5;
  cam.t = -Vec3(0, 0, 3);

  const RaySamples mid = make_ray_samples(cam, 32, 32, 4, nullptr);
  REQUIRE(mid.t.size() == 4);
  const double span = (4.1 - 1.9) / 4.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(mid.t[i] == doctest::Approx(1.9 + (i + 0.5) * span).epsilon(1e-12));
    CHECK(mid.delta[i] == doctest::Approx(span).epsilon(1e-12));
  }

  Rng rng = Rng::stream(1, 2, 3, 4);
  const RaySamples jit = make_ray_samples(cam, 32, 32, 16, &rng);
  REQUIRE(jit.t.size() == 16);
  const double jspan = (4.1 - 1.9) / 16.0;
  for (int i = 0; i < 16; ++i) {
    CHECK(jit.t[i] >= 1.9 + i * jspan);
    CHECK(jit.t[i] <= 1.9 + (i + 1) * jspan);
    if (i > 0) CHECK(jit.t[i] > jit.t[i - 1]);
    if (i + 1 < 16) CHECK(jit.delta[i] == doctest::Approx(jit.t[i + 1] - jit.t[i]));
  }
  CHECK(jit.delta[15] == jit.delta[14]);

  // Ray that misses the box renders background: no samples.
  Camera side = cam;
  side.t = -Vec3(5, 0, 3);
  const RaySamples none = make_ray_samples(side, 32, 32, 4, nullptr);
  CHECK(none.t.empty());
}

TEST_CASE("section density: sign and scale of the resolved form") {
  const double theta = 0.05, delta = 0.01;
  // Far outside on both boundaries: no density.
  CHECK(density_from_pair(50.0 * theta, 50.0 * theta, theta, delta) == 0.0);
  // Entering crossing (f decreasing): positive, softplus(1)-softplus(-1) = 1.
  CHECK(density_from_pair(theta, -theta, theta, delta) ==
        doctest::Approx(1.0 / delta).epsilon(1e-12));
  // Exiting crossing (f increasing): clamped to zero.
  CHECK(density_from_pair(-theta, theta, theta, delta) == 0.0);
}

TEST_CASE("marching a ray through a sphere: density on the entering half only") {
  const double theta = 0.005;
  const DualPrimitive s = sphere_primitive(0.5, Vec3::Zero(), theta);
  const Vec3 o(0, 0, 3), v(0, 0, -1);
  const double delta = 0.01;
  const Vec3 dp = 0.5 * delta * v;

  // Along this axial ray f(t) = 2*|3-t| - 1: entry at t=2.5, minimum at 3.0.
  for (double t = 1.5; t < 4.5; t += delta) {
    const double sig = primitive_density(s, o + t * v, dp, 0.05);
    CHECK(sig >= 0.0);
    if (t < 2.4) CHECK(sig < 1e-9);          // approaching, still far outside
    if (t > 3.0 + delta) CHECK(sig == 0.0);  // f increasing: exit clamp
    if (t > 2.6 && t < 2.9) {
      // Plateau across the descent: |df/dt| / theta once the boundary
      // softplus terms have linearized (corrections ~ exp(-|f|/theta)).
      CHECK(sig == doctest::Approx(2.0 / theta).epsilon(1e-9));
    }
  }
  // The ramp up to the plateau is centered on the crossing: half height
  // one step before entry, full height one step after.
  const auto sig_at = [&](double t) { return primitive_density(s, o + t * v, dp, 0.05); };
  CHECK(sig_at(2.5 - delta) < 0.75 * (2.0 / theta));
  CHECK(sig_at(2.5 + delta) > 0.90 * (2.0 / theta));
}

TEST_CASE("hot-path density matches the reference evaluation") {
  const DualPrimitive s = [] {
    DualPrimitive d;
    d.psq.scale = Vec3(0.5, 0.35, 0.42);
    d.psq.shape = Vec2(0.6, 1.3);
    d.psq.rotation = Vec3(0.3, -0.7, 1.1);
    d.nsq.scale = Vec3(0.3, 0.3, 0.55);
    d.nsq.shape = Vec2(1.0, 0.4);
    d.nsq.translation = Vec3(0.1, 0.05, 0.0);
    d.theta = 0.07;
    return d;
  }();
  const double mu = 0.05;
  const PrimitiveFrame pf = make_primitive_frame(s, mu);
  const Vec3 o(0.2, -0.1, 3.0);
  const Vec3 v = Vec3(-0.05, 0.02, -1.0).normalized();

  PrimRayCtx ctx;
  REQUIRE(make_prim_ray_ctx(pf, o, v, 0.0, 10.0, &ctx));
  const double delta = 0.02;
  int compared = 0;
  for (double t = 1.8; t < 4.2; t += delta) {
    if (t - delta / 2 < ctx.ta || t + delta / 2 > ctx.tb) continue;
    const double fn = merged_f_at(pf, ctx, t - delta / 2);
    const double ff = merged_f_at(pf, ctx, t + delta / 2);
    const double hot = density_from_pair(fn, ff, pf.theta_c, delta);
    const double ref = primitive_density(s, o + t * v, 0.5 * delta * v, mu);
    CHECK(hot == doctest::Approx(ref).epsilon(1e-9).scale(1e-6));
    ++compared;
  }
  CHECK(compared > 50);
}

TEST_CASE("point density: aggregation and blend weights") {
  const DualPrimitive s = sphere_primitive(0.5, Vec3::Zero(), 0.05);
  const Vec3 p(0, 0, 0.45), dp(0, 0, -0.005);

  auto one = s;
  one.alpha = 1.0;
  std::vector<double> w;
  const double sig1 = point_density({one}, p, dp, 0.05, &w);
  CHECK(sig1 > 0.0);
  CHECK(w == std::vector<double>{1.0});

  auto half = s;
  half.alpha = 0.5;
  const double sig2 = point_density({half, half}, p, dp, 0.05, &w);
  CHECK(sig2 == sig1);  // 0.5 s + 0.5 s is exact
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.5);

  // Random triple: weights sum to 1 wherever density is present.
  Rng rng = Rng::stream(23, 1, 0, 0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<DualPrimitive> prims;
    for (int k = 0; k < 3; ++k) {
      DualPrimitive d = sphere_primitive(rng.uniform(0.2, 0.6),
                                         Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                              rng.uniform(-0.3, 0.3)),
                                         0.1);
      d.alpha = rng.uniform(0.1, 1.0);
      prims.push_back(d);
    }
    const Vec3 q(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    const double sig = point_density(prims, q, dp, 0.05, &w);
    if (sig > 1e-12) {
      CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-12));
    } else {
      CHECK(w == std::vector<double>(3, 0.0));
    }
  }
}

TEST_CASE("point color: blend of basic colors plus shared residual") {
  DualPrimitive a = sphere_primitive(0.5, Vec3::Zero(), 0.05);
  a.basic_color = Vec3(1, 0, 0);
  DualPrimitive b = a;
  b.basic_color = Vec3(0, 0, 1);

  CHECK(point_color({a}, {1.0}, Vec3::Zero(), nullptr) == Vec3(1, 0, 0));
  const Vec3 blend = point_color({a, b}, {0.5, 0.5}, Vec3::Zero(), nullptr);
  CHECK(blend == Vec3(0.5, 0, 0.5));
  // All weights zero: background.
  CHECK(point_color({a, b}, {0.0, 0.0}, Vec3::Zero(), nullptr) == Vec3::Zero());

  Rng rng = Rng::stream(29, 1, 0, 0);
  const LightingNet net = LightingNet::xavier(rng);
  const Vec3 lit = point_color({a}, {1.0}, Vec3(0, 0, 0), &net);
  CHECK((lit - Vec3(1, 0, 0)).cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("compositing: hand-unrolled accumulation") {
  const std::vector<double> t = {1.0, 2.0};
  const std::vector<double> delta = {1.0, 1.0};
  const std::vector<Vec3> color = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const std::vector<Vec3> normal = {Vec3(0, 0, 1), Vec3(0, 0, 1)};

  // Empty space.
  CompositeOut empty = composite(t, delta, {0.0, 0.0}, color, normal);
  CHECK(empty.rgb == Vec3::Zero());
  CHECK(empty.mask == 0.0);

  // Opaque first sample swallows the ray.
  CompositeOut opaque = composite(t, delta, {50.0, 3.0}, color, normal);
  CHECK((opaque.rgb - color[0]).norm() < 1e-6);
  CHECK(opaque.mask == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(opaque.depth == doctest::Approx(1.0).epsilon(1e-6));

  // alpha = (1/2, 1/2): weights 1/2 and 1/4.
  const double sig_half = std::log(2.0);  // 1 - exp(-sig*delta) = 0.5
  CompositeOut two = composite(t, delta, {sig_half, sig_half}, color, normal);
  CHECK(two.mask == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(two.rgb.x() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.rgb.y() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two.normal.z() == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(two.depth == doctest::Approx((0.5 * 1.0 + 0.25 * 2.0) / 0.75).epsilon(1e-12));
}

TEST_CASE("render: empty scene produces an empty mask") {
  const Camera cam = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 16, 16, 40.0);
  RenderOptions opt;
  opt.n_samples = 8;
  const RenderBuffers buf = render_image({}, nullptr, cam, opt);
  for (double m : buf.mask) CHECK(m == 0.0);
  for (const Vec3& c : buf.rgb) CHECK(c == Vec3::Zero());
}

TEST_CASE("render: sphere silhouette matches the analytic one (IoU > 0.99)") {
  const double radius = 0.5;
  const DualPrimitive s = sphere_primitive(radius, Vec3::Zero(), 1e-3);
  const Camera cam =
      Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 128, 128, 40.0);
  RenderOptions opt;
  opt.n_samples = 128;
  opt.normals = false;

  const RenderBuffers buf = render_image({s}, nullptr, cam, opt);
  long long inter = 0, uni = 0;
  for (int row = 0; row < 128; ++row) {
    for (int col = 0; col < 128; ++col) {
      const bool pred = buf.mask[buf.idx(col, row)] > 0.5;
      const bool gt = analytic_hit(cam, col, row, Vec3::Zero(), radius);
      inter += pred && gt;
      uni += pred || gt;
    }
  }
  REQUIRE(uni > 1000);  // the sphere must actually be in frame
  CHECK(double(inter) / double(uni) > 0.99);

  // Masks stay inside [0,1] and the sphere pixels saturate.
  double peak = 0.0;
  for (double m : buf.mask) {
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
    peak = std::max(peak, m);
  }
  CHECK(peak > 0.999);
}

TEST_CASE("render: mask area is rotation-invariant about the primitive center") {
  const DualPrimitive s = sphere_primitive(0.45, Vec3::Zero(), 0.01);
  RenderOptions opt;
  opt.n_samples = 64;
  opt.normals = false;

  auto area = [&](const Vec3& eye) {
    const Camera cam = Camera::look_at(eye, Vec3::Zero(), Vec3(0, 1, 0), 128, 128, 40.0);
    const RenderBuffers buf = render_image({s}, nullptr, cam, opt);
    long long n = 0;
    for (double m : buf.mask) n += m > 0.5;
    return n;
  };
  const long long a0 = area(Vec3(0, 0, 3));
  const long long a1 = area(Vec3(3.0 * std::sin(1.1), 0, 3.0 * std::cos(1.1)));
  CHECK(std::abs(double(a0) - double(a1)) / double(a0) < 0.01);
}

TEST_CASE("render: doubling the sample count barely changes the mask") {
  const DualPrimitive s = sphere_primitive(0.45, Vec3(0.1, -0.05, 0.0), 0.01);
  const Camera cam = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 96, 96, 40.0);
  RenderOptions opt;
  opt.normals = false;
  opt.n_samples = 128;
  const RenderBuffers lo = render_image({s}, nullptr, cam, opt);
  opt.n_samples = 256;
  const RenderBuffers hi = render_image({s}, nullptr, cam, opt);
  double diff = 0.0;
  for (size_t i = 0; i < lo.mask.size(); ++i) diff += std::abs(lo.mask[i] - hi.mask[i]);
  CHECK(diff / double(lo.mask.size()) < 0.01);
}

TEST_CASE("render: an occluded primitive does not change the image") {
  DualPrimitive front = sphere_primitive(0.4, Vec3(0, 0, 0.5), 1e-3);
  front.basic_color = Vec3(0.9, 0.1, 0.1);
  DualPrimitive back = sphere_primitive(0.25, Vec3(0, 0, -0.6), 1e-3);
  back.basic_color = Vec3(0.1, 0.9, 0.1);

  const Camera cam = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 64, 64, 30.0);
  RenderOptions opt;
  opt.n_samples = 128;
  opt.normals = false;

  const RenderBuffers solo = render_image({front}, nullptr, cam, opt);
  const RenderBuffers both = render_image({front, back}, nullptr, cam, opt);
  // Center rays hit the front sphere first with accumulated alpha ~= 1.
  const int c = solo.idx(32, 32);
  CHECK(solo.mask[c] > 1.0 - 1e-4);
  CHECK((solo.rgb[c] - both.rgb[c]).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("render: a fully ejected eraser leaves the base shape untouched") {
  DualPrimitive carved = sphere_primitive(0.5, Vec3::Zero(), 0.01);
  carved.nsq.scale = Vec3(0.02, 0.02, 0.02);
  carved.nsq.translation = Vec3(0.95, 0.95, 0.95);

  // Same PSQ with a very different (but equally ejected) eraser: neither NSQ
  // may influence the image, so the renders must agree.
  DualPrimitive base = carved;
  base.nsq.scale = Vec3(0.08, 0.03, 0.05);
  base.nsq.shape = Vec2(0.3, 1.7);
  base.nsq.translation = Vec3(-0.95, 0.9, -0.92);
  base.nsq.rotation = Vec3(0.5, 0.25, -1.0);

  const Camera cam = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 64, 64, 40.0);
  RenderOptions opt;
  opt.n_samples = 96;
  opt.normals = false;
  const RenderBuffers a = render_image({carved}, nullptr, cam, opt);
  const RenderBuffers b = render_image({base}, nullptr, cam, opt);
  for (size_t i = 0; i < a.mask.size(); ++i) {
    CHECK(std::abs(a.mask[i] - b.mask[i]) < 1e-3);
    CHECK((a.rgb[i] - b.rgb[i]).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("render: per-primitive view weights track visibility") {
  DualPrimitive visible = sphere_primitive(0.4, Vec3(0, 0, 0.4), 1e-3);
  DualPrimitive hidden = sphere_primitive(0.2, Vec3(0, 0, -0.5), 1e-3);

  const Camera cam = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 48, 48, 20.0);
  RenderOptions opt;
  opt.n_samples = 96;
  opt.normals = false;
  const RenderBuffers buf = render_image({visible, hidden}, nullptr, cam, opt);
  REQUIRE(buf.prim_max_weight.size() == 2);
  CHECK(buf.prim_max_weight[0] > 0.9);
  // The small sphere is entirely behind the big one in this view, so its
  // rendering weight vanishes even though its local blend share is 1.
  CHECK(buf.prim_max_weight[1] < 1e-3);
}
