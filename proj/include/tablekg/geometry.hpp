#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <vector>

#include "tablekg/errors.hpp"

namespace tkg {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct BoundingBox {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double diag_sq() const { return width() * width() + height() * height(); }
};

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Closed planar polygon, stored counter-clockwise. Degenerate (zero-area)
// inputs are allowed; they keep their vertex order.
class Polygon {
 public:
  explicit Polygon(std::vector<Point> vertices) : verts_(std::move(vertices)) {
    if (verts_.size() < 3) throw Error("polygon needs at least 3 vertices");
    for (const Point& p : verts_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw Error("polygon vertex is not finite");
    }
    if (signed_area() < 0.0) std::reverse(verts_.begin(), verts_.end());
  }
  Polygon(std::initializer_list<Point> vertices)
      : Polygon(std::vector<Point>(vertices)) {}

  const std::vector<Point>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }
  friend bool operator==(const Polygon&, const Polygon&) = default;

  double signed_area() const {
    double s = 0.0;
    for (std::size_t i = 0, j = verts_.size() - 1; i < verts_.size(); j = i++) {
      s += verts_[j].x * verts_[i].y - verts_[i].x * verts_[j].y;
    }
    return s / 2.0;
  }

  BoundingBox bbox() const {
    BoundingBox b{verts_[0].x, verts_[0].y, verts_[0].x, verts_[0].y};
    for (const Point& p : verts_) {
      b.min_x = std::min(b.min_x, p.x);
      b.min_y = std::min(b.min_y, p.y);
      b.max_x = std::max(b.max_x, p.x);
      b.max_y = std::max(b.max_y, p.y);
    }
    return b;
  }

  // Cross-product sign test; epsilon relative to the bounding-box diagonal squared.
  bool is_convex() const {
    const double eps = 1e-9 * bbox().diag_sq();
    bool has_pos = false, has_neg = false;
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double c = cross(verts_[i], verts_[(i + 1) % n], verts_[(i + 2) % n]);
      if (c > eps) has_pos = true;
      if (c < -eps) has_neg = true;
    }
    return !(has_pos && has_neg);
  }

  Point centroid() const {
    Point c{0, 0};
    for (const Point& p : verts_) {
      c.x += p.x;
      c.y += p.y;
    }
    c.x /= static_cast<double>(verts_.size());
    c.y /= static_cast<double>(verts_.size());
    return c;
  }

 private:
  std::vector<Point> verts_;
};

inline double polygon_area(const Polygon& p) { return std::abs(p.signed_area()); }

namespace detail {

// Area of an arbitrary vertex ring (may be degenerate or self-touching).
inline double ring_area(const std::vector<Point>& v) {
  if (v.size() < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    s += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return std::abs(s) / 2.0;
}

inline Point edge_intersection(const Point& a, const Point& b, const Point& p,
                               const Point& q) {
  // Intersection of line a-b with segment p-q, assuming they are not parallel.
  const double d1 = cross(a, b, p);
  const double d2 = cross(a, b, q);
  const double t = d1 / (d1 - d2);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

}  // namespace detail

// Sutherland-Hodgman: clips `subject` (any simple polygon) against the convex
// polygon `clip` and returns the intersection area.
inline double intersection_area(const Polygon& subject, const Polygon& clip) {
  if (!clip.is_convex()) throw NonConvexClip("clip polygon is not convex");

  const auto& cv = clip.vertices();
  const double eps = 1e-12 * std::max(1.0, clip.bbox().diag_sq());

  std::vector<Point> output = subject.vertices();
  const std::size_t m = cv.size();
  for (std::size_t e = 0, f = m - 1; e < m && !output.empty(); f = e++) {
    const Point& ca = cv[f];
    const Point& cb = cv[e];
    if (ca == cb) continue;  // clip is CCW: inside of edge ca->cb is the left side
    std::vector<Point> input;
    input.swap(output);
    const std::size_t n = input.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& prev = input[j];
      const Point& cur = input[i];
      const bool prev_in = cross(ca, cb, prev) >= -eps;
      const bool cur_in = cross(ca, cb, cur) >= -eps;
      if (cur_in) {
        if (!prev_in) output.push_back(detail::edge_intersection(ca, cb, prev, cur));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(detail::edge_intersection(ca, cb, prev, cur));
      }
    }
  }
  const double inter = detail::ring_area(output);
  return std::min(inter, std::min(polygon_area(subject), polygon_area(clip)));
}

inline double iou(const Polygon& a, const Polygon& b) {
  const double inter = intersection_area(a, b);
  const double uni = polygon_area(a) + polygon_area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Fraction of the line polygon covered by the cell polygon.
inline double overlap_ratio(const Polygon& line, const Polygon& cell) {
  const double la = polygon_area(line);
  if (la <= 0.0) throw ZeroAreaLine("text line polygon has zero area");
  return std::clamp(intersection_area(line, cell) / la, 0.0, 1.0);
}

inline Polygon make_rect(double x0, double y0, double x1, double y1) {
  return Polygon{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace tkg
