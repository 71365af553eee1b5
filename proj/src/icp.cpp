#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "omniloc/error.hpp"
#include "omniloc/lidar_ba.hpp"

namespace omniloc {
namespace {

// Static 3-d tree over a borrowed point array.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points) : points_(points), index_(points.size()) {
    std::iota(index_.begin(), index_.end(), 0);
    build(0, index_.size(), 0);
  }

  // Nearest neighbour within sqrt(max_d2); returns -1 if none.
  int nearest(const Vec3& q, double max_d2) const {
    best_ = -1;
    best_d2_ = max_d2;
    search(0, index_.size(), 0, q);
    return best_;
  }

 private:
  void build(size_t lo, size_t hi, int axis) {
    if (hi - lo <= 1) return;
    const size_t mid = (lo + hi) / 2;
    std::nth_element(index_.begin() + lo, index_.begin() + mid, index_.begin() + hi,
                     [&](int a, int b) { return points_[a](axis) < points_[b](axis); });
    build(lo, mid, (axis + 1) % 3);
    build(mid + 1, hi, (axis + 1) % 3);
  }

  void search(size_t lo, size_t hi, int axis, const Vec3& q) const {
    if (lo >= hi) return;
    const size_t mid = (lo + hi) / 2;
    const int i = index_[mid];
    const double d2 = (points_[i] - q).squaredNorm();
    if (d2 <= best_d2_ && (best_ < 0 || d2 < best_d2_ || i < best_)) {
      best_ = i;
      best_d2_ = d2;
    }
    const double diff = q(axis) - points_[i](axis);
    const int next = (axis + 1) % 3;
    if (diff < 0.0) {
      search(lo, mid, next, q);
      if (diff * diff <= best_d2_) search(mid + 1, hi, next, q);
    } else {
      search(mid + 1, hi, next, q);
      if (diff * diff <= best_d2_) search(lo, mid, next, q);
    }
  }

  std::span<const Vec3> points_;
  std::vector<int> index_;
  mutable int best_ = -1;
  mutable double best_d2_ = 0.0;
};

}  // namespace

IcpResult icp_align(std::span<const Vec3> source, std::span<const Vec3> target,
                    const RigidTransform& init, const IcpOptions& opts) {
  if (source.size() < 3 || target.size() < 3) {
    throw Error(ErrorCode::kInsufficientData, "ICP needs at least 3 points per cloud");
  }
  const KdTree tree(target);
  const double max_d2 = opts.max_correspondence_distance * opts.max_correspondence_distance;
  IcpResult out;
  out.transform = init;
  RigidTransform current = init;
  double last_rms = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    std::vector<int> src_idx, tgt_idx;
    double sum2 = 0.0;
    for (size_t i = 0; i < source.size(); ++i) {
      const Vec3 p = current * source[i];
      const int j = tree.nearest(p, max_d2);
      if (j < 0) continue;
      src_idx.push_back(static_cast<int>(i));
      tgt_idx.push_back(j);
      sum2 += (target[j] - p).squaredNorm();
    }
    const int pairs = static_cast<int>(src_idx.size());
    if (pairs < 3) {
      if (iter == 0) {
        out.success = false;
        out.pairs = pairs;
        return out;
      }
      break;
    }
    const double rms = std::sqrt(sum2 / pairs);
    // The pairing of the current estimate is no better than the last one.
    if (rms > last_rms) break;
    out.transform = current;
    out.rms = rms;
    out.pairs = pairs;
    out.rms_trace.push_back(rms);
    out.iterations = iter + 1;
    out.success = true;
    if (last_rms - rms <= opts.tolerance * std::max(1.0, last_rms) && iter > 0) break;
    last_rms = rms;

    Eigen::Matrix3Xd src(3, pairs), dst(3, pairs);
    for (int k = 0; k < pairs; ++k) {
      src.col(k) = source[src_idx[k]];
      dst.col(k) = target[tgt_idx[k]];
    }
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    current = {t.topLeftCorner<3, 3>(), t.topRightCorner<3, 1>()};
  }
  return out;
}

}  // namespace omniloc
