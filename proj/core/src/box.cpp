#include "slr/box.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace slr {

NormSpec NormSpec::scaled(double s) const {
  NormSpec out = *this;
  for (double& w : out.weights) w *= s;
  return out;
}

double weighted_norm(const NormSpec& norm, std::span<const double> v) {
  if (norm.weights.size() != v.size())
    throw std::invalid_argument("weighted_norm: weight/vector size mismatch");
  double acc = 0.0;
  if (norm.kind == NormSpec::Kind::WeightedOne) {
    for (size_t i = 0; i < v.size(); ++i) acc += norm.weights[i] * std::fabs(v[i]);
  } else {
    for (size_t i = 0; i < v.size(); ++i)
      acc = std::max(acc, norm.weights[i] * std::fabs(v[i]));
  }
  return acc;
}

std::vector<double> Box::width() const {
  std::vector<double> w(lo.size());
  for (size_t i = 0; i < lo.size(); ++i) w[i] = hi[i] - lo[i];
  return w;
}

bool Box::contains(std::span<const double> x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

double Box::volume(const std::vector<uint8_t>& count_coord) const {
  double v = 1.0;
  for (size_t i = 0; i < lo.size(); ++i)
    if (count_coord[i]) v *= std::max(0.0, hi[i] - lo[i]);
  return v;
}

std::vector<double> center(const Box& box) {
  std::vector<double> m(box.lo.size());
  for (size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (box.lo[i] + box.hi[i]);
  return m;
}

OmegaBox make_omega(const Box& box, const NormSpec& effective_norm,
                    double value_at_center) {
  OmegaBox omega;
  omega.value_at_center = value_at_center;
  omega.radius = 0.5 * weighted_norm(effective_norm, box.width());
  return omega;
}

int BoxPartition::active_count() const {
  int n = 0;
  for (const auto& e : entries) n += e.active ? 1 : 0;
  return n;
}

Box shrink(const Box& box, double lambda) {
  if (!(lambda > 0.0) || lambda > 0.5)
    throw std::invalid_argument("shrink: lambda must lie in (0, 1/2]");
  Box out;
  const int d = box.dim();
  out.lo.resize(d);
  out.hi.resize(d);
  for (int i = 0; i < d; ++i) {
    out.lo[i] = (1.0 - lambda) * box.lo[i] + lambda * box.hi[i];
    out.hi[i] = lambda * box.lo[i] + (1.0 - lambda) * box.hi[i];
    if (out.hi[i] < out.lo[i]) out.lo[i] = out.hi[i] = 0.5 * (out.lo[i] + out.hi[i]);
  }
  return out;
}

std::vector<Box> split(const Box& box, std::span<const double> x) {
  const int d = box.dim();
  std::vector<int> cut;
  for (int i = 0; i < d; ++i)
    if (box.lo[i] < x[i] && x[i] < box.hi[i]) cut.push_back(i);

  std::vector<Box> children;
  if (cut.empty()) return children;

  const size_t count = size_t{1} << cut.size();
  children.reserve(count);
  for (size_t mask = 0; mask < count; ++mask) {
    Box child = box;
    for (size_t k = 0; k < cut.size(); ++k) {
      const int c = cut[k];
      if (mask & (size_t{1} << k))
        child.lo[c] = x[c];
      else
        child.hi[c] = x[c];
    }
    children.push_back(std::move(child));
  }
  return children;
}

int locate(const BoxPartition& partition, std::span<const double> x,
           double tol) {
  for (size_t j = 0; j < partition.entries.size(); ++j) {
    const auto& e = partition.entries[j];
    if (e.active && e.box.contains(x, tol)) return static_cast<int>(j);
  }
  return -1;
}

bool verify_cover(const BoxPartition& partition, std::string* why) {
  const Box& root = partition.root;
  const int d = root.dim();
  std::vector<uint8_t> live(d);
  for (int i = 0; i < d; ++i) live[i] = root.hi[i] > root.lo[i] ? 1 : 0;

  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };

  double total = 0.0;
  for (const auto& e : partition.entries) {
    if (e.box.dim() != d) return fail("entry dimension mismatch");
    for (int i = 0; i < d; ++i) {
      if (e.box.lo[i] < root.lo[i] - 1e-12 * std::max(1.0, std::fabs(root.lo[i])) ||
          e.box.hi[i] > root.hi[i] + 1e-12 * std::max(1.0, std::fabs(root.hi[i])))
        return fail("entry escapes the root box");
    }
    total += e.box.volume(live);
  }
  const double root_vol = root.volume(live);
  if (std::fabs(total - root_vol) > 1e-12 * std::max(1.0, root_vol)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "volume mismatch: sum %.17g vs root %.17g",
                  total, root_vol);
    return fail(buf);
  }

  for (size_t aidx = 0; aidx < partition.entries.size(); ++aidx) {
    for (size_t bidx = aidx + 1; bidx < partition.entries.size(); ++bidx) {
      const Box& a = partition.entries[aidx].box;
      const Box& b = partition.entries[bidx].box;
      bool interior_overlap = true;
      for (int i = 0; i < d && interior_overlap; ++i) {
        if (!live[i]) continue;
        const double width = root.hi[i] - root.lo[i];
        const double gap =
            std::min(a.hi[i], b.hi[i]) - std::max(a.lo[i], b.lo[i]);
        if (gap <= 1e-12 * width) interior_overlap = false;
      }
      if (interior_overlap) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "entries %zu and %zu overlap", aidx,
                      bidx);
        return fail(buf);
      }
    }
  }
  return true;
}

}  // namespace slr
