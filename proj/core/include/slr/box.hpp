#ifndef SLR_BOX_HPP
#define SLR_BOX_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slr {

// Norm used to turn a box diameter into a function-value range.  Weights
// must be strictly positive and match the box dimension.
struct NormSpec {
  enum class Kind { WeightedOne, ScaledMax };

  Kind kind = Kind::WeightedOne;
  std::vector<double> weights;

  // Same norm with every weight multiplied by s.
  NormSpec scaled(double s) const;
};

// ||v|| under the given spec: sum_i w_i |v_i| or max_i w_i |v_i|.
double weighted_norm(const NormSpec& norm, std::span<const double> v);

// Axis-aligned closed box  [lo_1, hi_1] x ... x [lo_d, hi_d].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  std::vector<double> width() const;
  bool contains(std::span<const double> x, double tol = 0.0) const;
  // A coordinate is degenerate when lo == hi.
  bool degenerate(int coord) const { return lo[coord] >= hi[coord]; }
  double volume(const std::vector<uint8_t>& count_coord) const;
};

std::vector<double> center(const Box& box);

// Input box plus the value interval the bound-from-above construction
// attaches to it: every graph point (x, f(x)) with x in the box satisfies
// |f(x) - value_at_center| <= radius.
struct OmegaBox {
  double value_at_center = 0.0;
  double radius = 0.0;

  double y_lower() const { return value_at_center - radius; }
  double y_upper() const { return value_at_center + radius; }
};

// radius = ||hi - lo|| / 2 in the effective (Lipschitz-scaled) norm.
OmegaBox make_omega(const Box& box, const NormSpec& effective_norm,
                    double value_at_center);

// One member of a partition.  Inactive entries keep the covering property
// auditable but take no further part in relaxations or splitting.
struct PartitionEntry {
  Box box;
  NormSpec norm;  // effective per-box norm, Lipschitz constant folded in
  OmegaBox omega;
  bool active = true;
};

// Finite list of boxes whose union is the fixed root box and whose
// interiors are pairwise disjoint.
struct BoxPartition {
  Box root;
  std::vector<PartitionEntry> entries;

  int active_count() const;
};

// Box shrunk toward its center by factor lambda in (0, 1/2]:
// [(1-l)lo + l hi, l lo + (1-l)hi].  lambda == 1/2 collapses to the center.
Box shrink(const Box& box, double lambda);

// Splits through an interior point: one child per sign pattern over the
// coordinates where lo_c < x_c < hi_c holds strictly.  Degenerate and
// boundary coordinates are inherited unchanged.  Returns an empty vector
// when no coordinate qualifies (the no-progress case).
std::vector<Box> split(const Box& box, std::span<const double> x);

// Lowest index of an active entry whose closed box contains x (within
// tol per coordinate); -1 when none does.
int locate(const BoxPartition& partition, std::span<const double> x,
           double tol = 0.0);

// Volume identity and pairwise interior disjointness over all entries,
// active or not, with relative tolerance 1e-12.  Degenerate root
// coordinates are excluded from the volume product.
bool verify_cover(const BoxPartition& partition, std::string* why = nullptr);

}  // namespace slr

#endif
