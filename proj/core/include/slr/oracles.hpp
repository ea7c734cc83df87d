#ifndef SLR_ORACLES_HPP
#define SLR_ORACLES_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace slr {

// A black-box multivariate function evaluated pointwise.  Implementations
// must be deterministic: the same input always yields the same value.
class Oracle {
 public:
  virtual ~Oracle() = default;

  // Evaluates at x; the caller guarantees x.size() == arity().
  virtual double eval(std::span<const double> x) const = 0;

  virtual int arity() const = 0;

  // True when eval() may be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }

  // Registry key this oracle was built from, e.g. "polynomial".
  virtual std::string registry_name() const = 0;

  // Construction parameters as a serialized JSON object, suitable for
  // feeding back through the registry to rebuild an equivalent oracle.
  virtual std::string params_json() const = 0;
};

using OracleFactory =
    std::function<std::shared_ptr<const Oracle>(const std::string& params_json)>;

// Name -> factory table.  The process-wide instance comes pre-loaded with
// the built-in families (polynomial, sum-of-sines, gas-pipe, bilevel-phi,
// bilevel-quadratic).
class OracleRegistry {
 public:
  static OracleRegistry& global();

  void register_factory(const std::string& name, OracleFactory factory);
  bool contains(const std::string& name) const;
  std::shared_ptr<const Oracle> create(const std::string& name,
                                       const std::string& params_json) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, OracleFactory> factories_;
};

// Sum of coefficient * product of integer powers of the inputs.
std::shared_ptr<const Oracle> make_polynomial_oracle(
    const std::vector<double>& coeffs,
    const std::vector<std::vector<int>>& powers);

// Sum of amp * sin(dot(freq, x) + phase) terms.
struct SineTerm {
  double amplitude = 1.0;
  std::vector<double> frequency;
  double phase = 0.0;
};
std::shared_ptr<const Oracle> make_sum_of_sines_oracle(
    const std::vector<SineTerm>& terms);

}  // namespace slr

#endif
