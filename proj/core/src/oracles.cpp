#include "slr/oracles.hpp"

#include <cmath>
#include <mutex>

#include "json.hpp"
#include "slr/bilevel.hpp"
#include "slr/errors.hpp"
#include "slr/gas.hpp"

namespace slr {

using nlohmann::json;

namespace {

class PolynomialOracle : public Oracle {
 public:
  PolynomialOracle(std::vector<double> coeffs,
                   std::vector<std::vector<int>> powers)
      : coeffs_(std::move(coeffs)), powers_(std::move(powers)) {
    if (coeffs_.size() != powers_.size())
      throw OracleError("polynomial: one power vector per coefficient");
    arity_ = powers_.empty() ? 0 : static_cast<int>(powers_.front().size());
    for (const auto& p : powers_)
      if (static_cast<int>(p.size()) != arity_)
        throw OracleError("polynomial: inconsistent power vector lengths");
  }

  double eval(std::span<const double> x) const override {
    double acc = 0.0;
    for (size_t t = 0; t < coeffs_.size(); ++t) {
      double term = coeffs_[t];
      for (int i = 0; i < arity_; ++i) {
        for (int k = 0; k < powers_[t][i]; ++k) term *= x[i];
      }
      acc += term;
    }
    return acc;
  }

  int arity() const override { return arity_; }
  std::string registry_name() const override { return "polynomial"; }

  std::string params_json() const override {
    json terms = json::array();
    for (size_t t = 0; t < coeffs_.size(); ++t)
      terms.push_back({{"coeff", coeffs_[t]}, {"powers", powers_[t]}});
    return json{{"terms", terms}}.dump();
  }

 private:
  std::vector<double> coeffs_;
  std::vector<std::vector<int>> powers_;
  int arity_ = 0;
};

class SumOfSinesOracle : public Oracle {
 public:
  explicit SumOfSinesOracle(std::vector<SineTerm> terms)
      : terms_(std::move(terms)) {
    if (terms_.empty()) throw OracleError("sum-of-sines: needs at least one term");
    arity_ = static_cast<int>(terms_.front().frequency.size());
    for (const auto& t : terms_)
      if (static_cast<int>(t.frequency.size()) != arity_)
        throw OracleError("sum-of-sines: inconsistent frequency lengths");
  }

  double eval(std::span<const double> x) const override {
    double acc = 0.0;
    for (const auto& t : terms_) {
      double arg = t.phase;
      for (int i = 0; i < arity_; ++i) arg += t.frequency[i] * x[i];
      acc += t.amplitude * std::sin(arg);
    }
    return acc;
  }

  int arity() const override { return arity_; }
  std::string registry_name() const override { return "sum-of-sines"; }

  std::string params_json() const override {
    json terms = json::array();
    for (const auto& t : terms_)
      terms.push_back({{"amp", t.amplitude},
                       {"freq", t.frequency},
                       {"phase", t.phase}});
    return json{{"terms", terms}}.dump();
  }

 private:
  std::vector<SineTerm> terms_;
  int arity_ = 0;
};

std::shared_ptr<const Oracle> polynomial_from_json(const std::string& text) {
  const json p = json::parse(text);
  std::vector<double> coeffs;
  std::vector<std::vector<int>> powers;
  for (const auto& term : p.at("terms")) {
    coeffs.push_back(term.at("coeff").get<double>());
    powers.push_back(term.at("powers").get<std::vector<int>>());
  }
  return make_polynomial_oracle(coeffs, powers);
}

std::shared_ptr<const Oracle> sines_from_json(const std::string& text) {
  const json p = json::parse(text);
  std::vector<SineTerm> terms;
  for (const auto& t : p.at("terms")) {
    SineTerm term;
    term.amplitude = t.at("amp").get<double>();
    term.frequency = t.at("freq").get<std::vector<double>>();
    term.phase = t.at("phase").get<double>();
    terms.push_back(std::move(term));
  }
  return make_sum_of_sines_oracle(terms);
}

}  // namespace

std::shared_ptr<const Oracle> make_polynomial_oracle(
    const std::vector<double>& coeffs,
    const std::vector<std::vector<int>>& powers) {
  return std::make_shared<PolynomialOracle>(coeffs, powers);
}

std::shared_ptr<const Oracle> make_sum_of_sines_oracle(
    const std::vector<SineTerm>& terms) {
  return std::make_shared<SumOfSinesOracle>(terms);
}

OracleRegistry& OracleRegistry::global() {
  static OracleRegistry* registry = [] {
    auto* r = new OracleRegistry();
    r->register_factory("polynomial", polynomial_from_json);
    r->register_factory("sum-of-sines", sines_from_json);
    gas::register_gas_oracles(*r);
    bilevel::register_bilevel_oracles(*r);
    return r;
  }();
  return *registry;
}

void OracleRegistry::register_factory(const std::string& name,
                                      OracleFactory factory) {
  factories_[name] = std::move(factory);
}

bool OracleRegistry::contains(const std::string& name) const {
  return factories_.count(name) > 0;
}

std::shared_ptr<const Oracle> OracleRegistry::create(
    const std::string& name, const std::string& params_json) const {
  auto it = factories_.find(name);
  if (it == factories_.end())
    throw OracleError("unknown oracle family: " + name);
  return it->second(params_json);
}

std::vector<std::string> OracleRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : factories_) out.push_back(name);
  return out;
}

}  // namespace slr
