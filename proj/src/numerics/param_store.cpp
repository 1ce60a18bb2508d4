#include "gunl/numerics/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "gunl/errors.hpp"

namespace gunl {

void ParamStore::add(const std::string& name, Dense value) {
  if (contains(name)) throw ContractError("ParamStore: duplicate parameter '" + name + "'");
  Slot slot;
  slot.m = Dense(value.rows(), value.cols());
  slot.v = Dense(value.rows(), value.cols());
  slot.value = std::move(value);
  slots_.emplace(name, std::move(slot));
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(slots_.size());
  for (const auto& [name, _] : slots_) out.push_back(name);
  return out;
}

ParamStore::Slot& ParamStore::slot(const std::string& name) {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw ContractError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const ParamStore::Slot& ParamStore::slot(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw ContractError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

Dense& ParamStore::value(const std::string& name) { return slot(name).value; }
const Dense& ParamStore::value(const std::string& name) const { return slot(name).value; }

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const auto& [_, slot] : slots_) s += dense::sum_squares(slot.value);
  return s;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, slot] : slots_) n += slot.value.size();
  return n;
}

bool ParamStore::all_finite() const {
  return std::all_of(slots_.begin(), slots_.end(),
                     [](const auto& kv) { return kv.second.value.all_finite(); });
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (slots_.size() != other.slots_.size()) return false;
  auto a = slots_.begin();
  auto b = other.slots_.begin();
  for (; a != slots_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

double ParamStore::max_abs_delta(const ParamStore& other) const {
  if (slots_.size() != other.slots_.size()) throw ShapeError("max_abs_delta: parameter sets differ");
  double m = 0.0;
  for (const auto& [name, slot] : slots_) {
    m = std::max(m, dense::max_abs_diff(slot.value, other.value(name)));
  }
  return m;
}

void adamw_step(ParamStore& params, const GradMap& grads, const AdamWOptions& opts) {
  for (const auto& name : params.names()) {
    auto git = grads.find(name);
    if (git == grads.end()) throw ContractError("adamw_step: no gradient for '" + name + "'");
    auto& slot = params.slot(name);
    const Dense& g = git->second;
    if (!g.same_shape(slot.value)) throw ShapeError("adamw_step: gradient shape for '" + name + "'");

    slot.step += 1;
    const double t = static_cast<double>(slot.step);
    const double bc1 = 1.0 - std::pow(opts.beta1, t);
    const double bc2 = 1.0 - std::pow(opts.beta2, t);
    const double step_size = opts.lr / bc1;
    const double sqrt_bc2 = std::sqrt(bc2);
    const double decay = 1.0 - opts.lr * opts.weight_decay;

    double* w = slot.value.data();
    double* m = slot.m.data();
    double* v = slot.v.data();
    const double* gp = g.data();
    for (std::size_t i = 0; i < slot.value.size(); ++i) {
      w[i] *= decay;
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * gp[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * gp[i] * gp[i];
      const double denom = std::sqrt(v[i]) / sqrt_bc2 + opts.eps;
      w[i] -= step_size * m[i] / denom;
    }
  }
}

}  // namespace gunl
