#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gunl/numerics/dense.hpp"

namespace gunl {

using GradMap = std::map<std::string, Dense>;

/// Named trainable tensors with their AdamW moment buffers. Iteration order is
/// the lexicographic order of names, which keeps every traversal deterministic.
class ParamStore {
 public:
  struct Slot {
    Dense value;
    Dense m;
    Dense v;
    std::int64_t step = 0;
  };

  /// Registers a parameter with zeroed moments. Re-adding a name throws.
  void add(const std::string& name, Dense value);

  bool contains(const std::string& name) const { return slots_.count(name) != 0; }
  std::size_t size() const { return slots_.size(); }
  std::vector<std::string> names() const;

  Dense& value(const std::string& name);
  const Dense& value(const std::string& name) const;
  Slot& slot(const std::string& name);
  const Slot& slot(const std::string& name) const;

  const std::map<std::string, Slot>& slots() const { return slots_; }

  /// Sum of squared entries over all parameter values.
  double squared_norm() const;
  std::size_t scalar_count() const;
  bool all_finite() const;

  /// Parameter values only; optimizer moments are ignored.
  bool same_values(const ParamStore& other) const;
  /// Largest absolute entrywise difference. Throws if names or shapes differ.
  double max_abs_delta(const ParamStore& other) const;

 private:
  std::map<std::string, Slot> slots_;
};

struct AdamWOptions {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW update (decoupled weight decay, bias-corrected moments) applied
/// to every parameter in `params`. Each parameter needs a gradient.
void adamw_step(ParamStore& params, const GradMap& grads, const AdamWOptions& opts);

}  // namespace gunl
