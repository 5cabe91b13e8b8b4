#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panelsmc/named_values.hpp"

namespace panelsmc {

// Flat named parameter vector. Unit-specific entries use the key convention
// "name[unitname]"; ordering is all shared entries first, then one block per
// unit in unit order, each block in specific-name order.
using ParamVector = NamedValues;

// Shared / unit-specific parameter structure of a panel model.
// A = |shared_names|, B = |specific_names|, U = |unit_names|; the full
// parameter vector has dimension A + B*U.
struct ParamSpec {
  std::vector<std::string> shared_names;
  std::vector<std::string> specific_names;
  std::vector<std::string> unit_names;

  std::size_t n_shared() const { return shared_names.size(); }
  std::size_t n_specific() const { return specific_names.size(); }
  std::size_t n_units() const { return unit_names.size(); }
  std::size_t full_dim() const { return n_shared() + n_specific() * n_units(); }

  // Throws NameClash / DomainError when the name sets are invalid.
  void validate() const;

  // Full key list in canonical order.
  std::vector<std::string> full_names() const;

  bool is_shared(const std::string& name) const;
  bool is_specific(const std::string& name) const;
};

// Builds the "name[unit]" key.
std::string make_param_key(const std::string& name, const std::string& unit);

// Splits a key into {base name, unit}; unit is empty for shared keys.
// Throws ParseError on malformed bracket syntax.
std::pair<std::string, std::string> split_param_key(const std::string& key);

// Unit-specific parameter block: one row per parameter, one column per unit.
struct SpecificMatrix {
  std::vector<std::string> param_names;  // row labels
  std::vector<std::string> unit_names;   // column labels
  Matrix values;                         // B x U

  void validate() const;  // label/dimension consistency
};

// The list format: shared vector plus specific matrix.
struct ParamList {
  NamedValues shared;
  SpecificMatrix specific;
};

// Vector format -> list format. The spec is inferred from key syntax:
// bracketed keys are unit-specific, bare keys shared; name and unit order
// follow first appearance. Throws ParseError on malformed keys and
// ShapeError when the (name, unit) grid is incomplete.
ParamList to_param_list(const ParamVector& v);

// List format -> vector format (canonical ordering).
ParamVector to_param_vector(const ParamList& l);

// Assembles the canonical ParamVector for `spec` from a shared vector and a
// specific matrix. Throws NameError / UnitMismatch on label mismatches.
ParamVector assemble_param_vector(const ParamSpec& spec, const NamedValues& shared,
                                  const SpecificMatrix& specific);

// Reorders a complete parameter vector into the canonical order of `spec`.
// Throws NameError when the key sets differ.
ParamVector conform_to_spec(const ParamVector& v, const ParamSpec& spec);

// Per-parameter scalar transform to/from the estimation scale.
struct ScalarTransform {
  enum class Kind { identity, log_scale, custom };
  Kind kind = Kind::identity;
  std::function<double(double)> to_est;    // set for custom only
  std::function<double(double)> from_est;  // set for custom only

  double apply_to_est(double v) const;
  double apply_from_est(double v) const;
};

// Maps parameters between the natural and the estimation scale. The common
// case is a log transform on a set of names; arbitrary scalar pairs can be
// registered as well. Names not registered are passed through unchanged.
// Panel keys like "tau[unit3]" are looked up by their base name.
class ParamTransform {
 public:
  ParamTransform() = default;

  static ParamTransform identity() { return {}; }
  static ParamTransform log_for(std::vector<std::string> names);

  void register_log(const std::string& name);
  void register_custom(const std::string& name, std::function<double(double)> to_est,
                       std::function<double(double)> from_est);

  bool transforms(const std::string& base_name) const;
  const ScalarTransform& scalar_for(const std::string& base_name) const;

  double to_est(const std::string& name, double v) const;
  double from_est(const std::string& name, double v) const;

  // Entry-wise transform of a full parameter vector.
  ParamVector to_est(const ParamVector& v) const;
  ParamVector from_est(const ParamVector& v) const;

  const std::vector<std::string>& log_names() const { return log_names_; }

 private:
  std::vector<std::string> names_;
  std::vector<ScalarTransform> transforms_;
  std::vector<std::string> log_names_;
};

}  // namespace panelsmc
