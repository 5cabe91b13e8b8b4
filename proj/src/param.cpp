#include "panelsmc/param.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "panelsmc/errors.hpp"

namespace panelsmc {

NamedValues::NamedValues(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size())
    throw ShapeError("NamedValues: " + std::to_string(names_.size()) + " names but " +
                     std::to_string(values_.size()) + " values");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_)
    if (!seen.insert(n).second) throw NameClash("duplicate name '" + n + "'");
}

NamedValues::NamedValues(std::initializer_list<std::pair<std::string, double>> entries) {
  for (const auto& [n, v] : entries) push_back(n, v);
}

bool NamedValues::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t NamedValues::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw NameError("unknown name '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

void NamedValues::push_back(std::string name, double value) {
  if (contains(name)) throw NameClash("duplicate name '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(value);
}

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols())
      throw ShapeError("ragged input: row " + std::to_string(r) + " has " +
                       std::to_string(rows[r].size()) + " entries, expected " +
                       std::to_string(out.cols()));
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

void ParamSpec::validate() const {
  if (unit_names.empty()) throw DomainError("a panel needs at least one unit");
  std::unordered_set<std::string> seen;
  for (const auto& n : shared_names)
    if (!seen.insert(n).second) throw NameClash("duplicate shared name '" + n + "'");
  for (const auto& n : specific_names)
    if (!seen.insert(n).second)
      throw NameClash("name '" + n + "' is both shared and unit-specific (or duplicated)");
  std::unordered_set<std::string> units;
  for (const auto& u : unit_names)
    if (u.empty() || !units.insert(u).second)
      throw NameClash("invalid or duplicate unit name '" + u + "'");
}

std::vector<std::string> ParamSpec::full_names() const {
  std::vector<std::string> out;
  out.reserve(full_dim());
  for (const auto& s : shared_names) out.push_back(s);
  for (const auto& u : unit_names)
    for (const auto& b : specific_names) out.push_back(make_param_key(b, u));
  return out;
}

bool ParamSpec::is_shared(const std::string& name) const {
  return std::find(shared_names.begin(), shared_names.end(), name) != shared_names.end();
}

bool ParamSpec::is_specific(const std::string& name) const {
  return std::find(specific_names.begin(), specific_names.end(), name) != specific_names.end();
}

std::string make_param_key(const std::string& name, const std::string& unit) {
  return name + "[" + unit + "]";
}

std::pair<std::string, std::string> split_param_key(const std::string& key) {
  const auto open = key.find('[');
  if (open == std::string::npos) {
    if (!key.empty() && key.back() == ']') throw ParseError("malformed key '" + key + "'");
    return {key, {}};
  }
  if (open == 0 || key.back() != ']' || key.size() - open < 3)
    throw ParseError("malformed key '" + key + "'");
  return {key.substr(0, open), key.substr(open + 1, key.size() - open - 2)};
}

void SpecificMatrix::validate() const {
  if (values.rows() != param_names.size() || values.cols() != unit_names.size())
    throw ShapeError("specific matrix is " + std::to_string(values.rows()) + "x" +
                     std::to_string(values.cols()) + " but has " +
                     std::to_string(param_names.size()) + " row labels and " +
                     std::to_string(unit_names.size()) + " column labels");
}

ParamList to_param_list(const ParamVector& v) {
  ParamList out;
  std::vector<std::pair<std::string, std::string>> keyed;  // (name, unit) per specific entry
  keyed.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto [name, unit] = split_param_key(v.name_at(i));
    if (unit.empty()) {
      out.shared.push_back(name, v.value_at(i));
    } else {
      keyed.emplace_back(name, unit);
      if (std::find(out.specific.param_names.begin(), out.specific.param_names.end(), name) ==
          out.specific.param_names.end())
        out.specific.param_names.push_back(name);
      if (std::find(out.specific.unit_names.begin(), out.specific.unit_names.end(), unit) ==
          out.specific.unit_names.end())
        out.specific.unit_names.push_back(unit);
    }
  }
  const std::size_t b = out.specific.param_names.size();
  const std::size_t u = out.specific.unit_names.size();
  // keys are unique, so a full count means every (name, unit) cell is present
  if (keyed.size() != b * u)
    throw ShapeError("incomplete specific grid: " + std::to_string(keyed.size()) +
                     " entries for " + std::to_string(b) + "x" + std::to_string(u));
  out.specific.values = Matrix(b, u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto [name, unit] = split_param_key(v.name_at(i));
    if (unit.empty()) continue;
    const auto& names = out.specific.param_names;
    const auto& units = out.specific.unit_names;
    const auto row = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), name) - names.begin());
    const auto col = static_cast<std::size_t>(
        std::find(units.begin(), units.end(), unit) - units.begin());
    out.specific.values(row, col) = v.value_at(i);
  }
  return out;
}

ParamVector to_param_vector(const ParamList& l) {
  l.specific.validate();
  ParamVector out = l.shared;
  for (std::size_t u = 0; u < l.specific.unit_names.size(); ++u)
    for (std::size_t b = 0; b < l.specific.param_names.size(); ++b)
      out.push_back(make_param_key(l.specific.param_names[b], l.specific.unit_names[u]),
                    l.specific.values(b, u));
  return out;
}

ParamVector assemble_param_vector(const ParamSpec& spec, const NamedValues& shared,
                                  const SpecificMatrix& specific) {
  specific.validate();
  if (shared.size() != spec.n_shared())
    throw NameError("expected " + std::to_string(spec.n_shared()) + " shared parameters, got " +
                    std::to_string(shared.size()));
  if (specific.param_names != spec.specific_names)
    throw NameError("specific row labels do not match the parameter specification");
  if (specific.unit_names != spec.unit_names)
    throw UnitMismatch("specific column labels do not match the panel's unit names");
  ParamVector out;
  for (const auto& s : spec.shared_names) out.push_back(s, shared.get(s));
  for (std::size_t u = 0; u < spec.n_units(); ++u)
    for (std::size_t b = 0; b < spec.n_specific(); ++b)
      out.push_back(make_param_key(spec.specific_names[b], spec.unit_names[u]),
                    specific.values(b, u));
  return out;
}

ParamVector conform_to_spec(const ParamVector& v, const ParamSpec& spec) {
  if (v.size() != spec.full_dim())
    throw NameError("parameter vector has " + std::to_string(v.size()) + " entries, expected " +
                    std::to_string(spec.full_dim()));
  ParamVector out;
  for (const auto& key : spec.full_names()) out.push_back(key, v.get(key));
  return out;
}

double ScalarTransform::apply_to_est(double v) const {
  switch (kind) {
    case Kind::identity: return v;
    case Kind::log_scale: return std::log(v);
    case Kind::custom: return to_est(v);
  }
  return v;
}

double ScalarTransform::apply_from_est(double v) const {
  switch (kind) {
    case Kind::identity: return v;
    case Kind::log_scale: return std::exp(v);
    case Kind::custom: return from_est(v);
  }
  return v;
}

ParamTransform ParamTransform::log_for(std::vector<std::string> names) {
  ParamTransform t;
  for (auto& n : names) t.register_log(n);
  return t;
}

void ParamTransform::register_log(const std::string& name) {
  if (transforms(name)) throw NameClash("transform already registered for '" + name + "'");
  names_.push_back(name);
  transforms_.push_back({ScalarTransform::Kind::log_scale, {}, {}});
  log_names_.push_back(name);
}

void ParamTransform::register_custom(const std::string& name, std::function<double(double)> to,
                                     std::function<double(double)> from) {
  if (transforms(name)) throw NameClash("transform already registered for '" + name + "'");
  names_.push_back(name);
  transforms_.push_back({ScalarTransform::Kind::custom, std::move(to), std::move(from)});
}

namespace {
const ScalarTransform kIdentity{};
}

bool ParamTransform::transforms(const std::string& base_name) const {
  return std::find(names_.begin(), names_.end(), base_name) != names_.end();
}

const ScalarTransform& ParamTransform::scalar_for(const std::string& base_name) const {
  auto it = std::find(names_.begin(), names_.end(), base_name);
  if (it == names_.end()) return kIdentity;
  return transforms_[static_cast<std::size_t>(it - names_.begin())];
}

double ParamTransform::to_est(const std::string& name, double v) const {
  return scalar_for(split_param_key(name).first).apply_to_est(v);
}

double ParamTransform::from_est(const std::string& name, double v) const {
  return scalar_for(split_param_key(name).first).apply_from_est(v);
}

ParamVector ParamTransform::to_est(const ParamVector& v) const {
  ParamVector out = v;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.value_at(i) = to_est(out.name_at(i), out.value_at(i));
  return out;
}

ParamVector ParamTransform::from_est(const ParamVector& v) const {
  ParamVector out = v;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.value_at(i) = from_est(out.name_at(i), out.value_at(i));
  return out;
}

}  // namespace panelsmc
