#include "robmech/type_space.hpp"

#include <algorithm>
#include <set>

#include "robmech/errors.hpp"

namespace robmech {

TypeSpace::TypeSpace(std::vector<std::vector<std::string>> labels, std::vector<std::size_t> bottom)
    : labels_(std::move(labels)), bottom_(std::move(bottom)) {
  init();
}

TypeSpace::TypeSpace(std::vector<std::vector<std::string>> labels) : labels_(std::move(labels)) {
  bottom_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& list = labels_[i];
    const auto count = std::count(list.begin(), list.end(), std::string(kBottomLabel));
    if (count != 1) {
      throw ValidationError("agent " + std::to_string(i) + " must list the non-participation type '" +
                            kBottomLabel + "' exactly once");
    }
    bottom_.push_back(static_cast<std::size_t>(
        std::find(list.begin(), list.end(), std::string(kBottomLabel)) - list.begin()));
  }
  init();
}

TypeSpace TypeSpace::with_sizes(std::span<const std::size_t> sizes) {
  std::vector<std::vector<std::string>> labels;
  for (std::size_t k : sizes) {
    std::vector<std::string> list{kBottomLabel};
    for (std::size_t t = 1; t < k; ++t) list.push_back(std::to_string(t));
    labels.push_back(std::move(list));
  }
  return TypeSpace(std::move(labels), std::vector<std::size_t>(sizes.size(), 0));
}

TypeSpace TypeSpace::with_sizes(std::initializer_list<std::size_t> sizes) {
  return with_sizes(std::span<const std::size_t>(sizes.begin(), sizes.size()));
}

void TypeSpace::init() {
  if (labels_.empty()) throw ValidationError("type space needs at least one agent");
  if (bottom_.size() != labels_.size()) throw ValidationError("one non-participation index per agent required");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& list = labels_[i];
    if (list.empty()) throw ValidationError("agent " + std::to_string(i) + " has no types");
    if (bottom_[i] >= list.size()) throw ValidationError("non-participation index out of range");
    std::set<std::string> seen(list.begin(), list.end());
    if (seen.size() != list.size()) {
      throw ValidationError("agent " + std::to_string(i) + " has duplicate type labels");
    }
  }
  strides_.assign(labels_.size(), 1);
  profiles_ = 1;
  for (std::size_t i = labels_.size(); i-- > 0;) {
    strides_[i] = profiles_;
    profiles_ *= labels_[i].size();
  }
}

std::vector<std::size_t> TypeSpace::sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : labels_) out.push_back(l.size());
  return out;
}

std::vector<std::size_t> TypeSpace::decode(std::size_t profile) const {
  std::vector<std::size_t> out(agents());
  for (std::size_t i = 0; i < agents(); ++i) out[i] = type_of(profile, i);
  return out;
}

std::size_t TypeSpace::encode(std::span<const std::size_t> types) const {
  if (types.size() != agents()) throw DimensionError("profile has wrong number of agents");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < agents(); ++i) {
    if (types[i] >= labels_[i].size()) throw DimensionError("type index out of range");
    idx += types[i] * strides_[i];
  }
  return idx;
}

std::size_t TypeSpace::all_bottom() const { return encode(bottom_); }

void require_same_space(const TypeSpace& a, const TypeSpace& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": type spaces differ");
}

}  // namespace robmech
