#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace robmech {

/// Label used for the non-participation type when labels are generated.
inline constexpr const char* kBottomLabel = "bot";

/// Per-agent finite type lists. Each list contains the non-participation
/// type exactly once. Profiles are indexed lexicographically with agent 0
/// as the most significant digit.
class TypeSpace {
 public:
  TypeSpace() = default;

  /// `bottom[i]` gives the position of the non-participation type in
  /// `labels[i]`.
  TypeSpace(std::vector<std::vector<std::string>> labels, std::vector<std::size_t> bottom);

  /// Labels where the non-participation type is the entry equal to
  /// kBottomLabel.
  explicit TypeSpace(std::vector<std::vector<std::string>> labels);

  /// Generated labels: agent i gets {bot, "1", ..., "k_i - 1"} with bot at 0.
  static TypeSpace with_sizes(std::span<const std::size_t> sizes);
  static TypeSpace with_sizes(std::initializer_list<std::size_t> sizes);

  std::size_t agents() const noexcept { return labels_.size(); }
  std::size_t types(std::size_t agent) const { return labels_.at(agent).size(); }
  std::size_t bottom(std::size_t agent) const { return bottom_.at(agent); }
  const std::string& label(std::size_t agent, std::size_t type) const { return labels_.at(agent).at(type); }
  const std::vector<std::vector<std::string>>& labels() const noexcept { return labels_; }
  std::vector<std::size_t> sizes() const;

  /// Number of type profiles (product of list sizes).
  std::size_t profiles() const noexcept { return profiles_; }

  /// Number of profiles of the other agents, |T_{-i}|.
  std::size_t others(std::size_t agent) const { return profiles_ / types(agent); }

  std::size_t type_of(std::size_t profile, std::size_t agent) const {
    return (profile / strides_[agent]) % labels_[agent].size();
  }

  /// Profile obtained by replacing `agent`'s type.
  std::size_t with_type(std::size_t profile, std::size_t agent, std::size_t type) const {
    return profile + (type - type_of(profile, agent)) * strides_[agent];
  }

  /// Index of the others' sub-profile t_{-i} (lexicographic over the
  /// remaining agents).
  std::size_t others_index(std::size_t profile, std::size_t agent) const {
    const std::size_t hi = profile / (strides_[agent] * labels_[agent].size());
    const std::size_t lo = profile % strides_[agent];
    return hi * strides_[agent] + lo;
  }

  /// Inverse of (type_of, others_index).
  std::size_t compose(std::size_t agent, std::size_t type, std::size_t others) const {
    const std::size_t hi = others / strides_[agent];
    const std::size_t lo = others % strides_[agent];
    return (hi * labels_[agent].size() + type) * strides_[agent] + lo;
  }

  std::vector<std::size_t> decode(std::size_t profile) const;
  std::size_t encode(std::span<const std::size_t> types) const;

  /// Profile where every agent reports the non-participation type.
  std::size_t all_bottom() const;

  bool operator==(const TypeSpace& other) const noexcept {
    return labels_ == other.labels_ && bottom_ == other.bottom_;
  }

 private:
  void init();

  std::vector<std::vector<std::string>> labels_;
  std::vector<std::size_t> bottom_;
  std::vector<std::size_t> strides_;
  std::size_t profiles_ = 0;
};

/// Throws DimensionError unless both spaces are identical.
void require_same_space(const TypeSpace& a, const TypeSpace& b, const char* what);

}  // namespace robmech
