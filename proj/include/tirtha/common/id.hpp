#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace tirtha {

/// Opaque row identifier, tagged so ids of different entities never mix.
template <class Tag>
struct Id {
  std::int64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::int64_t v) : value(v) {}

  constexpr bool valid() const { return value > 0; }
  std::string str() const { return std::to_string(value); }

  friend constexpr auto operator<=>(Id, Id) = default;
};

using SiteId = Id<struct SiteTag>;
using ContributorId = Id<struct ContributorTag>;
using ContributionId = Id<struct ContributionTag>;
using ImageId = Id<struct ImageTag>;
using RunId = Id<struct RunTag>;
using JobId = Id<struct JobTag>;

}  // namespace tirtha

template <class Tag>
struct std::hash<tirtha::Id<Tag>> {
  std::size_t operator()(tirtha::Id<Tag> id) const noexcept {
    return std::hash<std::int64_t>{}(id.value);
  }
};
