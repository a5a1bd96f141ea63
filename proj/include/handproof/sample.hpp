// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "handproof/trajectory.hpp"

namespace handproof {

enum class Label { Human = 0, Synthetic = 1 };

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view name);
inline int as_target(Label label) noexcept { return static_cast<int>(label); }

/// Trajectory with its class and provenance tag.
struct LabeledSample {
  std::string id;
  Trajectory trajectory;
  Label label = Label::Human;
  std::string source;
  /// Keys of the source record this toolkit does not interpret.
  nlohmann::json extra = nlohmann::json::object();
};

using Dataset = std::vector<LabeledSample>;

}  // namespace handproof
