#include <array>
#include <utility>

#include "clemit/experiment.hpp"

namespace clemit {

namespace {

constexpr std::string_view kFig1b = R"({
  "name": "fig1b",
  "mode": "all",
  "model": {
    "n_excited": 3,
    "omega": [-0.05, 0.0, 0.05],
    "gamma_rad": [1.0, 1.0, 1.0],
    "excitation": [5.0, 5.0, 5.0],
    "gamma_nr": 3.0,
    "nr_channels": [[3, 1], [3, 2], [2, 1]]
  },
  "p_values": [0.0, 1.0],
  "initial_states": ["ground"],
  "dynamics": {"t_max": 5.0, "points": 501, "snapshot_times": [0.0, 0.2, 0.5, 1.0]},
  "spectrum": {
    "filter_bandwidth": 0.1,
    "step": 0.002,
    "times": {"min": 0.0, "max": 5.0, "count": 51},
    "omega": {"min": -40.0, "max": 40.0, "count": 161},
    "route": "quadrature"
  }
}
)";

constexpr std::string_view kFig1c = R"({
  "name": "fig1c",
  "mode": "all",
  "model": {
    "n_excited": 3,
    "omega": [-50.0, 0.0, 0.05],
    "gamma_rad": [1.0, 1.0, 1.0],
    "excitation": [5.0, 5.0, 5.0],
    "gamma_nr": 3.0,
    "nr_channels": [[3, 1], [3, 2], [2, 1]]
  },
  "p_values": [0.0, 1.0],
  "initial_states": ["ground"],
  "dynamics": {"t_max": 5.0, "points": 501, "snapshot_times": [0.0, 0.2, 0.5, 1.0]},
  "spectrum": {
    "filter_bandwidth": 0.1,
    "step": 0.001,
    "times": {"min": 0.0, "max": 5.0, "count": 51},
    "omega": {"min": -70.0, "max": 20.0, "count": 181},
    "route": "quadrature"
  }
}
)";

constexpr std::string_view kFig2InitialStates = R"({
  "name": "fig2-initial-states",
  "mode": "all",
  "model": {
    "n_excited": 3,
    "omega": [-100.0, 0.0, 0.05],
    "gamma_rad": [1.0, 1.0, 1.0],
    "excitation": [5.0, 5.0, 5.0],
    "gamma_nr": 3.0,
    "nr_channels": [[3, 1], [3, 2], [2, 1]]
  },
  "p_values": [0.0, 1.0],
  "initial_states": [
    "ground",
    "equal-pi",
    "superposition-01",
    "equal"
  ],
  "dynamics": {"t_max": 2.0, "points": 201},
  "spectrum": {
    "filter_bandwidth": 0.1,
    "step": 0.0005,
    "times": [0.5, 1.0, 2.0],
    "omega": {"min": -130.0, "max": 30.0, "count": 161},
    "route": "quadrature"
  }
}
)";

constexpr std::string_view kFig2ExcitationRates = R"({
  "name": "fig2-excitation-rates",
  "mode": "all",
  "model": {
    "n_excited": 3,
    "omega": [-50.0, 0.0, 0.05],
    "gamma_rad": [1.0, 1.0, 1.0],
    "excitation": [5.0, 5.0, 5.0],
    "gamma_nr": 3.0,
    "nr_channels": [[3, 1], [3, 2], [2, 1]]
  },
  "variants": [
    {"label": "r0.5", "model": {"excitation": [0.5, 0.5, 0.5]}},
    {"label": "r1", "model": {"excitation": [1.0, 1.0, 1.0]}},
    {"label": "r5", "model": {"excitation": [5.0, 5.0, 5.0]}}
  ],
  "p_values": [0.0, 1.0],
  "initial_states": ["ground"],
  "dynamics": {"t_max": 2.0, "points": 201},
  "spectrum": {
    "filter_bandwidth": 0.1,
    "step": 0.001,
    "times": [0.5, 1.0, 2.0],
    "omega": {"min": -80.0, "max": 20.0, "count": 201},
    "route": "quadrature"
  }
}
)";

constexpr std::string_view kFig3 = R"({
  "name": "fig3",
  "mode": "dynamics",
  "model": {
    "n_excited": 3,
    "omega": [-0.05, 0.0, 0.05],
    "gamma_rad": [1.0, 1.0, 1.0],
    "excitation": [5.0, 5.0, 5.0],
    "gamma_nr": 3.0,
    "nr_channels": [[3, 1], [3, 2], [2, 1]]
  },
  "variants": [
    {"label": "I", "model": {"omega": [-0.05, 0.0, 0.05]}},
    {"label": "II", "model": {"omega": [-50.0, 0.0, 0.05]}},
    {"label": "III", "model": {"omega": [-50.0, 0.0, 50.0]}}
  ],
  "p_values": [1.0],
  "initial_states": ["ground"],
  "dynamics": {"t_max": 5.0, "points": 501, "snapshot_times": [0.0, 0.2, 0.5, 1.0]}
}
)";

constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kPresets{{
    {"fig1b", kFig1b},
    {"fig1c", kFig1c},
    {"fig2-initial-states", kFig2InitialStates},
    {"fig2-excitation-rates", kFig2ExcitationRates},
    {"fig3", kFig3},
}};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : kPresets) names.emplace_back(name);
  return names;
}

std::optional<std::string> preset_json(std::string_view name) {
  for (const auto& [key, text] : kPresets) {
    if (key == name) return std::string(text);
  }
  return std::nullopt;
}

}  // namespace clemit
