#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "veritas/ehmm.hpp"
#include "veritas/player_sim.hpp"

namespace veritas {

inline constexpr const char* kToolVersion = "veritas 0.1.0";

// A deployable design: what the player streams and how it decides.
struct Setting {
    VideoModel video;
    PlayerConfig player;

    bool operator==(const Setting&) const = default;
};

struct EhmmParams {
    double p_stay = 0.9;
    double sigma_mbps = 0.5;
    bool operator==(const EhmmParams&) const = default;
};

// Resolved configuration of one CLI run.
struct RunConfig {
    QuantGrid grid;
    Setting setting;
    EhmmParams ehmm;
    std::optional<std::uint64_t> seed;  // required by every command; never defaulted

    EhmmModel model() const;
    void validate() const;
};

// Default ladder with every rung above `max_mbps` removed.
std::vector<Rung> capped_ladder(double max_mbps);

RunConfig default_run_config();

// Fields present in `j` override `base`; unknown keys are rejected.
RunConfig merge_config(const RunConfig& base, const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base);

// Applies one `key=value` design change: abr, buffer, ladder_max, horizon,
// rebuffer_penalty, backend.
Setting apply_change(const Setting& setting, const std::string& change);

nlohmann::json to_json(const QuantGrid& grid);
nlohmann::json to_json(const VideoModel& video);
nlohmann::json to_json(const PlayerConfig& player);
nlohmann::json to_json(const Setting& setting);
nlohmann::json to_json(const RunConfig& config);

}  // namespace veritas
