#pragma once

#include "gim/mdp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace gim {

// JSON environment file schema:
//   states, actions, horizon       integers
//   transitions                    [s][a][s'] probabilities
//   rewards                        [s][a]
//   initial                        [s]
//   reward_min, reward_max         numbers

nlohmann::json mdp_to_json(const TabularMdp& mdp);

/// Throws SchemaError on missing keys, wrong shapes, or invalid dynamics.
TabularMdp mdp_from_json(const nlohmann::json& doc);

/// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string dump_env(const TabularMdp& mdp);

/// Throws IoError if the file cannot be read, SchemaError if it is malformed.
TabularMdp load_env_file(const std::filesystem::path& path);

void save_env_file(const TabularMdp& mdp, const std::filesystem::path& path);

} // namespace gim
