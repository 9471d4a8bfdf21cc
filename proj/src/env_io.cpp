#include "gim/env_io.hpp"

#include "gim/errors.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace gim {

using nlohmann::json;

json mdp_to_json(const TabularMdp& mdp) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    json transitions = json::array();
    json rewards = json::array();
    for (int s = 0; s < S; ++s) {
        json per_action = json::array();
        json reward_row = json::array();
        for (int a = 0; a < A; ++a) {
            const auto row = mdp.transition_row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
            reward_row.push_back(mdp.reward(s, a));
        }
        transitions.push_back(std::move(per_action));
        rewards.push_back(std::move(reward_row));
    }
    json doc;
    doc["states"] = S;
    doc["actions"] = A;
    doc["horizon"] = mdp.horizon();
    doc["transitions"] = std::move(transitions);
    doc["rewards"] = std::move(rewards);
    doc["initial"] = std::vector<double>(mdp.initial().begin(), mdp.initial().end());
    doc["reward_min"] = mdp.reward_min();
    doc["reward_max"] = mdp.reward_max();
    return doc;
}

namespace {

const json& require(const json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw SchemaError(fmt::format("environment is missing key '{}'", key));
    }
    return doc.at(key);
}

int require_positive_int(const json& doc, const char* key) {
    const json& v = require(doc, key);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw SchemaError(fmt::format("'{}' must be a positive integer", key));
    }
    return v.get<int>();
}

double require_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw SchemaError(fmt::format("{} must be a number", where));
    }
    return v.get<double>();
}

const json& require_array(const json& v, std::size_t size, const std::string& where) {
    if (!v.is_array() || v.size() != size) {
        throw SchemaError(fmt::format("{} must be an array of length {}", where, size));
    }
    return v;
}

} // namespace

TabularMdp mdp_from_json(const json& doc) {
    const int S = require_positive_int(doc, "states");
    const int A = require_positive_int(doc, "actions");
    const int H = require_positive_int(doc, "horizon");
    const json& trans = require_array(require(doc, "transitions"), S, "transitions");
    const json& rew = require_array(require(doc, "rewards"), S, "rewards");
    const json& init = require_array(require(doc, "initial"), S, "initial");
    const double reward_min = require_number(require(doc, "reward_min"), "reward_min");
    const double reward_max = require_number(require(doc, "reward_max"), "reward_max");

    std::vector<double> transitions;
    std::vector<double> rewards;
    transitions.reserve(static_cast<std::size_t>(S) * A * S);
    rewards.reserve(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
        const json& per_action = require_array(trans[s], A, fmt::format("transitions[{}]", s));
        const json& reward_row = require_array(rew[s], A, fmt::format("rewards[{}]", s));
        for (int a = 0; a < A; ++a) {
            const auto where = fmt::format("transitions[{}][{}]", s, a);
            const json& row = require_array(per_action[a], S, where);
            for (int t = 0; t < S; ++t) {
                transitions.push_back(require_number(row[t], where));
            }
            rewards.push_back(require_number(reward_row[a], fmt::format("rewards[{}][{}]", s, a)));
        }
    }
    std::vector<double> initial;
    for (int s = 0; s < S; ++s) {
        initial.push_back(require_number(init[s], "initial"));
    }
    try {
        return TabularMdp(S, A, H, std::move(transitions), std::move(rewards), std::move(initial),
                          reward_min, reward_max);
    } catch (const ValidationError& e) {
        throw SchemaError(e.what());
    } catch (const ShapeError& e) {
        throw SchemaError(e.what());
    }
}

std::string dump_env(const TabularMdp& mdp) {
    return mdp_to_json(mdp).dump(2) + "\n";
}

TabularMdp load_env_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open environment file '{}'", path.string()));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw SchemaError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return mdp_from_json(doc);
}

void save_env_file(const TabularMdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(fmt::format("cannot write environment file '{}'", path.string()));
    }
    out << dump_env(mdp);
    if (!out) {
        throw IoError(fmt::format("failed writing '{}'", path.string()));
    }
}

} // namespace gim
