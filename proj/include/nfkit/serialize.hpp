#ifndef NFKIT_SERIALIZE_HPP
#define NFKIT_SERIALIZE_HPP

#include "nfkit/beamforming.hpp"

#include <nlohmann/json.hpp>

namespace nfkit {

NLOHMANN_JSON_SERIALIZE_ENUM(HybridKind, {{HybridKind::FullyConnected, "fully_connected"},
                                          {HybridKind::SubConnected, "sub_connected"},
                                          {HybridKind::HybridFarNear, "hybrid_far_near"}})

NLOHMANN_JSON_SERIALIZE_ENUM(ChainRole,
                             {{ChainRole::NearField, "near_field"}, {ChainRole::FarField, "far_field"}, {ChainRole::Idle, "idle"}})

inline void to_json(nlohmann::json& j, const TtdSegment& s) {
    j = {{"first", s.first}, {"count", s.count}, {"delay_s", s.delay_s}};
}

inline void from_json(const nlohmann::json& j, TtdSegment& s) {
    j.at("first").get_to(s.first);
    j.at("count").get_to(s.count);
    j.at("delay_s").get_to(s.delay_s);
}

inline void to_json(nlohmann::json& j, const RfChain& c) {
    j = {{"antennas", c.antennas}, {"ps_phases", c.ps_phases}, {"ttds", c.ttds}, {"role", c.role}};
    j["user"] = c.user ? nlohmann::json(*c.user) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, RfChain& c) {
    j.at("antennas").get_to(c.antennas);
    j.at("ps_phases").get_to(c.ps_phases);
    j.at("ttds").get_to(c.ttds);
    j.at("role").get_to(c.role);
    const auto& u = j.at("user");
    c.user = u.is_null() ? std::nullopt : std::optional<std::size_t>(u.get<std::size_t>());
}

inline void to_json(nlohmann::json& j, const HybridStructure& s) {
    j = {{"kind", s.kind},
         {"n_antennas", s.n_antennas},
         {"center_hz", s.center_hz},
         {"max_delay_s", s.max_delay_s},
         {"chains", s.chains}};
}

// Throws Error(configuration) on malformed or invalid input.
inline void from_json(const nlohmann::json& j, HybridStructure& s) {
    try {
        j.at("kind").get_to(s.kind);
        j.at("n_antennas").get_to(s.n_antennas);
        j.at("center_hz").get_to(s.center_hz);
        j.at("max_delay_s").get_to(s.max_delay_s);
        j.at("chains").get_to(s.chains);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::configuration, std::string("hybrid structure: ") + e.what());
    }
    s.validate();
}

} // namespace nfkit

#endif
