#ifndef NFKIT_SCENARIO_HPP
#define NFKIT_SCENARIO_HPP

#include "nfkit/analysis.hpp"
#include "nfkit/beamforming.hpp"
#include "nfkit/pls.hpp"
#include "nfkit/sensing.hpp"
#include "nfkit/serialize.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace nfkit::scenario {

using json = nlohmann::ordered_json;

inline constexpr const char* toolkit_version = "0.1.0";

// ---------------------------------------------------------------------------
// Schema

enum class ParamType { Number, Integer, NumberList, Choice, ObjectList };

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::Number;
    json fallback;                 // null: required (unless half_wavelength)
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_open = false;
    std::vector<std::string> choices;
    std::vector<ParamSpec> item;   // ObjectList fields
    bool half_wavelength = false;  // default is lambda / 2
    std::string doc;
};

struct KindSchema {
    std::string name;
    std::string description;
    std::vector<ParamSpec> geometry;
    std::vector<ParamSpec> params;
    std::vector<std::string> outputs;
};

namespace detail {

inline ParamSpec number(std::string name, json def, double lo, double hi, bool lo_open, std::string doc) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::Number;
    p.fallback = std::move(def);
    p.lo = lo;
    p.hi = hi;
    p.lo_open = lo_open;
    p.doc = std::move(doc);
    return p;
}

inline ParamSpec positive(std::string name, json def, std::string doc) {
    return number(std::move(name), std::move(def), 0.0, std::numeric_limits<double>::infinity(), true, std::move(doc));
}

inline ParamSpec integer(std::string name, json def, double lo, double hi, std::string doc) {
    ParamSpec p = number(std::move(name), std::move(def), lo, hi, false, std::move(doc));
    p.type = ParamType::Integer;
    return p;
}

inline ParamSpec positive_list(std::string name, json def, std::string doc) {
    ParamSpec p = positive(std::move(name), std::move(def), std::move(doc));
    p.type = ParamType::NumberList;
    return p;
}

inline ParamSpec choice(std::string name, std::string def, std::vector<std::string> choices, std::string doc) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::Choice;
    p.fallback = std::move(def);
    p.choices = std::move(choices);
    p.doc = std::move(doc);
    return p;
}

inline ParamSpec half_wave(std::string name, std::string doc) {
    ParamSpec p = positive(std::move(name), nullptr, std::move(doc));
    p.half_wavelength = true;
    return p;
}

inline ParamSpec angle(std::string name, double def, std::string doc) {
    return number(std::move(name), def, 0.0, 180.0, false, std::move(doc));
}

inline std::vector<ParamSpec> ula_geometry(std::int64_t antennas) {
    return {integer("antennas", antennas, 1, 1 << 20, "number of ULA elements"),
            half_wave("spacing_m", "element spacing; defaults to half a wavelength")};
}

inline json geomspace(double a, double b, std::size_t n) {
    json out = json::array();
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1)));
    return out;
}

inline json powers_of_two(int first, int last) {
    json out = json::array();
    for (int e = first; e <= last; ++e) out.push_back(std::ldexp(1.0, e));
    return out;
}

} // namespace detail

inline const std::vector<KindSchema>& schemas() {
    using namespace detail;
    static const std::vector<KindSchema> all = [] {
        std::vector<KindSchema> v;
        v.push_back({"regions",
                     "Fresnel and Rayleigh boundaries of a ULA and region labels for points on a ray",
                     ula_geometry(128),
                     {positive_list("distances_m", json::array({1.0, 10.0, 31.4, 100.0, 806.0, 1000.0}),
                                    "ray distances from the array centre"),
                      angle("angle_deg", 90.0, "ray angle from the array axis")},
                     {"regions_summary", "regions_points"}});
        v.push_back({"pattern",
                     "Polar-domain radiation patterns of beamsteering and beamfocusing",
                     ula_geometry(128),
                     {angle("steer_angle_deg", 45.0, "steering direction"),
                      positive("focus_range_m", 20.0, "focal distance"),
                      angle("focus_angle_deg", 90.0, "focal direction"),
                      angle("angle_min_deg", 0.9, "first grid angle"),
                      angle("angle_max_deg", 180.0, "last grid angle"),
                      integer("angle_points", 200, 1, 100000, "grid angles"),
                      positive("distance_min_m", 0.25, "first grid distance"),
                      positive("distance_max_m", 50.0, "last grid distance"),
                      integer("distance_points", 200, 1, 100000, "grid distances"),
                      choice("normalization", "phase_only", {"phase_only", "matched_filter"},
                             "response vector used to evaluate the pattern")},
                     {"pattern_steering", "pattern_focusing"}});
        v.push_back({"scaling",
                     "Received power against array size for a discrete ULA and a continuous strip",
                     {half_wave("spacing_m", "ULA element spacing")},
                     {positive("receiver_distance_m", 10.0, "broadside receiver distance"),
                      positive_list("element_counts", powers_of_two(1, 16), "ULA sizes, strictly increasing"),
                      positive("transmit_power_w", 1.0, "transmit power"),
                      half_wave("strip_height_m", "strip height"),
                      half_wave("strip_patch_m", "largest patch side"),
                      positive_list("strip_lengths_m", powers_of_two(-3, 8), "strip lengths, strictly increasing")},
                     {"scaling_discrete", "scaling_continuous"}});
        v.push_back({"dof",
                     "Effective degrees of freedom between two facing planar arrays against distance",
                     {integer("rows", 4, 1, 4096, "rows per array"), integer("cols", 4, 1, 4096, "columns per array"),
                      half_wave("spacing_m", "element spacing")},
                     {positive_list("distances_m", geomspace(0.5, 4000.0, 40), "array separations"),
                      number("threshold", 0.01, 0.0, 1.0, true, "singular value threshold relative to the largest"),
                      positive("sigma_distance_m", 10.0, "separation for the singular value dump")},
                     {"dof_sweep", "dof_sigma"}});
        v.push_back({"modes",
                     "Communication modes of two facing square apertures from the Green's operator",
                     {positive("tx_side_m", 0.5, "transmit aperture side"),
                      positive("rx_side_m", 0.5, "receive aperture side"),
                      integer("patches_per_side", 32, 1, 128, "quadrature patches per side")},
                     {positive_list("distances_m", json::array({2.0, 4.0, 8.0, 16.0}), "aperture separations"),
                      number("threshold", default_mode_threshold, 0.0, 1.0, true,
                             "singular value threshold relative to the largest")},
                     {"modes_sweep", "modes_sigma"}});
        v.push_back({"beamsplit",
                     "Per-subcarrier gain of PS-only, FC-TTD and SC-TTD beamformers",
                     ula_geometry(256),
                     {number("bandwidth_hz", 1e10, 0.0, std::numeric_limits<double>::infinity(), false,
                             "total bandwidth"),
                      integer("subcarriers", 129, 1, 100000, "subcarrier count"),
                      positive("focus_range_m", 10.0, "user distance"),
                      angle("focus_angle_deg", 45.0, "user direction"),
                      integer("n_rf", 4, 1, 4096, "RF chains"),
                      integer("ttd_per_rf", 16, 0, 1 << 20, "TTDs per RF chain")},
                     {"beamsplit_gain"}});
        ParamSpec users = choice("users", "", {}, "served users");
        users.type = ParamType::ObjectList;
        users.fallback = json::array({json{{"range_m", 30.0}, {"angle_deg", 60.0}, {"qos", "delay_sensitive"}},
                                      json{{"range_m", 10.0}, {"angle_deg", 90.0}, {"qos", "high_rate"}}});
        users.item = {positive("range_m", nullptr, "user distance"), angle("angle_deg", 90.0, "user direction"),
                      choice("qos", "high_rate", {"delay_sensitive", "high_rate"}, "service class")};
        v.push_back({"hfn",
                     "Hybrid far/near sub-array partition and hardware cost against FC and SC",
                     ula_geometry(512),
                     {integer("n_rf", 4, 1, 4096, "RF chains"), users,
                      integer("ttd_per_rf", 16, 0, 1 << 20, "TTDs per RF chain for the FC and SC references"),
                      number("ps_w", 0.02, 0.0, std::numeric_limits<double>::infinity(), false, "PS unit power"),
                      number("ttd_w", 0.1, 0.0, std::numeric_limits<double>::infinity(), false, "TTD unit power"),
                      number("rf_w", 0.25, 0.0, std::numeric_limits<double>::infinity(), false, "RF chain unit power")},
                     {"hfn_partition", "hfn_cost", "hfn_structure"}});
        ParamSpec targets = users;
        targets.name = "targets";
        targets.doc = "point targets";
        targets.fallback = json::array({json{{"range_m", 10.0}, {"angle_deg", 45.0}, {"amplitude", 1.0}},
                                        json{{"range_m", 25.0}, {"angle_deg", 45.0}, {"amplitude", 1.0}},
                                        json{{"range_m", 40.0}, {"angle_deg", 45.0}, {"amplitude", 1.0}}});
        targets.item = {positive("range_m", nullptr, "target distance"), angle("angle_deg", 90.0, "target direction"),
                        positive("amplitude", 1.0, "target amplitude")};
        v.push_back({"sense",
                     "Near-field MUSIC spectrum and joint range-angle estimates",
                     ula_geometry(512),
                     {targets, integer("snapshots", 100, 1, 1 << 20, "snapshot count"),
                      number("snr_db", 10.0, -100.0, 200.0, false, "per-element SNR"),
                      integer("k_targets", nullptr, 1, 1 << 20, "model order; defaults to the target count"),
                      positive("distance_min_m", 5.0, "first grid distance"),
                      positive("distance_max_m", 50.0, "last grid distance"),
                      positive("distance_step_m", 0.5, "grid distance step"),
                      angle("angle_min_deg", 40.0, "first grid angle"), angle("angle_max_deg", 50.0, "last grid angle"),
                      positive("angle_step_deg", 0.5, "grid angle step")},
                     {"sense_spectrum", "sense_estimates"}});
        v.push_back({"secrecy",
                     "Secrecy rate against eavesdropper distance for focusing and steering",
                     ula_geometry(512),
                     {positive("bob_range_m", 25.0, "legitimate user distance"),
                      angle("bob_angle_deg", 45.0, "legitimate user direction"),
                      positive_list("eve_distances_m",
                                    json::array({5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0}),
                                    "eavesdropper distances along the same direction"),
                      positive("transmit_power_w", 1.0, "transmit power"),
                      number("bob_snr_db", 10.0, -100.0, 200.0, false, "Bob's SNR under focusing; sets the noise power")},
                     {"secrecy_curve"}});
        return v;
    }();
    return all;
}

inline const KindSchema* find_schema(std::string_view kind) {
    for (const auto& s : schemas())
        if (s.name == kind) return &s;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Config

struct ScenarioConfig {
    std::string kind;
    double frequency_hz = 0.0;
    json geometry = json::object();
    json params = json::object();
    std::uint64_t seed = 1;
    std::string output_dir = "nfkit_out";

    Carrier carrier() const { return Carrier(frequency_hz); }

    json to_json() const {
        return json{{"kind", kind},
                    {"carrier", json{{"frequency_hz", frequency_hz}}},
                    {"geometry", geometry},
                    {"params", params},
                    {"seed", seed},
                    {"output_dir", output_dir}};
    }

    friend bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) { return a.to_json() == b.to_json(); }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(Errc::configuration, msg); }

inline std::string bounds_text(const ParamSpec& s) {
    return std::string(s.lo_open ? "(" : "[") + csv::format_number(s.lo) + ", " + csv::format_number(s.hi) + "]";
}

inline double checked_number(const json& v, const ParamSpec& s, const std::string& path) {
    if (!v.is_number()) config_error(path + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(path + ": value must be finite");
    const bool low_ok = s.lo_open ? x > s.lo : x >= s.lo;
    if (!low_ok || x > s.hi)
        config_error(path + " = " + csv::format_number(x) + " is out of range " + bounds_text(s));
    return x;
}

json resolve_block(const json& in, const std::vector<ParamSpec>& specs, const std::string& path, double wavelength);

inline json resolve_value(const json& v, const ParamSpec& s, const std::string& path, double wavelength) {
    switch (s.type) {
    case ParamType::Number: return checked_number(v, s, path);
    case ParamType::Integer: {
        const double x = checked_number(v, s, path);
        if (x != std::floor(x)) config_error(path + ": expected an integer");
        return static_cast<std::int64_t>(x);
    }
    case ParamType::NumberList: {
        if (!v.is_array() || v.empty()) config_error(path + ": expected a non-empty list of numbers");
        json out = json::array();
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(checked_number(v[i], s, path + "[" + std::to_string(i) + "]"));
        return out;
    }
    case ParamType::Choice: {
        if (!v.is_string()) config_error(path + ": expected a string");
        const auto str = v.get<std::string>();
        if (std::find(s.choices.begin(), s.choices.end(), str) == s.choices.end()) {
            std::string opts;
            for (const auto& c : s.choices) opts += (opts.empty() ? "" : ", ") + c;
            config_error(path + ": '" + str + "' is not one of {" + opts + "}");
        }
        return str;
    }
    case ParamType::ObjectList: {
        if (!v.is_array() || v.empty()) config_error(path + ": expected a non-empty list of objects");
        json out = json::array();
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(resolve_block(v[i], s.item, path + "[" + std::to_string(i) + "]", wavelength));
        return out;
    }
    }
    config_error(path + ": unsupported parameter type");
}

inline json resolve_block(const json& in, const std::vector<ParamSpec>& specs, const std::string& path,
                          double wavelength) {
    if (!in.is_null() && !in.is_object()) config_error(path + ": expected an object");
    if (in.is_object())
        for (const auto& [key, value] : in.items()) {
            const bool known = std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.name == key; });
            if (!known) config_error("unknown key '" + path + "." + key + "'");
        }
    json out = json::object();
    for (const auto& s : specs) {
        const std::string p = path + "." + s.name;
        if (in.is_object() && in.contains(s.name))
            out[s.name] = resolve_value(in.at(s.name), s, p, wavelength);
        else if (s.half_wavelength)
            out[s.name] = wavelength / 2.0;
        else if (s.fallback.is_null()) {
            if (s.name == "k_targets") continue; // filled in from the target list
            config_error(p + ": required key is missing");
        } else
            out[s.name] = resolve_value(s.fallback, s, p, wavelength);
    }
    return out;
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else
            ++col;
    }
    return {line, col};
}

inline void require_order(const json& p, const char* lo, const char* hi, const std::string& kind) {
    if (!(p.at(lo).get<double>() <= p.at(hi).get<double>()))
        config_error("params." + std::string(lo) + " must not exceed params." + hi + " (" + kind + ")");
}

inline void require_increasing(const json& list, const std::string& path) {
    for (std::size_t i = 1; i < list.size(); ++i)
        if (!(list[i].get<double>() > list[i - 1].get<double>())) config_error(path + " must be strictly increasing");
}

inline std::size_t step_count(double lo, double hi, double step, const std::string& path) {
    const double n = (hi - lo) / step;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * std::max(1.0, r)) config_error(path + ": range is not a whole number of steps");
    return static_cast<std::size_t>(r) + 1;
}

// Cross-field checks that the per-key schema cannot express.
inline void check_semantics(ScenarioConfig& c) {
    const json& g = c.geometry;
    json& p = c.params;
    if (c.kind == "pattern") {
        require_order(p, "angle_min_deg", "angle_max_deg", c.kind);
        require_order(p, "distance_min_m", "distance_max_m", c.kind);
    } else if (c.kind == "scaling") {
        require_increasing(p.at("element_counts"), "params.element_counts");
        require_increasing(p.at("strip_lengths_m"), "params.strip_lengths_m");
        for (const auto& n : p.at("element_counts"))
            if (n.get<double>() != std::floor(n.get<double>()))
                config_error("params.element_counts: entries must be integers");
    } else if (c.kind == "dof" || c.kind == "modes") {
        require_increasing(p.at("distances_m"), "params.distances_m");
    } else if (c.kind == "beamsplit") {
        const auto n = g.at("antennas").get<std::int64_t>();
        const auto nrf = p.at("n_rf").get<std::int64_t>();
        const auto ttd = p.at("ttd_per_rf").get<std::int64_t>();
        if (n % nrf != 0) config_error("params.n_rf must divide geometry.antennas for the sub-connected design");
        if (ttd > 0 && ((n / nrf) % ttd != 0 || n % ttd != 0))
            config_error("params.ttd_per_rf must divide the antennas of every RF chain");
        if (!(c.frequency_hz - p.at("bandwidth_hz").get<double>() / 2.0 > 0.0))
            config_error("params.bandwidth_hz must be below twice the carrier frequency");
    } else if (c.kind == "hfn") {
        const auto users = p.at("users").size();
        if (static_cast<std::size_t>(p.at("n_rf").get<std::int64_t>()) < users)
            config_error("params.n_rf must be at least the number of users");
    } else if (c.kind == "sense") {
        const auto nt = p.at("targets").size();
        if (!p.contains("k_targets")) {
            json ordered = json::object();
            for (const auto& [k, v] : p.items()) {
                ordered[k] = v;
                if (k == "snr_db") ordered["k_targets"] = static_cast<std::int64_t>(nt);
            }
            p = ordered;
        }
        if (p.at("k_targets").get<std::int64_t>() >= g.at("antennas").get<std::int64_t>())
            config_error("params.k_targets must be below geometry.antennas");
        require_order(p, "distance_min_m", "distance_max_m", c.kind);
        require_order(p, "angle_min_deg", "angle_max_deg", c.kind);
        step_count(p.at("distance_min_m").get<double>(), p.at("distance_max_m").get<double>(),
                   p.at("distance_step_m").get<double>(), "params.distance_step_m");
        step_count(p.at("angle_min_deg").get<double>(), p.at("angle_max_deg").get<double>(),
                   p.at("angle_step_deg").get<double>(), "params.angle_step_deg");
    }
}

} // namespace detail

/// Parses and fully validates a JSON scenario; every default is materialised.
inline ScenarioConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        std::string what = e.what();
        const auto pos = what.find("error while parsing value - ");
        if (pos != std::string::npos) what = what.substr(pos + 28);
        detail::config_error("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                             ": " + what);
    }
    if (!doc.is_object()) detail::config_error("top level must be an object");
    for (const auto& [key, value] : doc.items())
        if (key != "kind" && key != "carrier" && key != "geometry" && key != "params" && key != "seed" &&
            key != "output_dir")
            detail::config_error("unknown key '" + key + "'");

    ScenarioConfig c;
    if (!doc.contains("kind") || !doc["kind"].is_string()) detail::config_error("kind: required string is missing");
    c.kind = doc["kind"].get<std::string>();
    const KindSchema* schema = find_schema(c.kind);
    if (!schema) detail::config_error("kind: unknown experiment '" + c.kind + "'");

    if (!doc.contains("carrier")) detail::config_error("carrier: required object is missing");
    const ParamSpec freq = detail::positive("frequency_hz", nullptr, "");
    const json carrier = detail::resolve_block(doc["carrier"], {freq}, "carrier", 1.0);
    c.frequency_hz = carrier.at("frequency_hz").get<double>();
    const double lambda = speed_of_light / c.frequency_hz;

    c.geometry = detail::resolve_block(doc.value("geometry", json()), schema->geometry, "geometry", lambda);
    c.params = detail::resolve_block(doc.value("params", json()), schema->params, "params", lambda);
    if (doc.contains("seed")) {
        const auto& s = doc["seed"];
        if (!s.is_number_unsigned()) detail::config_error("seed: expected a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty())
            detail::config_error("output_dir: expected a non-empty string");
        c.output_dir = doc["output_dir"].get<std::string>();
    }
    detail::check_semantics(c);
    return c;
}

inline std::string serialize_config(const ScenarioConfig& c) { return c.to_json().dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Execution

struct OutputFile {
    std::string name;
    std::string content;
};

struct FileDigest {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string version = toolkit_version;
    json resolved_config;
    double duration_s = 0.0;
    std::vector<FileDigest> files;

    json to_json() const {
        json files_json = json::array();
        for (const auto& f : files) files_json.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        return json{{"toolkit_version", version},
                    {"resolved_config", resolved_config},
                    {"duration_s", duration_s},
                    {"files", files_json}};
    }
};

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(Errc::io, "SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

namespace detail {

inline double num(const json& j, const char* key) { return j.at(key).get<double>(); }
inline std::size_t count(const json& j, const char* key) { return static_cast<std::size_t>(j.at(key).get<std::int64_t>()); }

inline std::vector<double> numbers(const json& j, const char* key) { return j.at(key).get<std::vector<double>>(); }

inline ArrayGeometry ula(const ScenarioConfig& c) {
    return make_uniform_linear_array(count(c.geometry, "antennas"), num(c.geometry, "spacing_m"));
}

inline OutputFile csv_file(const ScenarioConfig& c, const std::string& label, const csv::Table& t) {
    return {c.kind + "_" + label + ".csv", t.str()};
}

inline std::vector<OutputFile> run_regions(const ScenarioConfig& c) {
    const auto array = ula(c);
    const Carrier carrier = c.carrier();
    csv::Table summary({"antennas", "aperture_m", "wavelength_m", "fresnel_m", "rayleigh_m"});
    summary.add_row({static_cast<std::int64_t>(array.size()), array.aperture(), carrier.wavelength(),
                     fresnel_boundary(array.aperture(), carrier.wavelength()),
                     rayleigh_distance(array.aperture(), carrier.wavelength())});
    csv::Table points({"distance_m", "angle_deg", "region"});
    const double angle = deg2rad(num(c.params, "angle_deg"));
    for (double d : numbers(c.params, "distances_m")) {
        const auto rep = classify_point(array, polar_point(d, angle), carrier);
        points.add_row({d, num(c.params, "angle_deg"), std::string(to_string(rep.region))});
    }
    return {csv_file(c, "summary", summary), csv_file(c, "points", points)};
}

inline std::vector<OutputFile> run_pattern(const ScenarioConfig& c, unsigned threads) {
    const auto array = ula(c);
    const Carrier carrier = c.carrier();
    const auto& p = c.params;
    std::vector<double> angles = PolarAxes::linspace(num(p, "angle_min_deg"), num(p, "angle_max_deg"), count(p, "angle_points"));
    for (auto& a : angles) a = deg2rad(a);
    const PolarAxes axes{angles, PolarAxes::linspace(num(p, "distance_min_m"), num(p, "distance_max_m"),
                                                     count(p, "distance_points"))};
    const auto mode = p.at("normalization") == "phase_only" ? PatternNormalization::PhaseOnly
                                                             : PatternNormalization::MatchedFilter;
    const auto steer = beamsteering_vector(array, deg2rad(num(p, "steer_angle_deg")), carrier);
    const auto focus = beamfocusing_vector(
        array, polar_point(num(p, "focus_range_m"), deg2rad(num(p, "focus_angle_deg"))), carrier);
    return {csv_file(c, "steering", polar_grid_to_csv(radiation_pattern(steer, array, axes, carrier, mode, threads))),
            csv_file(c, "focusing", polar_grid_to_csv(radiation_pattern(focus, array, axes, carrier, mode, threads)))};
}

inline std::vector<OutputFile> run_scaling(const ScenarioConfig& c) {
    const Carrier carrier = c.carrier();
    const auto& p = c.params;
    const Vec3 rx = polar_point(num(p, "receiver_distance_m"), pi / 2.0);
    const double pt = num(p, "transmit_power_w");
    const auto counts = numbers(p, "element_counts");
    const auto discrete = power_scaling_curve(UlaGrowth{num(c.geometry, "spacing_m")}, rx, carrier, counts, pt);
    const auto lengths = numbers(p, "strip_lengths_m");
    const auto cont = continuous_power_scaling(StripGrowth{num(p, "strip_height_m"), num(p, "strip_patch_m")}, rx,
                                               carrier, lengths, pt);
    return {csv_file(c, "discrete", scaling_to_csv(discrete)), csv_file(c, "continuous", scaling_to_csv(cont))};
}

// Facing planar arrays in parallel y-z planes separated along x.
inline std::pair<ArrayGeometry, ArrayGeometry> facing_upas(const ScenarioConfig& c, double d) {
    const auto tx = make_uniform_planar_array(count(c.geometry, "rows"), count(c.geometry, "cols"),
                                              num(c.geometry, "spacing_m"));
    return {tx, tx.translated(Vec3(d, 0.0, 0.0))};
}

// Side length entering the discrete DoF bound: the aperture of a line array,
// the geometric-mean side of a planar one.
inline double upa_length(const ScenarioConfig& c) {
    const double s = num(c.geometry, "spacing_m");
    const double ly = static_cast<double>(count(c.geometry, "cols") - 1) * s;
    const double lz = static_cast<double>(count(c.geometry, "rows") - 1) * s;
    if (ly == 0.0 || lz == 0.0) return std::max(ly, lz);
    return std::sqrt(ly * lz);
}

inline std::vector<OutputFile> run_dof(const ScenarioConfig& c, unsigned threads) {
    const Carrier carrier = c.carrier();
    const auto& p = c.params;
    const auto dists = numbers(p, "distances_m");
    const double thr = num(p, "threshold");
    const double len = upa_length(c);
    const double nel = static_cast<double>(count(c.geometry, "rows") * count(c.geometry, "cols"));
    std::vector<DofReport> reports(dists.size());
    parallel_for(dists.size(), threads, [&](std::size_t i) {
        const auto [tx, rx] = facing_upas(c, dists[i]);
        reports[i] = effective_dof(nusw_mimo_channel(tx, rx, carrier), thr);
    });
    csv::Table sweep({"distance_m", "empirical_dof", "bound_dof", "integer_bound"});
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const double bound = dof_bound_discrete(nel, nel, len > 0 ? len : carrier.wavelength(),
                                                len > 0 ? len : carrier.wavelength(), dists[i], carrier.wavelength());
        sweep.add_row({dists[i], static_cast<std::int64_t>(reports[i].empirical_dof), bound,
                       static_cast<std::int64_t>(integer_dof(bound))});
    }
    const auto [tx, rx] = facing_upas(c, num(p, "sigma_distance_m"));
    const auto sigma = effective_dof(nusw_mimo_channel(tx, rx, carrier), thr);
    return {csv_file(c, "sweep", sweep), csv_file(c, "sigma", singular_values_to_csv(sigma))};
}

inline ApertureSurface square_surface(double side, std::size_t patches, double x) {
    return ApertureSurface(Vec3(x, 0.0, 0.0), side, side, patches, patches);
}

inline std::vector<OutputFile> run_modes(const ScenarioConfig& c, unsigned threads) {
    const Carrier carrier = c.carrier();
    const auto& g = c.geometry;
    const auto dists = numbers(c.params, "distances_m");
    const double thr = num(c.params, "threshold");
    const std::size_t np = count(g, "patches_per_side");
    csv::Table sweep({"distance_m", "modes", "bound", "ratio"});
    std::optional<DofReport> first;
    for (double d : dists) {
        const auto tx = square_surface(num(g, "tx_side_m"), np, 0.0);
        const auto rx = square_surface(num(g, "rx_side_m"), np, d);
        auto rep = communication_modes(greens_operator(tx, rx, carrier, threads), thr);
        const double bound = dof_bound_continuous(tx.volume(), rx.volume(), d, carrier.wavelength(), tx.depth(), rx.depth());
        sweep.add_row({d, static_cast<std::int64_t>(rep.empirical_dof), bound,
                       static_cast<double>(rep.empirical_dof) / bound});
        if (!first) first = std::move(rep);
    }
    return {csv_file(c, "sweep", sweep), csv_file(c, "sigma", singular_values_to_csv(*first))};
}

inline std::vector<OutputFile> run_beamsplit(const ScenarioConfig& c, unsigned threads) {
    const auto array = ula(c);
    const auto& p = c.params;
    const Carrier carrier = c.carrier();
    const Vec3 user = polar_point(num(p, "focus_range_m"), deg2rad(num(p, "focus_angle_deg")));
    const WidebandParams wb{c.frequency_hz, num(p, "bandwidth_hz"), count(p, "subcarriers")};
    const auto channels = wideband_channels(array, user, wb.center_hz, wb.bandwidth_hz, wb.subcarriers, threads);
    const std::vector<Vec3> users{user};
    const auto ps = beam_split_gain(make_ps_only(array, user, carrier), 0, channels);
    const auto fc = beam_split_gain(
        design_ttd_hybrid(HybridKind::FullyConnected, array, users, count(p, "n_rf"), count(p, "ttd_per_rf"), wb), 0,
        channels);
    const auto sc = beam_split_gain(
        design_ttd_hybrid(HybridKind::SubConnected, array, users, count(p, "n_rf"), count(p, "ttd_per_rf"), wb), 0,
        channels);
    csv::Table t({"frequency_hz", "ps_only", "fc_ttd", "sc_ttd"});
    for (std::size_t m = 0; m < ps.size(); ++m) t.add_row({channels.frequencies_hz[m], ps[m], fc[m], sc[m]});
    return {csv_file(c, "gain", t)};
}

inline std::vector<OutputFile> run_hfn(const ScenarioConfig& c) {
    const auto array = ula(c);
    const auto& p = c.params;
    const Carrier carrier = c.carrier();
    std::vector<HfnUser> users;
    std::vector<Vec3> locations;
    for (const auto& u : p.at("users")) {
        const Vec3 loc = polar_point(num(u, "range_m"), deg2rad(num(u, "angle_deg")));
        users.push_back({loc, u.at("qos") == "delay_sensitive" ? Qos::DelaySensitive : Qos::HighRate});
        locations.push_back(loc);
    }
    const std::size_t n_rf = count(p, "n_rf");
    const auto hfn = partition_hfn(array, users, n_rf, carrier);
    csv::Table part({"chain", "role", "user", "first_antenna", "antennas", "block_rayleigh_m"});
    for (std::size_t i = 0; i < hfn.chains.size(); ++i) {
        const auto& ch = hfn.chains[i];
        const double rd = ch.antennas.empty()
                              ? 0.0
                              : rayleigh_distance(array.subarray(ch.antennas.front(), ch.antennas.size()).aperture(),
                                                  carrier.wavelength());
        part.add_row({static_cast<std::int64_t>(i), std::string(to_string(ch.role)),
                      ch.user ? csv::Cell(static_cast<std::int64_t>(*ch.user)) : csv::Cell(std::string()),
                      ch.antennas.empty() ? csv::Cell(std::string()) : csv::Cell(static_cast<std::int64_t>(ch.antennas.front())),
                      static_cast<std::int64_t>(ch.antennas.size()), rd});
    }
    const UnitPowers unit{num(p, "ps_w"), num(p, "ttd_w"), num(p, "rf_w")};
    const WidebandParams nb{c.frequency_hz, 0.0, 1};
    const std::size_t ttd = count(p, "ttd_per_rf");
    csv::Table cost({"architecture", "n_rf", "n_ttd", "n_ps", "power_w"});
    auto add_cost = [&](const char* name, const HybridStructure& s) {
        const auto hc = hardware_cost(s, unit);
        cost.add_row({std::string(name), static_cast<std::int64_t>(hc.n_rf), static_cast<std::int64_t>(hc.n_ttd),
                      static_cast<std::int64_t>(hc.n_ps), hc.power_w});
    };
    add_cost("hfn", hfn);
    add_cost("fully_connected", design_ttd_hybrid(HybridKind::FullyConnected, array, locations, n_rf, ttd, nb));
    add_cost("sub_connected", design_ttd_hybrid(HybridKind::SubConnected, array, locations, n_rf, ttd, nb));
    return {csv_file(c, "partition", part), csv_file(c, "cost", cost),
            {c.kind + "_structure.json", nlohmann::json(hfn).dump(2) + "\n"}};
}

inline std::vector<OutputFile> run_sense(const ScenarioConfig& c, unsigned threads) {
    const auto array = ula(c);
    const auto& p = c.params;
    const Carrier carrier = c.carrier();
    std::vector<Target> targets;
    for (const auto& t : p.at("targets"))
        targets.push_back({num(t, "range_m"), deg2rad(num(t, "angle_deg")), cdouble(num(t, "amplitude"), 0.0)});
    const auto snaps = simulate_snapshots(array, targets, count(p, "snapshots"), num(p, "snr_db"), c.seed, carrier, threads);
    const std::size_t nd = step_count(num(p, "distance_min_m"), num(p, "distance_max_m"), num(p, "distance_step_m"), "");
    const std::size_t na = step_count(num(p, "angle_min_deg"), num(p, "angle_max_deg"), num(p, "angle_step_deg"), "");
    std::vector<double> angles(na), dists(nd);
    for (std::size_t j = 0; j < na; ++j)
        angles[j] = deg2rad(num(p, "angle_min_deg") + static_cast<double>(j) * num(p, "angle_step_deg"));
    for (std::size_t i = 0; i < nd; ++i)
        dists[i] = num(p, "distance_min_m") + static_cast<double>(i) * num(p, "distance_step_m");
    const std::size_t k = count(p, "k_targets");
    const auto spectrum = music_spectrum(snaps, k, PolarAxes{angles, dists}, array, carrier, threads);
    const auto est = estimate_targets(spectrum, k);
    return {csv_file(c, "spectrum", spectrum_to_csv(spectrum)), csv_file(c, "estimates", estimates_to_csv(est))};
}

inline std::vector<OutputFile> run_secrecy(const ScenarioConfig& c, unsigned threads) {
    const auto array = ula(c);
    const auto& p = c.params;
    const Carrier carrier = c.carrier();
    const Vec3 bob = polar_point(num(p, "bob_range_m"), deg2rad(num(p, "bob_angle_deg")));
    const double pt = num(p, "transmit_power_w");
    const PlsScenario s{array, carrier, bob, std::nullopt, pt,
                        noise_for_bob_snr(array, bob, carrier, pt, num(p, "bob_snr_db"))};
    const auto d = numbers(p, "eve_distances_m");
    const std::vector<SecrecyCurve> curves{secrecy_sweep(s, d, SecrecyMode::NearFocus, threads),
                                           secrecy_sweep(s, d, SecrecyMode::FarSteer, threads)};
    return {csv_file(c, "curve", secrecy_to_csv(curves))};
}

} // namespace detail

/// Runs the experiment and returns every output in memory; nothing is written.
inline std::vector<OutputFile> render_outputs(const ScenarioConfig& c, unsigned threads = 1) {
    threads = std::max(1u, threads);
    try {
        if (c.kind == "regions") return detail::run_regions(c);
        if (c.kind == "pattern") return detail::run_pattern(c, threads);
        if (c.kind == "scaling") return detail::run_scaling(c);
        if (c.kind == "dof") return detail::run_dof(c, threads);
        if (c.kind == "modes") return detail::run_modes(c, threads);
        if (c.kind == "beamsplit") return detail::run_beamsplit(c, threads);
        if (c.kind == "hfn") return detail::run_hfn(c);
        if (c.kind == "sense") return detail::run_sense(c, threads);
        if (c.kind == "secrecy") return detail::run_secrecy(c, threads);
    } catch (const Error& e) {
        throw Error(e.code(), c.kind + " experiment failed: " + e.what());
    }
    throw Error(Errc::configuration, "unknown experiment kind '" + c.kind + "'");
}

/// Renders, writes the outputs into `output_dir`, then writes manifest.json last.
inline RunManifest run_scenario(const ScenarioConfig& c, unsigned threads = 1) {
    const auto start = std::chrono::steady_clock::now();
    const auto files = render_outputs(c, threads);
    namespace fs = std::filesystem;
    const fs::path dir(c.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(Errc::io, "cannot create output directory '" + c.output_dir + "'");
    RunManifest m;
    m.resolved_config = c.to_json();
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) throw Error(Errc::io, "cannot write '" + (dir / name).string() + "'");
    };
    for (const auto& f : files) {
        write(f.name, f.content);
        m.files.push_back({f.name, sha256_hex(f.content), f.content.size()});
    }
    m.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write("manifest.json", m.to_json().dump(2) + "\n");
    return m;
}

/// Process exit status for each error category.
inline int exit_code(Errc e) {
    switch (e) {
    case Errc::configuration: return 2;
    case Errc::invalid_argument: return 3;
    case Errc::singular_geometry: return 4;
    case Errc::degenerate_channel: return 5;
    case Errc::diagnostic: return 6;
    case Errc::io: return 7;
    }
    return 1;
}

} // namespace nfkit::scenario

#endif
