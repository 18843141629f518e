#pragma once

#include <boost/rational.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "agentsim/errors.hpp"

namespace agentsim {

// Plain nlohmann::json keeps object keys sorted, which gives us the canonical
// sorted-key serialization for free; dump() is already minimal-whitespace.
using json = nlohmann::json;

// Exact rational arithmetic for graph weights and thresholds.
using Fraction = boost::rational<long long>;

// Canonical text form of a payload: raw characters for strings, compact
// sorted-key JSON for everything else.
inline std::string canonical_text(const json& payload) {
    if (payload.is_string()) return payload.get<std::string>();
    return payload.dump();
}

// ceil(chars / 4) of the canonical text. Empty payloads cost zero.
inline std::int64_t estimate_tokens(const json& payload) {
    const std::string text = canonical_text(payload);
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

inline std::int64_t estimate_tokens(const std::string& text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

// FNV-1a 64-bit over a string. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return std::string(buf);
}

// Decimal rendering of a fraction with up to six significant digits and no
// trailing zeros; exact decimals (0.1, 0.5) print exactly.
inline std::string format_fraction(const Fraction& f) {
    const double v = static_cast<double>(f.numerator()) / static_cast<double>(f.denominator());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
}

// Parses "3/10", "0.3", "1", all into an exact fraction.
inline Fraction parse_fraction(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            const long long num = std::stoll(text.substr(0, slash));
            const long long den = std::stoll(text.substr(slash + 1));
            if (den == 0) throw ConfigError("fraction with zero denominator: " + text);
            return Fraction(num, den);
        }
        const auto dot = text.find('.');
        if (dot == std::string::npos) return Fraction(std::stoll(text), 1);
        const std::string whole = text.substr(0, dot);
        const std::string frac = text.substr(dot + 1);
        long long den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        long long num = std::stoll(whole.empty() ? "0" : whole) * den;
        const long long sign = (!whole.empty() && whole[0] == '-') ? -1 : 1;
        num += sign * (frac.empty() ? 0 : std::stoll(frac));
        return Fraction(num, den);
    } catch (const std::invalid_argument&) {
        throw ConfigError("malformed fraction: " + text);
    } catch (const std::out_of_range&) {
        throw ConfigError("fraction out of range: " + text);
    }
}

inline Fraction fraction_from_json(const json& v) {
    if (v.is_string()) return parse_fraction(v.get<std::string>());
    if (v.is_number_integer()) return Fraction(v.get<long long>(), 1);
    if (v.is_number_float()) return parse_fraction(format_double(v.get<double>()));
    throw ConfigError("expected a fraction, got: " + v.dump());
}

// Extracts a value by dot path with optional [*] projection over one array
// level, e.g. "cases[*].handle_time_hours" or "flights". Returns null when the
// path does not resolve.
inline json extract_path(const json& root, const std::string& path) {
    if (path.empty()) return root;
    const json* cur = &root;
    std::size_t pos = 0;
    while (pos < path.size()) {
        std::size_t dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        pos = dot == std::string::npos ? path.size() : dot + 1;
        bool project = false;
        if (key.size() > 3 && key.compare(key.size() - 3, 3, "[*]") == 0) {
            project = true;
            key = key.substr(0, key.size() - 3);
        }
        if (!cur->is_object() || !cur->contains(key)) return json();
        cur = &(*cur)[key];
        if (project) {
            if (!cur->is_array()) return json();
            json out = json::array();
            const std::string rest = pos < path.size() ? path.substr(pos) : std::string();
            for (const auto& item : *cur) {
                json v = extract_path(item, rest);
                if (!v.is_null()) out.push_back(v);
            }
            return out;
        }
    }
    return *cur;
}

// Deterministic uniform [0,1) draw from a raw 64-bit generator output.
inline double u01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
}

// RFC 4180 quoting: wrap when the field contains a comma, quote, or newline.
inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace agentsim
