#pragma once

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>
#include <string>

#include "agentsim/common.hpp"
#include "agentsim/errors.hpp"

namespace agentsim {

// Converts a parsed YAML node into json. Scalars are re-typed the way YAML 1.1
// readers do: ints, floats, bools, null, else string.
inline json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
            return json();
        case YAML::NodeType::Scalar: {
            const std::string& s = node.Scalar();
            if (node.Tag() == "!") return s;  // quoted scalar stays a string
            try {
                if (s == "true") return true;
                if (s == "false") return false;
                if (s == "null" || s == "~") return json();
                std::size_t used = 0;
                if (!s.empty() && s.find_first_not_of("+-0123456789") == std::string::npos) {
                    const long long v = std::stoll(s, &used);
                    if (used == s.size()) return v;
                }
                if (!s.empty() && s.find_first_not_of("+-0123456789.eE") == std::string::npos &&
                    s.find_first_of("0123456789") != std::string::npos) {
                    const double v = std::stod(s, &used);
                    if (used == s.size()) return v;
                }
            } catch (const std::exception&) {
            }
            return s;
        }
        case YAML::NodeType::Sequence: {
            json out = json::array();
            for (const auto& item : node) out.push_back(yaml_to_json(item));
            return out;
        }
        case YAML::NodeType::Map: {
            json out = json::object();
            for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return out;
        }
        default:
            return json();
    }
}

// Loads a .yaml/.yml/.json config file into json.
inline json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const bool is_json = path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    if (is_json) {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    try {
        return yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Emits json as YAML. Used by the fixture exporter so shipped configs stay in
// the documented format.
inline void json_to_yaml(const json& value, YAML::Emitter& out) {
    switch (value.type()) {
        case json::value_t::object:
            out << YAML::BeginMap;
            for (const auto& [key, item] : value.items()) {
                out << YAML::Key << key << YAML::Value;
                json_to_yaml(item, out);
            }
            out << YAML::EndMap;
            break;
        case json::value_t::array:
            out << YAML::BeginSeq;
            for (const auto& item : value) json_to_yaml(item, out);
            out << YAML::EndSeq;
            break;
        case json::value_t::string:
            out << value.get<std::string>();
            break;
        case json::value_t::boolean:
            out << value.get<bool>();
            break;
        case json::value_t::number_integer:
        case json::value_t::number_unsigned:
            out << value.get<long long>();
            break;
        case json::value_t::number_float:
            out << value.get<double>();
            break;
        default:
            out << YAML::Null;
            break;
    }
}

inline std::string json_to_yaml_string(const json& value) {
    YAML::Emitter out;
    json_to_yaml(value, out);
    return std::string(out.c_str()) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace agentsim
