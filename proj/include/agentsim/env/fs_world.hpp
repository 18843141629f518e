#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "agentsim/env/world.hpp"

namespace agentsim {

// File tree with a working directory. Fixture schema:
//   data.tree: nested maps; a directory is an object, a file is its content
//   string. Example: {"home": {"alice": {"notes.txt": "meeting at 10"}}}
class FsWorld : public World {
public:
    explicit FsWorld(const ScenarioFixture& fixture) {
        if (fixture.workload != "file_system")
            throw ConfigError("fixture is not a file_system fixture: " + fixture.workload);
        root_ = fixture.data.value("tree", json::object());
        if (!root_.is_object()) throw ConfigError("file_system fixture tree must be an object");
        rules_ = RuleSet::from_json(fixture.data.value("rules", json::array()));
        build_registry();
    }

    const std::string& workload() const override {
        static const std::string name = "file_system";
        return name;
    }
    const ToolRegistry& registry() const override { return registry_; }
    const RuleSet& rules() const override { return rules_; }

    json invoke_tool(const std::string& tool, const json& args) override {
        if (tool == "cd") {
            const std::string target = resolve(cwd_, args.at("path").get<std::string>());
            const json* node = find(target);
            if (!node) throw ToolFault{"no such file or directory: " + args["path"].get<std::string>()};
            if (!node->is_object()) throw ToolFault{"not a directory: " + args["path"].get<std::string>()};
            cwd_ = target;
            return json{{"ok", true}};
        }
        if (tool == "pwd") return json{{"working_directory", cwd_}};
        if (tool == "ls") {
            const std::string target =
                args.contains("path") ? resolve(cwd_, args["path"].get<std::string>()) : cwd_;
            const json* node = find(target);
            if (!node) throw ToolFault{"no such file or directory: " + target};
            if (!node->is_object()) throw ToolFault{"not a directory: " + target};
            return json{{"entries", listing(*node)}};
        }
        if (tool == "cat") {
            const std::string target = resolve(cwd_, args.at("path").get<std::string>());
            const json* node = find(target);
            if (!node) throw ToolFault{"no such file or directory: " + args["path"].get<std::string>()};
            if (node->is_object()) throw ToolFault{"is a directory: " + target};
            return json{{"content", node->get<std::string>()}};
        }
        if (tool == "mkdir") {
            const std::string target = resolve(cwd_, args.at("path").get<std::string>());
            if (find(target)) throw ToolFault{"already exists: " + target};
            json* parent = find_mutable(parent_of(target));
            if (!parent || !parent->is_object()) throw ToolFault{"no such directory: " + parent_of(target)};
            (*parent)[basename_of(target)] = json::object();
            return json{{"created", target}};
        }
        if (tool == "write_file") {
            const std::string target = resolve(cwd_, args.at("path").get<std::string>());
            const std::string content = args.at("content").get<std::string>();
            json* existing = find_mutable(target);
            if (existing && existing->is_object()) throw ToolFault{"is a directory: " + target};
            if (existing && existing->get<std::string>() == content)
                throw ToolFault{"operation has no effect: " + target};
            json* parent = find_mutable(parent_of(target));
            if (!parent || !parent->is_object()) throw ToolFault{"no such directory: " + parent_of(target)};
            (*parent)[basename_of(target)] = content;
            return json{{"written", target}, {"bytes", static_cast<std::int64_t>(content.size())}};
        }
        if (tool == "cp" || tool == "mv") {
            const std::string src = resolve(cwd_, args.at("source").get<std::string>());
            const std::string dst = resolve(cwd_, args.at("destination").get<std::string>());
            if (src == dst) throw ToolFault{"source and destination are the same: " + src};
            const json* node = find(src);
            if (!node) throw ToolFault{"no such file or directory: " + src};
            json value = *node;
            std::string final_dst = dst;
            const json* dst_node = find(dst);
            if (dst_node && dst_node->is_object()) final_dst = dst == "/" ? "/" + basename_of(src)
                                                                          : dst + "/" + basename_of(src);
            if (final_dst == src) throw ToolFault{"source and destination are the same: " + src};
            const json* prior = find(final_dst);
            if (prior && *prior == value && tool == "cp")
                throw ToolFault{"operation has no effect: " + final_dst};
            if (is_prefix_dir(src, final_dst))
                throw ToolFault{"cannot place a directory inside itself: " + src};
            json* parent = find_mutable(parent_of(final_dst));
            if (!parent || !parent->is_object())
                throw ToolFault{"no such directory: " + parent_of(final_dst)};
            (*parent)[basename_of(final_dst)] = value;
            if (tool == "mv") {
                json* src_parent = find_mutable(parent_of(src));
                src_parent->erase(basename_of(src));
                if (cwd_ == src || is_prefix_dir(src, cwd_)) cwd_ = "/";
                return json{{"moved", src}, {"to", final_dst}};
            }
            return json{{"copied", src}, {"to", final_dst}};
        }
        if (tool == "rm") {
            const std::string target = resolve(cwd_, args.at("path").get<std::string>());
            if (target == "/") throw ToolFault{"cannot remove the root directory"};
            const json* node = find(target);
            if (!node) throw ToolFault{"no such file or directory: " + target};
            if (node->is_object() && !node->empty()) throw ToolFault{"directory not empty: " + target};
            json* parent = find_mutable(parent_of(target));
            parent->erase(basename_of(target));
            if (cwd_ == target || is_prefix_dir(target, cwd_)) cwd_ = "/";
            return json{{"removed", target}};
        }
        if (tool == "submit_answer") return json{{"recorded", args.value("answer", json())}};
        throw ToolFault{"unknown tool: " + tool};
    }

    json canonical_state() const override { return json{{"tree", root_}}; }
    json agent_state() const override { return json{{"working_directory", cwd_}}; }

    json position_listing() const override {
        const json* node = find(cwd_);
        return node && node->is_object() ? listing(*node) : json::array();
    }

    std::vector<std::string> neighborhood(int depth) const override {
        std::vector<std::string> out;
        const json* node = find(cwd_);
        if (node && node->is_object()) walk(*node, "", depth, out);
        return out;
    }

    const std::string& cwd() const { return cwd_; }

    // Normalizes `path` against `base`: absolute paths stand alone, relative
    // segments stack, "." and ".." collapse.
    static std::string resolve(const std::string& base, const std::string& path) {
        std::vector<std::string> parts;
        auto push_segments = [&parts](const std::string& p) {
            std::size_t pos = 0;
            while (pos <= p.size()) {
                std::size_t next = p.find('/', pos);
                const std::string seg =
                    p.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
                pos = next == std::string::npos ? p.size() + 1 : next + 1;
                if (seg.empty() || seg == ".") continue;
                if (seg == "..") {
                    if (!parts.empty()) parts.pop_back();
                } else {
                    parts.push_back(seg);
                }
            }
        };
        if (path.empty() || path[0] != '/') push_segments(base);
        push_segments(path);
        std::string out = "/";
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) out += "/";
            out += parts[i];
        }
        return out;
    }

private:
    void build_registry() {
        auto tool = [](const std::string& name, const std::string& desc,
                       std::map<std::string, ParamSpec> params) {
            ToolSpec spec;
            spec.name = name;
            spec.description = desc;
            spec.parameters = std::move(params);
            return spec;
        };
        ToolSpec cd = tool("cd", "Change the working directory.", {{"path", {"path", true}}});
        cd.exploration = true;
        cd.changes_agent_state = true;
        registry_.add(cd);
        ToolSpec pwd = tool("pwd", "Report the working directory.", {});
        pwd.exploration = true;
        registry_.add(pwd);
        ToolSpec ls = tool("ls", "List a directory (working directory by default).",
                           {{"path", {"path", false}}});
        ls.exploration = true;
        registry_.add(ls);
        ToolSpec cat = tool("cat", "Read a file.", {{"path", {"path", true}}});
        cat.exploration = true;
        registry_.add(cat);
        ToolSpec mkdir = tool("mkdir", "Create a directory.", {{"path", {"path", true}}});
        mkdir.mutating = true;
        registry_.add(mkdir);
        ToolSpec write = tool("write_file", "Create or overwrite a file with content.",
                              {{"path", {"path", true}}, {"content", {"string", true}}});
        write.mutating = true;
        registry_.add(write);
        ToolSpec cp = tool("cp", "Copy a file or directory.",
                           {{"source", {"path", true}}, {"destination", {"path", true}}});
        cp.mutating = true;
        registry_.add(cp);
        ToolSpec mv = tool("mv", "Move a file or directory.",
                           {{"source", {"path", true}}, {"destination", {"path", true}}});
        mv.mutating = true;
        registry_.add(mv);
        ToolSpec rm = tool("rm", "Remove a file or an empty directory.", {{"path", {"path", true}}});
        rm.mutating = true;
        registry_.add(rm);
        ToolSpec submit = tool("submit_answer", "Deliver the final answer.",
                               {{"answer", {"string", true}}});
        registry_.add(submit);
    }

    // Directory listing as records so aggregate offloading has fields to work
    // with: name, type, size (bytes for files, entry count for directories).
    static json listing(const json& dir) {
        json entries = json::array();
        for (const auto& [name, node] : dir.items()) {
            if (node.is_object())
                entries.push_back(json{{"name", name},
                                       {"type", "dir"},
                                       {"size", static_cast<std::int64_t>(node.size())}});
            else
                entries.push_back(json{{"name", name},
                                       {"type", "file"},
                                       {"size", static_cast<std::int64_t>(node.get<std::string>().size())}});
        }
        return entries;
    }

    static void walk(const json& dir, const std::string& prefix, int depth,
                     std::vector<std::string>& out) {
        if (depth <= 0) return;
        for (const auto& [name, node] : dir.items()) {
            if (node.is_object()) {
                out.push_back(prefix + name + "/");
                walk(node, prefix + name + "/", depth - 1, out);
            } else {
                out.push_back(prefix + name);
            }
        }
    }

    static std::string parent_of(const std::string& path) {
        const auto slash = path.find_last_of('/');
        return slash == 0 ? "/" : path.substr(0, slash);
    }
    static std::string basename_of(const std::string& path) {
        return path.substr(path.find_last_of('/') + 1);
    }
    static bool is_prefix_dir(const std::string& dir, const std::string& path) {
        return path.size() > dir.size() && path.compare(0, dir.size(), dir) == 0 &&
               path[dir.size()] == '/';
    }

    const json* find(const std::string& path) const {
        const json* cur = &root_;
        if (path == "/") return cur;
        std::size_t pos = 1;
        while (pos <= path.size()) {
            std::size_t next = path.find('/', pos);
            const std::string seg =
                path.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            pos = next == std::string::npos ? path.size() + 1 : next + 1;
            if (seg.empty()) continue;
            if (!cur->is_object() || !cur->contains(seg)) return nullptr;
            cur = &(*cur)[seg];
        }
        return cur;
    }
    json* find_mutable(const std::string& path) {
        return const_cast<json*>(static_cast<const FsWorld*>(this)->find(path));
    }

    json root_;
    std::string cwd_ = "/";
    ToolRegistry registry_;
    RuleSet rules_;
};

}  // namespace agentsim
