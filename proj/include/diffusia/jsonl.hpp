#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace diffusia {

using json = nlohmann::json;

// Line-delimited JSON: one object per line, UTF-8.
// Callback receives (1-based line number, parsed object).
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": malformed record: " + e.what());
        }
        fn(lineno, obj);
    }
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
    }
    void write(const json& obj) { out_ << obj.dump() << "\n"; }

private:
    std::ofstream out_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace diffusia
