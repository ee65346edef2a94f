#pragma once

#include "restrictlab/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace restrictlab::cli {

/// Output could not be written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Writes through a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw IoError(tmp.string() + ": write failed");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(path.string() + ": rename failed");
    }
}

/// %.17g: enough digits to round-trip every double.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw Error("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                                                        std::to_string(header_.size()));
        rows_.push_back(std::move(cells));
        return *this;
    }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    std::size_t size() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Named checks, in insertion order, each recorded once.
class CheckList {
public:
    void add(const std::string& name, double value, double threshold, bool pass, const std::string& relation = "<=") {
        for (const auto& c : checks_) {
            if (c["name"] == name) throw Error("check '" + name + "' recorded twice");
        }
        checks_.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"relation", relation}, {"pass", pass}});
        all_ = all_ && pass;
    }
    void at_most(const std::string& name, double value, double threshold) { add(name, value, threshold, value <= threshold); }
    void below(const std::string& name, double value, double threshold) { add(name, value, threshold, value < threshold, "<"); }
    void at_least(const std::string& name, double value, double threshold) {
        add(name, value, threshold, value >= threshold, ">=");
    }
    void above(const std::string& name, double value, double threshold) { add(name, value, threshold, value > threshold, ">"); }

    bool all_pass() const { return all_; }
    bool empty() const { return checks_.empty(); }
    const nlohmann::ordered_json& json() const { return checks_; }

private:
    nlohmann::ordered_json checks_ = nlohmann::ordered_json::array();
    bool all_ = true;
};

} // namespace restrictlab::cli
