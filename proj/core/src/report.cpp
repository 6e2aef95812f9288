#include "dpre/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dpre/errors.hpp"
#include "json.hpp"

namespace dpre {

std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_num(std::int64_t v) { return std::to_string(v); }

void Report::add_row(std::vector<std::string> cells) {
    if (!columns_.empty() && cells.size() != columns_.size())
        throw std::logic_error("row width does not match the header");
    rows_.push_back(std::move(cells));
}

void Report::add_table_text(const std::string& tsv) {
    std::istringstream is(tsv);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, '\t')) cells.push_back(cell);
        if (header) {
            columns_ = cells;
            header = false;
        } else {
            add_row(std::move(cells));
        }
    }
}

std::string Report::value(const std::string& key) const {
    for (const auto& [k, v] : summary_)
        if (k == key) return v;
    throw std::out_of_range("no summary key " + key);
}

std::string Report::table_text() const {
    std::ostringstream os;
    os << "# command=" << command_ << '\n';
    os << "# config=" << config_ << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "\t" : "") << columns_[i];
    if (!columns_.empty()) os << '\n';
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "\t" : "") << r[i];
        os << '\n';
    }
    os << "# summary\n";
    for (const auto& [k, v] : summary_) os << "# " << k << '\t' << v << '\n';
    return os.str();
}

std::string Report::summary_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : summary_) os << k << '=' << v << '\n';
    return os.str();
}

std::string Report::summary_json() const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    try {
        j["config"] = nlohmann::ordered_json::parse(config_.empty() ? "{}" : config_);
    } catch (const nlohmann::json::exception&) {
        j["config"] = config_;
    }
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    // Numbers stay as their exact text so the JSON matches the table byte for byte.
    for (const auto& [k, v] : summary_) s[k] = v;
    j["summary"] = s;
    return j.dump(2) + "\n";
}

std::string Report::write(const std::string& dir, const std::string& stem) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
    const std::string path = (std::filesystem::path(dir) / (stem + ".tsv")).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + path);
    os << table_text();
    return path;
}

}  // namespace dpre
