#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dpre {

// Round-trip text for a double ("%.17g"); inf and nan spelled out.
std::string fmt_num(double v);
std::string fmt_num(std::int64_t v);
inline std::string fmt_num(int v) { return fmt_num(static_cast<std::int64_t>(v)); }
inline std::string fmt_num(std::size_t v) { return fmt_num(static_cast<std::int64_t>(v)); }

// Tab-separated table followed by a key/value summary block. The summary is
// part of the same file, so every reported number is in the machine table.
class Report {
public:
    explicit Report(std::string command) : command_(std::move(command)) {}

    const std::string& command() const { return command_; }
    void set_config(std::string one_line_json) { config_ = std::move(one_line_json); }
    void set_columns(std::vector<std::string> cols) { columns_ = std::move(cols); }
    void add_row(std::vector<std::string> cells);
    void add_table_text(const std::string& tsv_with_header);

    void put(const std::string& key, double v) { summary_.emplace_back(key, fmt_num(v)); }
    void put(const std::string& key, int v) { summary_.emplace_back(key, fmt_num(v)); }
    void put(const std::string& key, std::int64_t v) { summary_.emplace_back(key, fmt_num(v)); }
    void put(const std::string& key, std::size_t v) { summary_.emplace_back(key, fmt_num(v)); }
    void put(const std::string& key, bool v) { summary_.emplace_back(key, v ? "true" : "false"); }
    void put(const std::string& key, const std::string& v) { summary_.emplace_back(key, v); }
    void put(const std::string& key, const char* v) { summary_.emplace_back(key, v); }

    const std::vector<std::pair<std::string, std::string>>& summary() const { return summary_; }
    std::string value(const std::string& key) const;

    std::string table_text() const;    // config line, header, rows, summary block
    std::string summary_text() const;  // key=value lines
    std::string summary_json() const;  // {"command", "config", "summary": {...}}

    // Writes <dir>/<stem>.tsv and returns the path.
    std::string write(const std::string& dir, const std::string& stem) const;

private:
    std::string command_;
    std::string config_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::pair<std::string, std::string>> summary_;
};

}  // namespace dpre
