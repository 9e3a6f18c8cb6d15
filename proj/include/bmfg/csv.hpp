#pragma once

#include <cstdio>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace bmfg::csv {

/// Scientific notation, 16 significant digits: stable across runs and platforms
/// that share an IEEE-754 libc.
std::string number(double v);

/// Comma-separated writer with LF line endings. Throws ConfigError when the
/// file cannot be opened.
class Writer {
public:
    explicit Writer(const std::string& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void header(std::initializer_list<std::string_view> columns);
    void comment(std::string_view text);
    void row(std::initializer_list<double> values);
    /// Mixed row of already-formatted cells.
    void cells(const std::vector<std::string>& values);

private:
    std::FILE* file_ = nullptr;
    std::string path_;
};

struct Table {
    std::vector<std::string> comments;  // lines that started with '#', without the '#'
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file; '#' lines before the header are collected as comments.
Table read(const std::string& path);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);
/// Strict decimal parse of the whole token; throws ConfigError naming `what`.
double parse_double(std::string_view token, std::string_view what);

} // namespace bmfg::csv
