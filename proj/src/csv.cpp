#include "bmfg/csv.hpp"

#include "bmfg/errors.hpp"

#include <charconv>
#include <fstream>

#include <fmt/format.h>

namespace bmfg::csv {

std::string number(double v) { return fmt::format("{:.15e}", v); }

Writer::Writer(const std::string& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) throw IoError("cannot open '" + path + "' for writing");
}

Writer::~Writer() {
    if (file_) std::fclose(file_);
}

void Writer::header(std::initializer_list<std::string_view> columns) {
    bool first = true;
    for (auto c : columns) {
        if (!first) std::fputc(',', file_);
        std::fwrite(c.data(), 1, c.size(), file_);
        first = false;
    }
    std::fputc('\n', file_);
}

void Writer::comment(std::string_view text) {
    std::fputs("# ", file_);
    std::fwrite(text.data(), 1, text.size(), file_);
    std::fputc('\n', file_);
}

void Writer::row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) std::fputc(',', file_);
        auto s = number(v);
        std::fwrite(s.data(), 1, s.size(), file_);
        first = false;
    }
    std::fputc('\n', file_);
}

void Writer::cells(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) std::fputc(',', file_);
        std::fwrite(values[i].data(), 1, values[i].size(), file_);
    }
    std::fputc('\n', file_);
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto next = line.find(sep, pos);
        out.emplace_back(trim(line.substr(pos, next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

double parse_double(std::string_view token, std::string_view what) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, token));
    return v;
}

Table read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        auto view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            if (t.header.empty()) t.comments.emplace_back(trim(view.substr(1)));
            continue;
        }
        if (t.header.empty()) {
            t.header = split(view, ',');
            continue;
        }
        t.rows.push_back(split(view, ','));
        if (t.rows.back().size() != t.header.size())
            throw ConfigError(fmt::format("{}: row {} has {} columns, header has {}", path,
                                          t.rows.size(), t.rows.back().size(), t.header.size()));
    }
    if (t.header.empty()) throw ConfigError("'" + path + "' has no header line");
    return t;
}

} // namespace bmfg::csv
