#ifndef NFKIT_CSV_HPP
#define NFKIT_CSV_HPP

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

namespace nfkit::csv {

// Shortest round-trip representation; output is identical on every run.
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

// RFC 4180 field quoting.
inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

using Cell = std::variant<double, std::int64_t, std::string>;

// In-memory table; rendered with LF line endings.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row) { rows_.push_back(std::move(row)); }
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<std::string>& header() const noexcept { return header_; }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& row : rows_) {
            std::vector<std::string> fields;
            fields.reserve(row.size());
            for (const auto& cell : row) {
                if (const auto* d = std::get_if<double>(&cell))
                    fields.push_back(format_number(*d));
                else if (const auto* i = std::get_if<std::int64_t>(&cell))
                    fields.push_back(format_number(*i));
                else
                    fields.push_back(std::get<std::string>(cell));
            }
            append_line(out, fields);
        }
        return out;
    }

private:
    static void append_line(std::string& out, const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += quote(fields[i]);
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace nfkit::csv

#endif
