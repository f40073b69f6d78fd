#include "markov_panel/panel_io.hpp"

#include <algorithm>
#include <charconv>
#include <iterator>
#include <sstream>
#include <unordered_map>

namespace markov_panel {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.push_back(line);
        if (end == std::string_view::npos)
            break;
        start = end + 1;
    }
    return lines;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i]))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i]))
            ++i;
        if (i > start)
            tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

} // namespace

std::map<int, int> SpellSample::multiplicities() const {
    std::map<int, int> out;
    for (int d : durations)
        ++out[d];
    return out;
}

ParcelPanel parse_panel(std::string_view text) {
    std::vector<std::vector<State>> rows;
    std::size_t width = 0;
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty())
            continue;
        std::vector<State> row;
        row.reserve(tokens.size());
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            const auto s = tokens[t].size() == 1 ? state_from_symbol(tokens[t][0]) : std::nullopt;
            if (!s)
                throw ParseError(ParseError::Kind::UnknownSymbol, line_no, t + 1,
                                 "unknown state symbol '" + std::string(tokens[t]) + "' at line " +
                                     std::to_string(line_no) + " token " + std::to_string(t + 1));
            row.push_back(*s);
        }
        if (rows.empty())
            width = row.size();
        else if (row.size() != width)
            throw ParseError(ParseError::Kind::RaggedRows, line_no, 0,
                             "line " + std::to_string(line_no) + " has " +
                                 std::to_string(row.size()) + " tokens, expected " +
                                 std::to_string(width));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ParseError(ParseError::Kind::Empty, 0, 0, "panel input is empty");

    ParcelPanel panel(rows.size(), width);
    for (std::size_t n = 0; n < rows.size(); ++n)
        for (std::size_t p = 0; p < width; ++p)
            panel(n, p) = rows[n][p];
    return panel;
}

ParcelPanel parse_panel(std::istream &in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_panel(text);
}

ParcelPanel parse_panel_csv(std::string_view text) {
    const auto lines = split_lines(text);
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<std::string> parcel_order;
    std::unordered_map<std::string, std::map<long, State>> by_parcel;

    for (std::string_view raw : lines) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty())
            continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        if (!have_header) {
            if (fields.size() != 3 || fields[0] != "parcel" || fields[1] != "year" ||
                fields[2] != "state")
                throw ParseError(ParseError::Kind::BadCsv, line_no, 0,
                                 "CSV header must be 'parcel,year,state'");
            have_header = true;
            continue;
        }
        if (fields.size() != 3)
            throw ParseError(ParseError::Kind::BadCsv, line_no, 0,
                             "line " + std::to_string(line_no) + ": expected 3 fields");
        long year = 0;
        const auto yf = fields[1];
        const auto [ptr, ec] = std::from_chars(yf.data(), yf.data() + yf.size(), year);
        if (ec != std::errc() || ptr != yf.data() + yf.size() || year < 0)
            throw ParseError(ParseError::Kind::BadCsv, line_no, 2,
                             "line " + std::to_string(line_no) + ": bad year '" + std::string(yf) +
                                 "'");
        const auto s = fields[2].size() == 1 ? state_from_symbol(fields[2][0]) : std::nullopt;
        if (!s)
            throw ParseError(ParseError::Kind::UnknownSymbol, line_no, 3,
                             "unknown state symbol '" + std::string(fields[2]) + "' at line " +
                                 std::to_string(line_no));
        const std::string id(fields[0]);
        auto [it, inserted] = by_parcel.try_emplace(id);
        if (inserted)
            parcel_order.push_back(id);
        if (!it->second.emplace(year, *s).second)
            throw ParseError(ParseError::Kind::BadCsv, line_no, 0,
                             "duplicate year " + std::to_string(year) + " for parcel " + id);
    }
    if (parcel_order.empty())
        throw ParseError(ParseError::Kind::Empty, 0, 0, "CSV panel has no records");

    const std::size_t n_years = by_parcel.at(parcel_order.front()).size();
    ParcelPanel panel(n_years, parcel_order.size());
    for (std::size_t p = 0; p < parcel_order.size(); ++p) {
        const auto &years = by_parcel.at(parcel_order[p]);
        if (years.size() != n_years || years.rbegin()->first != static_cast<long>(n_years) - 1)
            throw ParseError(ParseError::Kind::RaggedRows, 0, 0,
                             "parcel " + parcel_order[p] +
                                 " does not cover the contiguous year range 0.." +
                                 std::to_string(n_years - 1));
        for (const auto &[year, state] : years)
            panel(static_cast<std::size_t>(year), p) = state;
    }
    return panel;
}

ParcelPanel parse_panel_auto(std::string_view text) {
    for (std::string_view line : split_lines(text)) {
        const auto t = trim(line);
        if (t.empty())
            continue;
        if (t.substr(0, 7) == "parcel,")
            return parse_panel_csv(text);
        break;
    }
    return parse_panel(text);
}

std::string serialize_panel(const ParcelPanel &panel) {
    std::string out;
    out.reserve(panel.n_years() * (2 * panel.n_parcels() + 1));
    for (std::size_t n = 0; n < panel.n_years(); ++n) {
        for (std::size_t p = 0; p < panel.n_parcels(); ++p) {
            if (p > 0)
                out.push_back(' ');
            out.push_back(symbol(panel(n, p)));
        }
        out.push_back('\n');
    }
    return out;
}

std::string serialize_panel_csv(const ParcelPanel &panel) {
    std::ostringstream out;
    out << "parcel,year,state\n";
    for (std::size_t p = 0; p < panel.n_parcels(); ++p)
        for (std::size_t n = 0; n < panel.n_years(); ++n)
            out << p + 1 << ',' << n << ',' << symbol(panel(n, p)) << '\n';
    return out.str();
}

TransitionCounts count_transitions(const ParcelPanel &panel) {
    if (panel.n_years() < 2)
        throw DegenerateCounts("counting transitions needs at least two years of data");
    TransitionCounts counts = TransitionCounts::Zero();
    for (std::size_t n = 1; n < panel.n_years(); ++n)
        for (std::size_t p = 0; p < panel.n_parcels(); ++p)
            ++counts(index(panel(n - 1, p)), index(panel(n, p)));
    return counts;
}

SpellSample extract_spells(const ParcelPanel &panel, State state) {
    SpellSample sample;
    sample.state = state;
    const std::size_t years = panel.n_years();
    for (std::size_t p = 0; p < panel.n_parcels(); ++p) {
        std::size_t n = 0;
        while (n < years) {
            if (panel(n, p) != state) {
                ++n;
                continue;
            }
            std::size_t end = n;
            while (end < years && panel(end, p) == state)
                ++end;
            if (end == years)
                ++sample.censored_count;
            else
                sample.durations.push_back(static_cast<int>(end - n));
            n = end;
        }
    }
    return sample;
}

} // namespace markov_panel
