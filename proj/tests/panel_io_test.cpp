#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "markov_panel/errors.hpp"
#include "markov_panel/panel_io.hpp"
#include "test_support.hpp"

using namespace markov_panel;
namespace mt = markov_panel::testing;

namespace {

ParcelPanel small_panel() {
    ParcelPanel p(3, 2);
    p(1, 1) = State::C;
    p(2, 0) = State::C;
    p(2, 1) = State::C;
    return p;
}

ParcelPanel column_panel(const std::vector<State> &path) {
    ParcelPanel p(path.size(), 1);
    for (std::size_t y = 0; y < path.size(); ++y)
        p(y, 0) = path[y];
    return p;
}

ParseError parse_error(std::string_view text, bool csv = false) {
    try {
        if (csv)
            parse_panel_csv(text);
        else
            parse_panel(text);
    } catch (const ParseError &e) {
        return e;
    }
    FAIL("expected ParseError");
    return ParseError(ParseError::Kind::Empty, 0, 0, "");
}

} // namespace

TEST_SUITE("panel_io") {

TEST_CASE("parse_panel reads a small grid") {
    const ParcelPanel p = parse_panel("F F\nF C\nC C\n");
    CHECK(p.n_years() == 3);
    CHECK(p.n_parcels() == 2);
    CHECK(p == small_panel());
    std::istringstream in("F F\r\n\nF C\r\nC C");
    CHECK(parse_panel(in) == small_panel());
}

TEST_CASE("parse_panel errors") {
    const ParseError unknown = parse_error("F X\n");
    CHECK(unknown.kind() == ParseError::Kind::UnknownSymbol);
    CHECK(unknown.line() == 1);
    CHECK(unknown.column() == 2);
    CHECK(parse_error("F F\nF\n").kind() == ParseError::Kind::RaggedRows);
    CHECK(parse_error("F F\nF\n").line() == 2);
    CHECK(parse_error("  \n\n").kind() == ParseError::Kind::Empty);
    CHECK(parse_error("F FC\n").kind() == ParseError::Kind::UnknownSymbol);
}

TEST_CASE("the 22 x 43 grid") {
    const ParcelPanel &p = mt::grid_panel();
    CHECK(p.n_years() == 22);
    CHECK(p.n_parcels() == 43);
    const auto last = p.column(42);
    CHECK(last[0] == State::F);
    CHECK(last[1] == State::C);
    CHECK(last[2] == State::C);
    CHECK(last[3] == State::C);
    for (std::size_t y = 4; y < 22; ++y)
        CHECK(last[y] == State::B);
    for (std::size_t c = 0; c < 43; ++c)
        CHECK(p(0, c) == State::F);
}

TEST_CASE("count_transitions") {
    SUBCASE("hand count") {
        const TransitionCounts n = count_transitions(small_panel());
        TransitionCounts expected = TransitionCounts::Zero();
        expected(0, 0) = 1;
        expected(0, 1) = 2;
        expected(1, 1) = 1;
        CHECK(n == expected);
    }
    SUBCASE("all F") {
        const TransitionCounts n = count_transitions(ParcelPanel(22, 43));
        CHECK(n(0, 0) == 903);
        CHECK(n.sum() == 903);
    }
    SUBCASE("grid counts") {
        // Independent scan of the file text: consecutive lines, same token position.
        std::istringstream in(mt::read_file(mt::kGridPath));
        std::vector<std::string> rows;
        for (std::string line; std::getline(in, line);) {
            std::string compact;
            for (char c : line)
                if (c != ' ' && c != '\r')
                    compact += c;
            if (!compact.empty())
                rows.push_back(compact);
        }
        TransitionCounts oracle = TransitionCounts::Zero();
        const std::string symbols = "FCJB";
        for (std::size_t y = 0; y + 1 < rows.size(); ++y)
            for (std::size_t c = 0; c < rows[y].size(); ++c)
                ++oracle(static_cast<Eigen::Index>(symbols.find(rows[y][c])),
                         static_cast<Eigen::Index>(symbols.find(rows[y + 1][c])));
        const TransitionCounts n = count_transitions(mt::grid_panel());
        CHECK(n == oracle);
        CHECK(n(0, 0) == 467);
        CHECK(n(0, 1) == 42);
        CHECK(n(0, 2) == 1);
        CHECK(n(1, 1) == 178);
        CHECK(n(1, 2) == 58);
        CHECK(n(1, 3) == 3);
        CHECK(n(2, 1) == 43);
        CHECK(n(2, 2) == 90);
        CHECK(n(3, 3) == 21);
        CHECK(n.sum() == 21 * 43);
    }
    SUBCASE("a single year has no transitions") {
        CHECK_THROWS_AS(count_transitions(ParcelPanel(1, 5)), DegenerateCounts);
    }
}

TEST_CASE("extract_spells") {
    using S = State;
    SUBCASE("completed run") {
        const SpellSample s = extract_spells(column_panel({S::F, S::F, S::F, S::C, S::C, S::J}), S::F);
        CHECK(s.durations == std::vector<int>{3});
        CHECK(s.censored_count == 0);
    }
    SUBCASE("trailing run is censored") {
        const SpellSample s = extract_spells(column_panel({S::F, S::C, S::J, S::C, S::C}), S::C);
        CHECK(s.durations == std::vector<int>{1});
        CHECK(s.censored_count == 1);
    }
    SUBCASE("grid spells") {
        const ParcelPanel &p = mt::grid_panel();
        CHECK(extract_spells(p, S::F).multiplicities() == mt::kSpellsF);
        CHECK(extract_spells(p, S::C).multiplicities() == mt::kSpellsC);
        CHECK(extract_spells(p, S::J).multiplicities() == mt::kSpellsJ);
        CHECK(extract_spells(p, S::F).censored_count == 0);
        CHECK(extract_spells(p, S::C).censored_count == 24);
        CHECK(extract_spells(p, S::J).censored_count == 16);
        CHECK(extract_spells(p, S::B).durations.empty());
    }
}

TEST_CASE("serialize_panel") {
    CHECK(serialize_panel(small_panel()) == "F F\nF C\nC C\n");
    CHECK(parse_panel(serialize_panel(mt::grid_panel())) == mt::grid_panel());
    const std::string csv = serialize_panel_csv(small_panel());
    CHECK(csv.rfind("parcel,year,state\n", 0) == 0);
    CHECK(parse_panel_csv(csv) == small_panel());
    CHECK(parse_panel_auto(csv) == small_panel());
    CHECK(parse_panel_auto("F F\nF C\nC C\n") == small_panel());
}

TEST_CASE("parse_panel_csv") {
    const ParcelPanel p = parse_panel_csv("parcel,year,state\nb,1,C\na,0,F\nb,0,F\na,1,F\n");
    REQUIRE(p.n_years() == 2);
    REQUIRE(p.n_parcels() == 2);
    CHECK(p(1, 0) == State::C); // parcel "b" appears first
    CHECK(p(1, 1) == State::F);
    CHECK(parse_error("year,parcel,state\n", true).kind() == ParseError::Kind::BadCsv);
    CHECK(parse_error("parcel,year,state\na,0,F\na,0,C\n", true).kind() == ParseError::Kind::BadCsv);
    CHECK(parse_error("parcel,year,state\na,0,F\na,x,C\n", true).kind() == ParseError::Kind::BadCsv);
    CHECK(parse_error("parcel,year,state\na,0,Q\n", true).kind() == ParseError::Kind::UnknownSymbol);
    CHECK(parse_error("parcel,year,state\na,0,F\na,2,C\n", true).kind() == ParseError::Kind::RaggedRows);
    CHECK(parse_error("parcel,year,state\na,0,F\na,1,C\nb,0,F\n", true).kind() == ParseError::Kind::RaggedRows);
    CHECK(parse_error("parcel,year,state\n", true).kind() == ParseError::Kind::Empty);
}

TEST_CASE("property: round trips and count totals on random panels") {
    mt::Gen gen(21);
    for (int trial = 0; trial < 10000; ++trial) {
        const ParcelPanel p = gen.panel(8, 8);
        REQUIRE(parse_panel(serialize_panel(p)) == p);
        REQUIRE(parse_panel_csv(serialize_panel_csv(p)) == p);
        if (p.n_years() >= 2)
            REQUIRE(count_transitions(p).sum() == static_cast<std::int64_t>((p.n_years() - 1) * p.n_parcels()));
    }
}

TEST_CASE("property: spells agree with exits per column") {
    mt::Gen gen(22);
    for (int trial = 0; trial < 10000; ++trial) {
        const ParcelPanel p = simulate_panel(gen.theta(), static_cast<std::size_t>(gen.integer(2, 25)), 1,
                                             gen.engine()());
        const auto path = p.column(0);
        const TransitionCounts n = count_transitions(p);
        for (State s : kAllStates) {
            const int e = index(s);
            const SpellSample spells = extract_spells(p, s);
            REQUIRE(static_cast<std::int64_t>(spells.durations.size()) == n.row(e).sum() - n(e, e));
            std::size_t trailing = 0;
            for (auto it = path.rbegin(); it != path.rend() && *it == s; ++it)
                ++trailing;
            REQUIRE(spells.censored_count == (trailing > 0 ? 1u : 0u));
            const auto in_state = static_cast<std::size_t>(std::count(path.begin(), path.end(), s));
            std::size_t total = 0;
            for (int d : spells.durations)
                total += static_cast<std::size_t>(d);
            REQUIRE(total == in_state - trailing);
        }
    }
}

TEST_CASE("completed C spells approach the geometric law on long panels") {
    const ThetaParams t = mt::published_mle();
    const double stay = build_matrix(t)(1, 1);
    const SpellSample s = extract_spells(simulate_panel(t, 400, 10000, 77), State::C);
    REQUIRE(s.durations.size() > 10000);
    const auto table = s.multiplicities();
    const double k = static_cast<double>(s.durations.size());
    double empirical = 0, ks = 0;
    for (int d = 1; d <= table.rbegin()->first; ++d) {
        const auto it = table.find(d);
        empirical += it == table.end() ? 0.0 : it->second / k;
        ks = std::max(ks, std::abs(empirical - (1 - std::pow(stay, d))));
    }
    CHECK(ks < 0.02);
}

}
