#ifndef MARKOV_PANEL_PANEL_IO_HPP
#define MARKOV_PANEL_PANEL_IO_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "markov_panel/state_model.hpp"

namespace markov_panel {

/// Pooled transition tallies: counts(e, e') = number of e -> e' steps over all parcels.
using TransitionCounts = Eigen::Matrix<std::int64_t, kNumStates, kNumStates>;

/// Completed holding spells of one state.
struct SpellSample {
    State state = State::F;
    std::vector<int> durations;
    /// Spells still running in the final year; they are not in `durations`.
    std::size_t censored_count = 0;

    /// duration -> number of occurrences.
    std::map<int, int> multiplicities() const;
};

/// Whitespace-separated grid, one line per year, one single-character symbol per parcel.
/// Blank lines are skipped.
ParcelPanel parse_panel(std::string_view text);
ParcelPanel parse_panel(std::istream &in);

/// CSV with header `parcel,year,state`. Years must be 0..N-1 for every parcel.
/// Parcels are ordered by first appearance in the file.
ParcelPanel parse_panel_csv(std::string_view text);

/// Grid or CSV, chosen by the first non-blank line (a `parcel,` header means CSV).
ParcelPanel parse_panel_auto(std::string_view text);

std::string serialize_panel(const ParcelPanel &panel);
std::string serialize_panel_csv(const ParcelPanel &panel);

/// Requires at least two years.
TransitionCounts count_transitions(const ParcelPanel &panel);

/// Maximal runs of `state` in each parcel column. Runs touching the last year are censored.
SpellSample extract_spells(const ParcelPanel &panel, State state);

} // namespace markov_panel

#endif
