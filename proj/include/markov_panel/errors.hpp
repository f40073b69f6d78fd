#ifndef MARKOV_PANEL_ERRORS_HPP
#define MARKOV_PANEL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace markov_panel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A 5-vector that is not in the parameter set.
class ConstraintViolation : public Error {
  public:
    enum class Kind { Range, SumFirstPair, SumSecondPair, NotFinite };

    ConstraintViolation(Kind kind, std::size_t index, const std::string &what)
        : Error(what), kind_(kind), index_(index) {}

    Kind kind() const { return kind_; }
    /// Offending component (0-based) for Range/NotFinite, first index of the pair otherwise.
    std::size_t index() const { return index_; }

  private:
    Kind kind_;
    std::size_t index_;
};

/// Malformed panel input. line/column are 1-based; 0 when not applicable.
class ParseError : public Error {
  public:
    enum class Kind { UnknownSymbol, RaggedRows, Empty, BadCsv };

    ParseError(Kind kind, std::size_t line, std::size_t column, const std::string &what)
        : Error(what), kind_(kind), line_(line), column_(column) {}

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    Kind kind_;
    std::size_t line_;
    std::size_t column_;
};

/// A row of the count matrix has zero total, so some parameters are unidentifiable.
class DegenerateCounts : public Error {
  public:
    explicit DegenerateCounts(const std::string &what, std::vector<int> unidentifiable = {})
        : Error(what), unidentifiable_(std::move(unidentifiable)) {}

    /// 0-based indices of the theta components that cannot be estimated.
    const std::vector<int> &unidentifiable() const { return unidentifiable_; }

  private:
    std::vector<int> unidentifiable_;
};

class BoundaryTheta : public Error {
  public:
    using Error::Error;
};

class NonFiniteStart : public Error {
  public:
    using Error::Error;
};

class EmptyTrace : public Error {
  public:
    using Error::Error;
};

/// The target state is not hit with probability one from the source.
class Unreachable : public Error {
  public:
    using Error::Error;
};

/// The quasi-stationary eigenvector is not unique.
class DegenerateBlock : public Error {
  public:
    using Error::Error;
};

class EmptySample : public Error {
  public:
    using Error::Error;
};

} // namespace markov_panel

#endif
