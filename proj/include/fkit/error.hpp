#ifndef FKIT_ERROR_HPP
#define FKIT_ERROR_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fkit {

enum class ErrorKind {
    // feature space
    InvalidDomain,
    InvalidDistribution,
    DanglingPath,
    PointSpaceMismatch,
    OutOfRange,
    LengthMismatch,
    RejectionBudgetExhausted,
    // samplers
    SingularKernel,
    // monitor
    ParseError,
    UnknownOperator,
    UnknownSignal,
    EmptyTrace,
    InvalidTrace,
    IndexOutOfRange,
    // error table
    DuplicateRunId,
    InsufficientRows,
    NoOrderedColumns,
    NoUnorderedColumns,
    EmptyTable,
    IoError,
    SchemaMismatch,
    // simulation / protocol
    SimulatorError,
    FrameTooLarge,
    MalformedJson,
    UnknownType,
    HandshakeRefused,
    ProtocolViolation,
    Timeout,
    ConnectionLost,
    BindError,
    // front end
    ConfigInvalid,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind is the stable, testable part;
/// the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by the formula and constraint parsers; carries the byte offset of the
/// offending token.
class ParseError : public Error {
public:
    ParseError(ErrorKind kind, const std::string& message, std::size_t position);

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A simulator failure tied to one run.
class SimulatorFailure : public Error {
public:
    SimulatorFailure(std::optional<std::uint64_t> run_id, const std::string& message);

    std::optional<std::uint64_t> run_id() const noexcept { return run_id_; }

private:
    std::optional<std::uint64_t> run_id_;
};

} // namespace fkit

#endif
