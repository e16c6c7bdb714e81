#include <fkit/error.hpp>

#include <cstdint>

namespace fkit {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::DanglingPath: return "DanglingPath";
    case ErrorKind::PointSpaceMismatch: return "PointSpaceMismatch";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::RejectionBudgetExhausted: return "RejectionBudgetExhausted";
    case ErrorKind::SingularKernel: return "SingularKernel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownOperator: return "UnknownOperator";
    case ErrorKind::UnknownSignal: return "UnknownSignal";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::InvalidTrace: return "InvalidTrace";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DuplicateRunId: return "DuplicateRunId";
    case ErrorKind::InsufficientRows: return "InsufficientRows";
    case ErrorKind::NoOrderedColumns: return "NoOrderedColumns";
    case ErrorKind::NoUnorderedColumns: return "NoUnorderedColumns";
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::SimulatorError: return "SimulatorError";
    case ErrorKind::FrameTooLarge: return "FrameTooLarge";
    case ErrorKind::MalformedJson: return "MalformedJson";
    case ErrorKind::UnknownType: return "UnknownType";
    case ErrorKind::HandshakeRefused: return "HandshakeRefused";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::ConnectionLost: return "ConnectionLost";
    case ErrorKind::BindError: return "BindError";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

ParseError::ParseError(ErrorKind kind, const std::string& message, std::size_t position)
    : Error(kind, message + " at position " + std::to_string(position)), position_(position)
{
}

SimulatorFailure::SimulatorFailure(std::optional<std::uint64_t> run_id, const std::string& message)
    : Error(ErrorKind::SimulatorError,
            run_id ? "run " + std::to_string(*run_id) + ": " + message : message),
      run_id_(run_id)
{
}

} // namespace fkit
