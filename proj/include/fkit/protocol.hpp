#ifndef FKIT_PROTOCOL_HPP
#define FKIT_PROTOCOL_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fkit/feature_space.hpp>
#include <fkit/trace.hpp>

namespace fkit {

inline constexpr std::string_view kProtocolVersion = "falsify-kit/1";
inline constexpr std::size_t kMaxFrameBody = std::size_t{64} << 20;

/// Leaf value as it travels: reals and numeric atoms become JSON numbers,
/// string atoms JSON strings.
using WireValue = std::variant<double, std::string>;

struct Hello {
    std::string version;
    std::string space_signature;
    friend bool operator==(const Hello&, const Hello&) = default;
};

struct HelloAck {
    bool accepted = false;
    std::string reason;
    friend bool operator==(const HelloAck&, const HelloAck&) = default;
};

struct ConfigMessage {
    std::uint64_t run_id = 0;
    std::map<std::string, WireValue> assignments;
    friend bool operator==(const ConfigMessage&, const ConfigMessage&) = default;
};

struct Trajectory {
    std::uint64_t run_id = 0;
    std::vector<double> times;
    std::map<std::string, std::vector<double>> signals;
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct SimErrorMessage {
    std::uint64_t run_id = 0;
    std::string message;
    friend bool operator==(const SimErrorMessage&, const SimErrorMessage&) = default;
};

struct Bye {
    friend bool operator==(const Bye&, const Bye&) = default;
};

using WireMessage = std::variant<Hello, HelloAck, ConfigMessage, Trajectory, SimErrorMessage, Bye>;

std::string_view message_type(const WireMessage& msg);

/// JSON body only: keys sorted, no whitespace, reals in shortest round-trip
/// form. Throws InvalidArgument for non-finite reals.
std::string encode_body(const WireMessage& msg);
/// Throws MalformedJson or UnknownType.
WireMessage decode_body(std::string_view body);

/// Full frame: 4-byte big-endian body length, then the body.
std::string encode(const WireMessage& msg);
/// Throws FrameTooLarge, LengthMismatch, MalformedJson, UnknownType.
WireMessage decode(std::string_view frame);

/// Big-endian length prefix helpers.
std::string length_prefix(std::size_t n);
std::uint32_t read_length_prefix(std::string_view four_bytes);

ConfigMessage make_config_message(std::uint64_t run_id, const Point& point);
Trajectory make_trajectory(std::uint64_t run_id, const Trace& trace);
/// Validates trace invariants (EmptyTrace, InvalidTrace).
Trace to_trace(const Trajectory& t);

} // namespace fkit

#endif
