#include <fkit/protocol.hpp>

#include <cmath>

#include <json.hpp>

#include <fkit/error.hpp>

namespace fkit {

using nlohmann::json;

std::string_view message_type(const WireMessage& msg)
{
    static constexpr std::string_view names[] = {"hello", "hello_ack", "config", "trajectory", "sim_error", "bye"};
    return names[msg.index()];
}

namespace {

double finite(double v)
{
    if (!std::isfinite(v))
        throw Error(ErrorKind::InvalidArgument, "non-finite reals cannot be sent");
    return v;
}

json reals(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v)
        a.push_back(finite(x));
    return a;
}

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(ErrorKind::MalformedJson, what);
}

const json& field(const json& j, const char* name)
{
    auto it = j.find(name);
    if (it == j.end())
        malformed(std::string("missing field '") + name + "'");
    return *it;
}

std::string get_string(const json& j, const char* name)
{
    const json& v = field(j, name);
    if (!v.is_string())
        malformed(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t get_run_id(const json& j)
{
    const json& v = field(j, "run_id");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        malformed("field 'run_id' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double get_real(const json& v, const std::string& where)
{
    if (!v.is_number())
        malformed(where + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        malformed(where + " is not finite");
    return x;
}

std::vector<double> get_reals(const json& v, const std::string& where)
{
    if (!v.is_array())
        malformed(where + " must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v)
        out.push_back(get_real(x, where + " entry"));
    return out;
}

} // namespace

std::string encode_body(const WireMessage& msg)
{
    json j;
    j["type"] = std::string(message_type(msg));
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Hello>) {
                j["version"] = m.version;
                j["space_signature"] = m.space_signature;
            } else if constexpr (std::is_same_v<M, HelloAck>) {
                j["accepted"] = m.accepted;
                j["reason"] = m.reason;
            } else if constexpr (std::is_same_v<M, ConfigMessage>) {
                j["run_id"] = m.run_id;
                json a = json::object();
                for (const auto& [k, v] : m.assignments) {
                    if (const double* d = std::get_if<double>(&v))
                        a[k] = finite(*d);
                    else
                        a[k] = std::get<std::string>(v);
                }
                j["assignments"] = std::move(a);
            } else if constexpr (std::is_same_v<M, Trajectory>) {
                j["run_id"] = m.run_id;
                j["times"] = reals(m.times);
                json s = json::object();
                for (const auto& [k, v] : m.signals)
                    s[k] = reals(v);
                j["signals"] = std::move(s);
            } else if constexpr (std::is_same_v<M, SimErrorMessage>) {
                j["run_id"] = m.run_id;
                j["message"] = m.message;
            }
        },
        msg);
    return j.dump();
}

WireMessage decode_body(std::string_view body)
{
    json j = json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded())
        malformed("body is not valid JSON");
    if (!j.is_object())
        malformed("body must be a JSON object");
    const std::string type = get_string(j, "type");
    if (type == "hello")
        return Hello{get_string(j, "version"), get_string(j, "space_signature")};
    if (type == "hello_ack") {
        const json& a = field(j, "accepted");
        if (!a.is_boolean())
            malformed("field 'accepted' must be a boolean");
        return HelloAck{a.get<bool>(), j.contains("reason") ? get_string(j, "reason") : std::string()};
    }
    if (type == "config") {
        ConfigMessage m;
        m.run_id = get_run_id(j);
        const json& a = field(j, "assignments");
        if (!a.is_object())
            malformed("field 'assignments' must be an object");
        for (const auto& [k, v] : a.items()) {
            if (v.is_string())
                m.assignments[k] = v.get<std::string>();
            else
                m.assignments[k] = get_real(v, "assignment '" + k + "'");
        }
        return m;
    }
    if (type == "trajectory") {
        Trajectory t;
        t.run_id = get_run_id(j);
        t.times = get_reals(field(j, "times"), "times");
        const json& s = field(j, "signals");
        if (!s.is_object())
            malformed("field 'signals' must be an object");
        for (const auto& [k, v] : s.items())
            t.signals[k] = get_reals(v, "signal '" + k + "'");
        return t;
    }
    if (type == "sim_error") {
        const std::uint64_t id = get_run_id(j);
        return SimErrorMessage{id, get_string(j, "message")};
    }
    if (type == "bye")
        return Bye{};
    throw Error(ErrorKind::UnknownType, "unknown message type '" + type + "'");
}

std::string length_prefix(std::size_t n)
{
    if (n > kMaxFrameBody)
        throw Error(ErrorKind::FrameTooLarge, "frame body of " + std::to_string(n) + " bytes exceeds 64 MiB");
    std::string p(4, '\0');
    for (int i = 0; i < 4; ++i)
        p[static_cast<std::size_t>(i)] = static_cast<char>((n >> (8 * (3 - i))) & 0xFF);
    return p;
}

std::uint32_t read_length_prefix(std::string_view b)
{
    if (b.size() < 4)
        throw Error(ErrorKind::LengthMismatch, "frame shorter than its 4-byte length prefix");
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i)
        n = (n << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return n;
}

std::string encode(const WireMessage& msg)
{
    std::string body = encode_body(msg);
    return length_prefix(body.size()) + body;
}

WireMessage decode(std::string_view frame)
{
    const std::uint32_t n = read_length_prefix(frame);
    if (n > kMaxFrameBody)
        throw Error(ErrorKind::FrameTooLarge, "frame body of " + std::to_string(n) + " bytes exceeds 64 MiB");
    if (frame.size() - 4 != n)
        throw Error(ErrorKind::LengthMismatch, "length prefix says " + std::to_string(n) + " bytes, frame carries " +
                                                   std::to_string(frame.size() - 4));
    return decode_body(frame.substr(4));
}

ConfigMessage make_config_message(std::uint64_t run_id, const Point& point)
{
    ConfigMessage m;
    m.run_id = run_id;
    for (const auto& [path, value] : point.values) {
        if (const double* d = std::get_if<double>(&value)) {
            m.assignments[path] = *d;
        } else {
            const Atom& a = std::get<Atom>(value);
            if (a.is_number())
                m.assignments[path] = a.as_number();
            else
                m.assignments[path] = a.as_string();
        }
    }
    return m;
}

Trajectory make_trajectory(std::uint64_t run_id, const Trace& trace)
{
    return Trajectory{run_id, trace.times(), trace.signals()};
}

Trace to_trace(const Trajectory& t)
{
    return Trace(t.times, t.signals);
}

} // namespace fkit
