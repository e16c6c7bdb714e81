#include <fkit/socket.hpp>

#include <algorithm>
#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

#include <fkit/error.hpp>

namespace fkit {

namespace {

using Clock = std::chrono::steady_clock;

Clock::time_point deadline_after(double seconds)
{
    const auto d = std::chrono::duration<double>(std::max(seconds, 0.0));
    return Clock::now() + std::chrono::duration_cast<Clock::duration>(d);
}

int millis_until(Clock::time_point deadline)
{
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return static_cast<int>(std::clamp<long long>(left, 0, 1 << 30));
}

sockaddr_in resolve(const std::string& host, std::uint16_t port)
{
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = host == "localhost" ? "127.0.0.1" : host;
    if (h.empty() || h == "0.0.0.0") {
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return addr;
    }
    if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) == 1)
        return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
        throw Error(ErrorKind::InvalidArgument, "cannot resolve host '" + host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

} // namespace

// ---------------------------------------------------------------------------
// TcpStream

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

TcpStream::~TcpStream()
{
    close();
}

void TcpStream::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, double timeout_s)
{
    const sockaddr_in addr = resolve(host, port);
    const auto deadline = deadline_after(timeout_s);
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0)
            throw Error(ErrorKind::ConnectionLost, std::string("socket: ") + std::strerror(errno));
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return TcpStream(fd);
        }
        const int err = errno;
        ::close(fd);
        if (Clock::now() >= deadline)
            throw Error(ErrorKind::ConnectionLost, "cannot connect to " + host + ":" + std::to_string(port) + ": " +
                                                       std::strerror(err));
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

void TcpStream::send_all(std::string_view bytes)
{
    if (fd_ < 0)
        throw Error(ErrorKind::ConnectionLost, "stream is closed");
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw Error(ErrorKind::ConnectionLost, std::string("send: ") + std::strerror(errno));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

TcpStream::ReadStatus TcpStream::read_exact(char* buf, std::size_t n, Clock::time_point deadline, std::size_t& got)
{
    got = 0;
    while (got < n) {
        pollfd p{fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, millis_until(deadline));
        if (r < 0) {
            if (errno == EINTR)
                continue;
            return ReadStatus::Closed;
        }
        if (r == 0)
            return ReadStatus::TimedOut;
        const ssize_t k = ::recv(fd_, buf + got, n - got, 0);
        if (k < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            return ReadStatus::Closed;
        }
        if (k == 0)
            return ReadStatus::Closed;
        got += static_cast<std::size_t>(k);
    }
    return ReadStatus::Ok;
}

WireMessage TcpStream::receive_message(double timeout_s)
{
    if (fd_ < 0)
        throw Error(ErrorKind::ConnectionLost, "stream is closed");
    const auto deadline = deadline_after(timeout_s);
    char prefix[4];
    std::size_t got = 0;
    switch (read_exact(prefix, 4, deadline, got)) {
    case ReadStatus::Ok:
        break;
    case ReadStatus::TimedOut:
        if (got == 0)
            throw Error(ErrorKind::Timeout, "no message within " + format_real(timeout_s) + " s");
        throw Error(ErrorKind::LengthMismatch, "truncated length prefix");
    case ReadStatus::Closed:
        if (got == 0)
            throw Error(ErrorKind::ConnectionLost, "peer closed the connection");
        throw Error(ErrorKind::LengthMismatch, "truncated length prefix");
    }
    const std::uint32_t n = read_length_prefix(std::string_view(prefix, 4));
    if (n > kMaxFrameBody)
        throw Error(ErrorKind::FrameTooLarge, "frame body of " + std::to_string(n) + " bytes exceeds 64 MiB");
    std::string body(n, '\0');
    if (read_exact(body.data(), n, deadline, got) != ReadStatus::Ok)
        throw Error(ErrorKind::LengthMismatch, "length prefix says " + std::to_string(n) + " bytes, only " +
                                                   std::to_string(got) + " arrived");
    return decode_body(body);
}

// ---------------------------------------------------------------------------
// TcpListener

TcpListener::TcpListener(const std::string& host, std::uint16_t port)
{
    const sockaddr_in addr = resolve(host, port);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0)
        throw Error(ErrorKind::BindError, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw Error(ErrorKind::BindError,
                    "cannot listen on " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener()
{
    if (fd_ >= 0)
        ::close(fd_);
}

TcpStream TcpListener::accept(double timeout_s)
{
    const auto deadline = deadline_after(timeout_s);
    for (;;) {
        pollfd p{fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, millis_until(deadline));
        if (r < 0 && errno == EINTR)
            continue;
        if (r <= 0)
            throw Error(ErrorKind::Timeout, "no simulator connected within " + format_real(timeout_s) + " s");
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED)
                continue;
            throw Error(ErrorKind::ConnectionLost, std::string("accept: ") + std::strerror(errno));
        }
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return TcpStream(fd);
    }
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string::npos)
        return {text.empty() ? "127.0.0.1" : text, kDefaultPort};
    const std::string host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    char* end = nullptr;
    const unsigned long p = std::strtoul(port.c_str(), &end, 10);
    if (port.empty() || end != port.c_str() + port.size() || p > 65535)
        throw Error(ErrorKind::InvalidArgument, "bad port in '" + text + "'");
    return {host.empty() ? "127.0.0.1" : host, static_cast<std::uint16_t>(p)};
}

// ---------------------------------------------------------------------------
// SimConnection

void SimConnection::handshake(const std::string& space_signature)
{
    const WireMessage first = stream_.receive_message(timeout_s_);
    const Hello* hello = std::get_if<Hello>(&first);
    if (hello == nullptr)
        throw Error(ErrorKind::ProtocolViolation,
                    "expected hello, got " + std::string(message_type(first)));
    std::string reason;
    if (hello->version != kProtocolVersion)
        reason = "protocol version '" + hello->version + "' is not " + std::string(kProtocolVersion);
    else if (hello->space_signature != space_signature)
        reason = "space signature mismatch: server has " + space_signature + ", client sent " + hello->space_signature;
    stream_.send_message(HelloAck{reason.empty(), reason});
    if (!reason.empty()) {
        stream_.close();
        throw Error(ErrorKind::HandshakeRefused, reason);
    }
}

Trace SimConnection::serve_episode(const Point& point, std::uint64_t run_id)
{
    stream_.send_message(make_config_message(run_id, point));
    const WireMessage reply = stream_.receive_message(timeout_s_);
    if (const auto* t = std::get_if<Trajectory>(&reply)) {
        if (t->run_id != run_id)
            throw Error(ErrorKind::ProtocolViolation, "trajectory for run " + std::to_string(t->run_id) +
                                                          " while run " + std::to_string(run_id) + " is outstanding");
        return to_trace(*t);
    }
    if (const auto* e = std::get_if<SimErrorMessage>(&reply)) {
        if (e->run_id != run_id)
            throw Error(ErrorKind::ProtocolViolation, "sim_error for run " + std::to_string(e->run_id) +
                                                          " while run " + std::to_string(run_id) + " is outstanding");
        throw SimulatorFailure(run_id, e->message);
    }
    throw Error(ErrorKind::ProtocolViolation, "expected trajectory, got " + std::string(message_type(reply)));
}

void SimConnection::finish()
{
    if (stream_.is_open()) {
        try {
            stream_.send_message(Bye{});
        } catch (const Error&) {
            // peer already gone
        }
        stream_.close();
    }
}

// ---------------------------------------------------------------------------
// SocketSimulator

SocketSimulator::SocketSimulator(const std::string& host, std::uint16_t port, double timeout_s)
    : listener_(host, port), timeout_s_(timeout_s)
{
}

SocketSimulator::~SocketSimulator()
{
    close();
}

void SocketSimulator::open(const FeatureSpace& space)
{
    connection_.emplace(listener_.accept(timeout_s_), timeout_s_);
    connection_->handshake(space.signature());
}

Trace SocketSimulator::simulate(const Point& point, std::uint64_t run_id)
{
    if (!connection_)
        throw Error(ErrorKind::ConnectionLost, "no simulator connected");
    return connection_->serve_episode(point, run_id);
}

void SocketSimulator::close()
{
    if (connection_) {
        connection_->finish();
        connection_.reset();
    }
}

// ---------------------------------------------------------------------------
// Client side

ClientSummary connect_and_serve(const std::string& host, std::uint16_t port, const std::string& space_signature,
                                const EpisodeCallback& callback, double timeout_s)
{
    TcpStream stream = TcpStream::connect(host, port, std::min(timeout_s, 30.0));
    stream.send_message(Hello{std::string(kProtocolVersion), space_signature});
    const WireMessage ack = stream.receive_message(timeout_s);
    const auto* a = std::get_if<HelloAck>(&ack);
    if (a == nullptr)
        throw Error(ErrorKind::ProtocolViolation, "expected hello_ack, got " + std::string(message_type(ack)));
    if (!a->accepted)
        throw Error(ErrorKind::HandshakeRefused, a->reason);

    ClientSummary summary;
    for (;;) {
        const WireMessage msg = stream.receive_message(timeout_s);
        if (std::holds_alternative<Bye>(msg))
            return summary;
        const auto* cfg = std::get_if<ConfigMessage>(&msg);
        if (cfg == nullptr)
            throw Error(ErrorKind::ProtocolViolation, "expected config, got " + std::string(message_type(msg)));
        std::string failure;
        std::string reply;
        try {
            EpisodeResult r = callback(cfg->assignments);
            reply = encode(Trajectory{cfg->run_id, std::move(r.times), std::move(r.signals)});
        } catch (const std::exception& e) {
            failure = e.what();
        }
        if (failure.empty()) {
            stream.send_all(reply);
            ++summary.episodes;
        } else {
            stream.send_message(SimErrorMessage{cfg->run_id, failure});
            ++summary.errors;
        }
    }
}

EpisodeCallback reference_callback(const std::string& name, nlohmann::json fixed)
{
    return [name, fixed = std::move(fixed)](const std::map<std::string, WireValue>& assignments) {
        std::map<std::string, double> params;
        for (const auto& [path, value] : assignments) {
            const double* d = std::get_if<double>(&value);
            if (d == nullptr)
                throw Error(ErrorKind::ConfigInvalid, "leaf '" + path + "' is not numeric");
            params[parameter_name(path)] = *d;
        }
        const Trace t = simulate_reference(name, fixed, params);
        return EpisodeResult{t.times(), t.signals()};
    };
}

} // namespace fkit
