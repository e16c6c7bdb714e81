#ifndef FKIT_SOCKET_HPP
#define FKIT_SOCKET_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fkit/protocol.hpp>
#include <fkit/reference_sims.hpp>

namespace fkit {

inline constexpr std::uint16_t kDefaultPort = 8200;
inline constexpr double kDefaultTimeoutSeconds = 300.0;

/// Connected TCP stream. Blocking I/O bounded by a per-call timeout.
class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    TcpStream(TcpStream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;
    ~TcpStream();

    /// Retries until `timeout` elapses while the peer is not yet listening.
    static TcpStream connect(const std::string& host, std::uint16_t port, double timeout_s);

    bool is_open() const { return fd_ >= 0; }
    void close();

    /// Throws ConnectionLost.
    void send_all(std::string_view bytes);
    void send_message(const WireMessage& msg) { send_all(encode(msg)); }
    /// Throws Timeout or ConnectionLost before the first byte of a frame,
    /// LengthMismatch when the body falls short of its prefix, FrameTooLarge,
    /// and the body decoding errors.
    WireMessage receive_message(double timeout_s);

private:
    enum class ReadStatus { Ok, TimedOut, Closed };
    ReadStatus read_exact(char* buf, std::size_t n, std::chrono::steady_clock::time_point deadline,
                          std::size_t& got);

    int fd_ = -1;
};

class TcpListener {
public:
    /// Throws BindError. Port 0 picks a free port.
    TcpListener(const std::string& host, std::uint16_t port);
    TcpListener(TcpListener&& other) noexcept : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener();

    std::uint16_t port() const { return port_; }
    /// Throws Timeout.
    TcpStream accept(double timeout_s);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// "host:port" with the port optional (defaults to 8200). Throws InvalidArgument.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& text);

/// Toolkit side of one simulator connection.
class SimConnection {
public:
    SimConnection(TcpStream stream, double timeout_s) : stream_(std::move(stream)), timeout_s_(timeout_s) {}

    /// Reads Hello, replies HelloAck. Refuses (and throws HandshakeRefused) on a
    /// version or signature mismatch.
    void handshake(const std::string& space_signature);

    /// One Config out, one Trajectory back. SimError replies surface as
    /// SimulatorFailure; a reply for another run or of another type is a
    /// ProtocolViolation.
    Trace serve_episode(const Point& point, std::uint64_t run_id);

    /// Sends Bye and closes.
    void finish();

private:
    TcpStream stream_;
    double timeout_s_;
};

/// Simulator reached over TCP: listens, accepts one client on open().
class SocketSimulator : public Simulator {
public:
    SocketSimulator(const std::string& host, std::uint16_t port, double timeout_s = kDefaultTimeoutSeconds);
    ~SocketSimulator() override;

    std::uint16_t port() const { return listener_.port(); }

    void open(const FeatureSpace& space) override;
    Trace simulate(const Point& point, std::uint64_t run_id) override;
    void close() override;

private:
    TcpListener listener_;
    double timeout_s_;
    std::optional<SimConnection> connection_;
};

struct EpisodeResult {
    std::vector<double> times;
    std::map<std::string, std::vector<double>> signals;
};

/// Simulator-side callback; exceptions become SimError replies.
using EpisodeCallback = std::function<EpisodeResult(const std::map<std::string, WireValue>&)>;

struct ClientSummary {
    std::size_t episodes = 0;
    std::size_t errors = 0;
};

/// Client loop: Hello, then Config -> callback -> Trajectory until Bye.
ClientSummary connect_and_serve(const std::string& host, std::uint16_t port, const std::string& space_signature,
                                const EpisodeCallback& callback, double timeout_s = kDefaultTimeoutSeconds);

/// Callback running a bundled reference simulator, for loopback tests.
EpisodeCallback reference_callback(const std::string& name, nlohmann::json fixed);

} // namespace fkit

#endif
