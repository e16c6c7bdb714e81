#include <doctest.h>

#include <cmath>
#include <future>
#include <thread>

#include <fkit/error.hpp>
#include <fkit/protocol.hpp>
#include <fkit/socket.hpp>

using namespace fkit;

namespace {

template <typename F>
ErrorKind kind_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an fkit::Error");
    return ErrorKind::InvalidArgument;
}

FeatureSpace cart_space()
{
    return FeatureSpace::build(Domain::structure({{"pole_mass", Domain::interval(0.05, 0.5)},
                                                  {"pole_half_length", Domain::interval(0.25, 1.0)},
                                                  {"x0", Domain::interval(-0.5, 0.5)},
                                                  {"theta0", Domain::interval(-0.1, 0.1)}}));
}

std::string hex(std::string_view bytes)
{
    static const char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned char c : bytes) {
        out += digits[c >> 4];
        out += digits[c & 15];
    }
    return out;
}

WireMessage random_message(Rng& rng)
{
    auto real = [&] { return std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.index(80)) - 40); };
    const auto id = rng.next_u64() >> 11;
    switch (rng.index(6)) {
    case 0:
        return Hello{"falsify-kit/1", "box[0:" + std::to_string(rng.index(9)) + "]"};
    case 1:
        return HelloAck{rng.index(2) == 0, rng.index(2) == 0 ? "" : "signature \"mismatch\"\n"};
    case 2: {
        ConfigMessage m{id, {}};
        m.assignments["a.0"] = real();
        m.assignments["color"] = std::string("red");
        m.assignments["n"] = 3.0;
        return m;
    }
    case 3: {
        Trajectory t{id, {}, {}};
        const std::size_t n = 1 + rng.index(20);
        for (std::size_t i = 0; i < n; ++i) {
            t.times.push_back(0.1 * static_cast<double>(i));
            t.signals["x"].push_back(real());
            t.signals["theta_deg"].push_back(real());
        }
        return t;
    }
    case 4:
        return SimErrorMessage{id, "boom \xc3\xa9"};
    default:
        return Bye{};
    }
}

// Server side of one connection in the foreground; `client` runs on a thread
// against the listener's port.
template <typename Client>
void with_client(Client client, const std::function<void(SimConnection&)>& server)
{
    TcpListener listener("127.0.0.1", 0);
    auto fut = std::async(std::launch::async, [&, port = listener.port()] { client(port); });
    SimConnection conn(listener.accept(10), 5);
    server(conn);
    fut.get();
}

} // namespace

TEST_CASE("bye golden bytes")
{
    const std::string frame = encode(Bye{});
    CHECK(frame.size() == 18);
    CHECK(hex(frame.substr(0, 4)) == "0000000e");
    CHECK(frame.substr(4) == R"({"type":"bye"})");
}

TEST_CASE("golden bodies for fixed messages")
{
    CHECK(encode_body(Hello{"falsify-kit/1", "box[0:1]"}) ==
          R"({"space_signature":"box[0:1]","type":"hello","version":"falsify-kit/1"})");
    CHECK(encode_body(HelloAck{false, "no"}) == R"({"accepted":false,"reason":"no","type":"hello_ack"})");
    ConfigMessage c{4, {{"b", std::string("red")}, {"a.0", 0.1}}};
    CHECK(encode_body(c) == R"({"assignments":{"a.0":0.1,"b":"red"},"run_id":4,"type":"config"})");
    Trajectory t{4, {0, 0.5}, {{"x", {1, -2.25}}}};
    CHECK(encode_body(t) == R"({"run_id":4,"signals":{"x":[1.0,-2.25]},"times":[0.0,0.5],"type":"trajectory"})");
    CHECK(encode_body(SimErrorMessage{2, "bad"}) == R"({"message":"bad","run_id":2,"type":"sim_error"})");
}

TEST_CASE("decode inverts encode")
{
    Rng rng(10);
    for (int i = 0; i < 500; ++i) {
        const WireMessage m = random_message(rng);
        CHECK(decode(encode(m)) == m);
        CHECK(encode(decode(encode(m))) == encode(m));
    }
}

TEST_CASE("decode errors")
{
    CHECK(kind_of([] { decode_body("{\"type\":"); }) == ErrorKind::MalformedJson);
    CHECK(kind_of([] { decode_body("[1,2]"); }) == ErrorKind::MalformedJson);
    CHECK(kind_of([] { decode_body(R"({"type":"hug"})"); }) == ErrorKind::UnknownType);
    CHECK(kind_of([] { decode_body(R"({"run_id":1})"); }) == ErrorKind::MalformedJson);
    CHECK(kind_of([] { decode_body(R"({"type":"config","run_id":"x","assignments":{}})"); }) ==
          ErrorKind::MalformedJson);
    CHECK(kind_of([] { decode(length_prefix(20) + R"({"type":"bye"})"); }) == ErrorKind::LengthMismatch);
    CHECK(kind_of([] { decode("\x00\x00"); }) == ErrorKind::LengthMismatch);
    CHECK(kind_of([] { decode(length_prefix(kMaxFrameBody + 1)); }) == ErrorKind::FrameTooLarge);
    CHECK(kind_of([] { encode(Trajectory{1, {0}, {{"x", {NAN}}}}); }) == ErrorKind::InvalidArgument);
    CHECK(read_length_prefix(length_prefix(0x01020304)) == 0x01020304u);
}

TEST_CASE("config messages carry point leaves")
{
    const auto space = FeatureSpace::build(
        Domain::structure({{"p", Domain::box({0, 0}, {1, 1})}, {"c", Domain::finite_set({"red", Atom(2.0)})}}));
    Eigen::VectorXd v(2);
    v << 0.25, 0.75;
    const ConfigMessage m = make_config_message(9, space.unflatten(v, {Atom(2.0)}));
    CHECK(m.run_id == 9);
    CHECK(std::get<double>(m.assignments.at("p.0")) == 0.25);
    CHECK(std::get<double>(m.assignments.at("p.1")) == 0.75);
    CHECK(std::get<double>(m.assignments.at("c")) == 2.0);
    const ConfigMessage s = make_config_message(9, space.unflatten(v, {Atom("red")}));
    CHECK(std::get<std::string>(s.assignments.at("c")) == "red");
}

TEST_CASE("echo harness returns the client's trace")
{
    const auto space = cart_space();
    with_client(
        [&](std::uint16_t port) {
            connect_and_serve("127.0.0.1", port, space.signature(), [](const std::map<std::string, WireValue>&) {
                return EpisodeResult{{0, 1, 2}, {{"x", {3, 3, 3}}}};
            }, 5);
        },
        [&](SimConnection& conn) {
            conn.handshake(space.signature());
            Rng rng(1);
            const Trace t = conn.serve_episode(space.sample_prior(rng), 1);
            CHECK(t.size() == 3);
            CHECK(t.signal("x") == std::vector<double>{3, 3, 3});
            conn.finish();
        });
}

TEST_CASE("a SimError reply surfaces as a simulator failure")
{
    const auto space = cart_space();
    with_client(
        [&](std::uint16_t port) {
            const ClientSummary s = connect_and_serve(
                "127.0.0.1", port, space.signature(),
                [](const std::map<std::string, WireValue>&) -> EpisodeResult { throw std::runtime_error("diverged"); },
                5);
            CHECK(s.errors == 1);
        },
        [&](SimConnection& conn) {
            conn.handshake(space.signature());
            Rng rng(1);
            try {
                conn.serve_episode(space.sample_prior(rng), 17);
                FAIL("no error");
            } catch (const SimulatorFailure& e) {
                CHECK(e.kind() == ErrorKind::SimulatorError);
                CHECK(e.run_id() == std::optional<std::uint64_t>(17));
                CHECK(std::string(e.what()).find("diverged") != std::string::npos);
            }
            conn.finish();
        });
}

TEST_CASE("wrong run_id and wrong message type are protocol violations")
{
    const auto space = cart_space();
    for (int variant = 0; variant < 2; ++variant) {
        with_client(
            [&](std::uint16_t port) {
                TcpStream s = TcpStream::connect("127.0.0.1", port, 5);
                s.send_message(Hello{std::string(kProtocolVersion), space.signature()});
                CHECK(std::get<HelloAck>(s.receive_message(5)).accepted);
                const auto cfg = std::get<ConfigMessage>(s.receive_message(5));
                if (variant == 0)
                    s.send_message(Trajectory{cfg.run_id + 1, {0}, {{"x", {0}}}});
                else
                    s.send_message(HelloAck{true, ""});
            },
            [&](SimConnection& conn) {
                conn.handshake(space.signature());
                Rng rng(1);
                CHECK(kind_of([&] { conn.serve_episode(space.sample_prior(rng), 3); }) ==
                      ErrorKind::ProtocolViolation);
            });
    }
}

TEST_CASE("handshake refusal")
{
    const auto space = cart_space();
    SUBCASE("signature")
    {
        with_client(
            [&](std::uint16_t port) {
                TcpStream s = TcpStream::connect("127.0.0.1", port, 5);
                s.send_message(Hello{std::string(kProtocolVersion), "box[0:1]"});
                const auto ack = std::get<HelloAck>(s.receive_message(5));
                CHECK_FALSE(ack.accepted);
                CHECK_FALSE(ack.reason.empty());
            },
            [&](SimConnection& conn) {
                CHECK(kind_of([&] { conn.handshake(space.signature()); }) == ErrorKind::HandshakeRefused);
            });
    }
    SUBCASE("version")
    {
        with_client(
            [&](std::uint16_t port) {
                TcpStream s = TcpStream::connect("127.0.0.1", port, 5);
                s.send_message(Hello{"falsify-kit/0", space.signature()});
                CHECK_FALSE(std::get<HelloAck>(s.receive_message(5)).accepted);
            },
            [&](SimConnection& conn) {
                CHECK(kind_of([&] { conn.handshake(space.signature()); }) == ErrorKind::HandshakeRefused);
            });
    }
    SUBCASE("client sees the refusal")
    {
        with_client(
            [&](std::uint16_t port) {
                CHECK(kind_of([&] {
                          connect_and_serve("127.0.0.1", port, "box[0:1]",
                                            [](const std::map<std::string, WireValue>&) { return EpisodeResult{}; },
                                            5);
                      }) == ErrorKind::HandshakeRefused);
            },
            [&](SimConnection& conn) { CHECK_THROWS_AS(conn.handshake(space.signature()), Error); });
    }
}

TEST_CASE("short frame body is a length mismatch")
{
    TcpListener listener("127.0.0.1", 0);
    std::promise<void> done;
    std::thread client([&, port = listener.port()] {
        TcpStream s = TcpStream::connect("127.0.0.1", port, 5);
        s.send_all(length_prefix(100) + R"({"type":"bye"})");
        done.get_future().wait();
    });
    TcpStream server = listener.accept(5);
    CHECK(kind_of([&] { server.receive_message(0.3); }) == ErrorKind::LengthMismatch);
    done.set_value();
    client.join();
}

TEST_CASE("timeouts and lost connections")
{
    TcpListener listener("127.0.0.1", 0);
    CHECK(kind_of([&] { listener.accept(0.1); }) == ErrorKind::Timeout);
    std::promise<void> go;
    std::thread client([&, port = listener.port()] {
        TcpStream s = TcpStream::connect("127.0.0.1", port, 5);
        go.get_future().wait();
    });
    TcpStream server = listener.accept(5);
    CHECK(kind_of([&] { server.receive_message(0.1); }) == ErrorKind::Timeout);
    go.set_value();
    client.join();
    CHECK(kind_of([&] { server.receive_message(1); }) == ErrorKind::ConnectionLost);
}

TEST_CASE("bind conflicts and endpoints")
{
    TcpListener a("127.0.0.1", 0);
    CHECK(kind_of([&] { TcpListener b("127.0.0.1", a.port()); }) == ErrorKind::BindError);
    CHECK(parse_endpoint("127.0.0.1:9000") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 9000});
    CHECK(parse_endpoint("localhost") == std::pair<std::string, std::uint16_t>{"localhost", kDefaultPort});
    CHECK(kind_of([] { parse_endpoint("h:99999"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("cart-pole traces are identical in-process and over loopback")
{
    const auto space = cart_space();
    const nlohmann::json fixed = nlohmann::json::object();
    auto local = make_reference_simulator("cartpole", fixed);
    SocketSimulator remote("127.0.0.1", 0, 10);
    auto fut = std::async(std::launch::async, [&, port = remote.port()] {
        return connect_and_serve("127.0.0.1", port, space.signature(), reference_callback("cartpole", fixed), 10);
    });
    remote.open(space);
    Rng rng(5);
    for (std::uint64_t id = 0; id < 20; ++id) {
        const Point p = space.sample_prior(rng);
        const Trace a = local->simulate(p, id);
        const Trace b = remote.simulate(p, id);
        CHECK(a.times() == b.times());
        CHECK(a.signals() == b.signals());
    }
    remote.close();
    CHECK(fut.get().episodes == 20);
}
