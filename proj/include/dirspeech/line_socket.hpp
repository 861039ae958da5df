#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dirspeech {

/// host:port of a newline-delimited JSON service.
struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port"; throws ConfigError.
Endpoint parse_endpoint(std::string_view text);

/// Blocking TCP stream carrying one message per line. Failures surface as BackendError.
class LineSocket {
public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    ~LineSocket();
    LineSocket(LineSocket&& other) noexcept;
    LineSocket& operator=(LineSocket&& other) noexcept;
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;

    static LineSocket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout);

    bool is_open() const { return fd_ >= 0; }
    void close();

    /// Writes `line` plus a trailing newline.
    void send_line(std::string_view line);
    /// Next line without its newline, or nullopt if none arrives before the timeout.
    /// Throws BackendError when the peer closes the stream.
    std::optional<std::string> recv_line(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
    std::string pending_;
};

/// Loopback listener; port 0 picks a free port.
class LineListener {
public:
    explicit LineListener(std::uint16_t port = 0);
    ~LineListener();
    LineListener(const LineListener&) = delete;
    LineListener& operator=(const LineListener&) = delete;

    std::uint16_t port() const { return port_; }
    Endpoint endpoint() const { return {"127.0.0.1", port_}; }
    /// nullopt on timeout.
    std::optional<LineSocket> accept(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace dirspeech
