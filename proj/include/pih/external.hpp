#pragma once

// Bridge to an out-of-process hole predictor.
//
// Framing: one JSON object per line, over the standard streams of a child
// process or over a TCP connection.
//   request : {"id":N,"width":160,"height":160,"pixels_b64":"..."}
//   response: {"id":N,"x":<float>,"y":<float>}  or  {"id":N,"error":"..."}
// Exactly one response per request, in order.

#include <arpa/inet.h>
#include <csignal>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pih/image.hpp"
#include "pih/predictor.hpp"

namespace pih {

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

/// Strict decoding; returns nullopt on malformed input.
inline std::optional<std::vector<std::uint8_t>> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0)
        return std::nullopt;
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0)
        return std::nullopt;
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=')
        pad = text.size() >= 2 && text[text.size() - 2] == '=' ? 2 : 1;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

inline std::string encode_request(std::uint64_t id, const GrayImage& img,
                                  std::optional<Vec2px> truth = std::nullopt) {
    nlohmann::json j{{"id", id}, {"width", img.width}, {"height", img.height},
                     {"pixels_b64", base64_encode(img.pixels)}};
    if (truth)
        j["truth"] = {{"x", truth->x}, {"y", truth->y}};
    return j.dump();
}

struct WireRequest {
    std::uint64_t id = 0;
    GrayImage image;
    std::optional<Vec2px> truth;
};

/// Server-side parsing, shared with the stub predictor.
inline WireRequest decode_request(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    WireRequest r;
    r.id = j.at("id").get<std::uint64_t>();
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    auto px = base64_decode(j.at("pixels_b64").get<std::string>());
    if (!px || w <= 0 || h <= 0 || px->size() != static_cast<std::size_t>(w) * h)
        throw std::runtime_error("pixel payload does not match width x height");
    r.image.width = w;
    r.image.height = h;
    r.image.pixels = std::move(*px);
    if (auto t = j.find("truth"); t != j.end())
        r.truth = Vec2px{t->at("x").get<double>(), t->at("y").get<double>()};
    return r;
}

inline Vec2px decode_response(const std::string& line, std::uint64_t expected_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw PredictorError("malformed predictor response: " + line.substr(0, 80));
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned() ||
        j["id"].get<std::uint64_t>() != expected_id)
        throw PredictorError("predictor response id mismatch");
    if (j.contains("error"))
        throw PredictorError("predictor reported: " + j["error"].dump());
    if (!j.contains("x") || !j.contains("y") || !j["x"].is_number() || !j["y"].is_number())
        throw PredictorError("predictor response lacks numeric x/y");
    const Vec2px v{j["x"].get<double>(), j["y"].get<double>()};
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
        throw PredictorError("predictor response is not finite");
    return v;
}

/// Bidirectional line transport.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    virtual void write_line(const std::string& line) = 0;
    /// Empty on timeout.  Throws PredictorError when the peer is gone.
    virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

namespace detail {

/// Line reader over a file descriptor with poll-based timeouts.
class FdLineReader {
public:
    explicit FdLineReader(int fd) : fd_(fd) {}

    std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r')
                    line.pop_back();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0)
                return std::nullopt;
            pollfd p{fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
            if (rc < 0) {
                if (errno == EINTR)
                    continue;
                throw PredictorError(std::string("poll failed: ") + std::strerror(errno));
            }
            if (rc == 0)
                return std::nullopt;
            char chunk[65536];
            const ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN)
                    continue;
                throw PredictorError(std::string("read failed: ") + std::strerror(errno));
            }
            if (n == 0)
                throw PredictorError("predictor endpoint closed the connection");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buffer_;
};

inline void write_all(int fd, const std::string& data, bool socket) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                 : ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw PredictorError(std::string("write to predictor failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

}  // namespace detail

/// Spawns `argv` and talks to it over its stdin/stdout.
class ChildProcessChannel final : public LineChannel {
public:
    explicit ChildProcessChannel(const std::vector<std::string>& argv) : reader_(-1) {
        if (argv.empty())
            throw ConfigError("predictor command is empty");
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2], from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0)
            throw PredictorError("pipe() failed");
        pid_ = ::fork();
        if (pid_ < 0)
            throw PredictorError("fork() failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> args;
            for (const auto& a : argv)
                args.push_back(const_cast<char*>(a.c_str()));
            args.push_back(nullptr);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        reader_ = detail::FdLineReader(out_fd_);
    }

    ChildProcessChannel(const ChildProcessChannel&) = delete;
    ChildProcessChannel& operator=(const ChildProcessChannel&) = delete;

    ~ChildProcessChannel() override {
        if (in_fd_ >= 0)
            ::close(in_fd_);
        if (out_fd_ >= 0)
            ::close(out_fd_);
        if (pid_ > 0) {
            // Give the child a moment to exit on EOF, then make sure.
            for (int i = 0; i < 20; ++i) {
                if (::waitpid(pid_, nullptr, WNOHANG) == pid_)
                    return;
                ::usleep(5000);
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
        }
    }

    void write_line(const std::string& line) override { detail::write_all(in_fd_, line + "\n", false); }
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
        return reader_.read_line(timeout);
    }

private:
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    detail::FdLineReader reader_;
};

/// Connects to host:port; same framing as the child-process channel.
class TcpChannel final : public LineChannel {
public:
    TcpChannel(const std::string& host, int port) : reader_(-1) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
            throw PredictorError("cannot resolve predictor host " + host);
        for (addrinfo* a = res; a; a = a->ai_next) {
            fd_ = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
            if (fd_ < 0)
                continue;
            if (::connect(fd_, a->ai_addr, a->ai_addrlen) == 0)
                break;
            ::close(fd_);
            fd_ = -1;
        }
        ::freeaddrinfo(res);
        if (fd_ < 0)
            throw PredictorError("cannot connect to predictor at " + host + ":" + std::to_string(port));
        reader_ = detail::FdLineReader(fd_);
    }

    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;
    ~TcpChannel() override {
        if (fd_ >= 0)
            ::close(fd_);
    }

    void write_line(const std::string& line) override { detail::write_all(fd_, line + "\n", true); }
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
        return reader_.read_line(timeout);
    }

private:
    int fd_ = -1;
    detail::FdLineReader reader_;
};

struct ExternalOptions {
    double timeout_s = 5.0;
    double wall_to_sim = 1.0;  // simulated seconds charged per wall second
    bool send_truth = false;   // debugging aid for stub endpoints
};

class ExternalPredictor final : public Predictor {
public:
    ExternalPredictor(std::unique_ptr<LineChannel> channel, ExternalOptions opts = {})
        : channel_(std::move(channel)), opts_(opts) {}

    Prediction predict(const Observation& obs) override {
        if (!obs.image)
            throw PredictorError("external predictor needs an image");
        check_image(*obs.image);
        const auto id = next_id_++;
        const auto start = std::chrono::steady_clock::now();
        channel_->write_line(encode_request(id, *obs.image, opts_.send_truth ? obs.true_label : std::nullopt));
        const auto timeout = std::chrono::milliseconds(static_cast<long>(opts_.timeout_s * 1000.0));
        auto line = channel_->read_line(timeout);
        if (!line)
            throw PredictorError("predictor timed out");
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return {decode_response(*line, id), wall * opts_.wall_to_sim};
    }
    bool needs_image() const override { return true; }
    std::string name() const override { return "external"; }

private:
    std::unique_ptr<LineChannel> channel_;
    ExternalOptions opts_;
    std::uint64_t next_id_ = 0;
};

}  // namespace pih
