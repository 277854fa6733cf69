#pragma once

// Destinations for newline-delimited event records. Every sink accepts lines
// from many streams at once; lines are written whole and in call order.

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace handcue::events {

class EventSink {
public:
    virtual ~EventSink() = default;
    /// line includes its trailing newline.
    virtual void write_line(const std::string& line) = 0;
};

class StreamSink final : public EventSink {
public:
    explicit StreamSink(std::ostream& out) : out_(out) {}
    void write_line(const std::string& line) override;

private:
    std::mutex mu_;
    std::ostream& out_;
};

class FileSink final : public EventSink {
public:
    explicit FileSink(const std::filesystem::path& path);
    void write_line(const std::string& line) override;

private:
    std::mutex mu_;
    std::ofstream out_;
};

/// Serves GET /events as an HTTP chunked stream; each client receives the
/// lines published after it connected.
class HttpSink final : public EventSink {
public:
    /// port 0 picks a free port.
    HttpSink(const std::string& host, int port);
    ~HttpSink() override;
    HttpSink(const HttpSink&) = delete;
    HttpSink& operator=(const HttpSink&) = delete;

    void write_line(const std::string& line) override;

    int port() const noexcept { return port_; }
    std::size_t subscribers() const;
    /// Ends every open stream and stops the server.
    void close();

private:
    struct Hub;
    std::shared_ptr<Hub> hub_;
    struct Server;
    std::unique_ptr<Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace handcue::events
