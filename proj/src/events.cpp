#include "handcue/events.hpp"

#include <chrono>

#include "handcue/error.hpp"
#include "httplib.h"

namespace handcue::events {

void StreamSink::write_line(const std::string& line) {
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
}

FileSink::FileSink(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
}

void FileSink::write_line(const std::string& line) {
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
    if (!out_) throw Error(Errc::io, "event file write failed");
}

struct HttpSink::Hub {
    struct Subscriber {
        std::deque<std::string> pending;
    };

    mutable std::mutex mu;
    std::condition_variable cv;
    std::vector<std::shared_ptr<Subscriber>> subs;
    bool closed = false;

    void publish(const std::string& line) {
        {
            std::lock_guard lock(mu);
            for (auto& s : subs) s->pending.push_back(line);
        }
        cv.notify_all();
    }
};

struct HttpSink::Server {
    httplib::Server http;
};

HttpSink::HttpSink(const std::string& host, int port)
    : hub_(std::make_shared<Hub>()), server_(std::make_unique<Server>()) {
    auto hub = hub_;
    server_->http.Get("/events", [hub](const httplib::Request&, httplib::Response& res) {
        auto sub = std::make_shared<Hub::Subscriber>();
        {
            std::lock_guard lock(hub->mu);
            hub->subs.push_back(sub);
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "application/x-ndjson",
            [hub, sub](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(hub->mu);
                hub->cv.wait_for(lock, std::chrono::milliseconds(200),
                                 [&] { return hub->closed || !sub->pending.empty(); });
                std::deque<std::string> batch;
                batch.swap(sub->pending);
                const bool closed = hub->closed;
                lock.unlock();
                for (const auto& line : batch)
                    if (!sink.write(line.data(), line.size())) return false;
                if (closed) {
                    sink.done();
                    return true;
                }
                return sink.is_writable();
            },
            [hub, sub](bool) {
                std::lock_guard lock(hub->mu);
                std::erase(hub->subs, sub);
            });
    });

    if (port == 0) {
        port_ = server_->http.bind_to_any_port(host);
        if (port_ < 0) throw Error(Errc::io, "cannot bind " + host);
    } else {
        if (!server_->http.bind_to_port(host, port))
            throw Error(Errc::io, "cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    thread_ = std::thread([this] { server_->http.listen_after_bind(); });
    server_->http.wait_until_ready();
}

HttpSink::~HttpSink() { close(); }

void HttpSink::write_line(const std::string& line) { hub_->publish(line); }

std::size_t HttpSink::subscribers() const {
    std::lock_guard lock(hub_->mu);
    return hub_->subs.size();
}

void HttpSink::close() {
    {
        std::lock_guard lock(hub_->mu);
        if (hub_->closed && !thread_.joinable()) return;
        hub_->closed = true;
    }
    hub_->cv.notify_all();
    // let open streams drain their final chunk before the listener goes away
    for (int i = 0; i < 50; ++i) {
        if (subscribers() == 0) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    server_->http.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace handcue::events
