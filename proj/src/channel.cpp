// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/channel.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "gem/error.hpp"

namespace gem::io {

namespace {

struct LineQueue {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> lines;
    bool closed = false;
};

class MemoryChannel final : public LineChannel {
public:
    MemoryChannel(std::shared_ptr<LineQueue> in, std::shared_ptr<LineQueue> out)
        : m_in(std::move(in)), m_out(std::move(out)) {}
    ~MemoryChannel() override { close_write(); }

    void write_line(std::string_view line) override {
        std::lock_guard lock(m_out->mutex);
        if (m_out->closed)
            throw ProviderError("write on closed channel");
        m_out->lines.emplace_back(line);
        m_out->cv.notify_all();
    }

    std::optional<std::string> read_line() override {
        std::unique_lock lock(m_in->mutex);
        m_in->cv.wait(lock, [&] { return !m_in->lines.empty() || m_in->closed; });
        if (m_in->lines.empty())
            return std::nullopt;
        std::string line = std::move(m_in->lines.front());
        m_in->lines.pop_front();
        return line;
    }

    void close_write() override {
        std::lock_guard lock(m_out->mutex);
        m_out->closed = true;
        m_out->cv.notify_all();
    }

private:
    std::shared_ptr<LineQueue> m_in;
    std::shared_ptr<LineQueue> m_out;
};

void ignore_sigpipe() {
    static const bool once = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

}  // namespace

std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> make_memory_channel_pair() {
    auto a_to_b = std::make_shared<LineQueue>();
    auto b_to_a = std::make_shared<LineQueue>();
    return {std::make_unique<MemoryChannel>(b_to_a, a_to_b), std::make_unique<MemoryChannel>(a_to_b, b_to_a)};
}

FdChannel::FdChannel(int read_fd, int write_fd, bool owns_fds)
    : m_read_fd(read_fd), m_write_fd(write_fd), m_owns(owns_fds) {
    ignore_sigpipe();
}

FdChannel::~FdChannel() {
    if (!m_owns)
        return;
    if (m_write_fd >= 0 && m_write_fd != m_read_fd)
        ::close(m_write_fd);
    if (m_read_fd >= 0)
        ::close(m_read_fd);
}

void FdChannel::write_line(std::string_view line) {
    if (m_write_fd < 0)
        throw ProviderError("write on closed channel");
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
        const auto n = ::write(m_write_fd, buf.data() + off, buf.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw ProviderError(std::string("channel write failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::optional<std::string> FdChannel::read_line() {
    char chunk[65536];
    for (;;) {
        const auto pos = m_buffer.find('\n');
        if (pos != std::string::npos) {
            std::string line = m_buffer.substr(0, pos);
            m_buffer.erase(0, pos + 1);
            return line;
        }
        const auto n = ::read(m_read_fd, chunk, sizeof(chunk));
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0) {
            if (m_buffer.empty())
                return std::nullopt;
            std::string line = std::move(m_buffer);
            m_buffer.clear();
            return line;
        }
        m_buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

void FdChannel::close_write() {
    if (m_write_fd < 0)
        return;
    if (m_write_fd == m_read_fd)
        ::shutdown(m_write_fd, SHUT_WR);
    else if (m_owns)
        ::close(m_write_fd);
    m_write_fd = -1;
}

ChildProcessChannel::ChildProcessChannel(int read_fd, int write_fd, int pid)
    : FdChannel(read_fd, write_fd, true), m_pid(pid) {}

ChildProcessChannel::ChildProcessChannel(const std::string& command) : FdChannel(-1, -1, true), m_pid(-1) {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0)
        throw ProviderError("pipe failed");
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw ProviderError("pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0)
        throw ProviderError("fork failed");
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    m_read_fd = from_child[0];
    m_write_fd = to_child[1];
    m_pid = pid;
}

ChildProcessChannel::~ChildProcessChannel() {
    close_write();
    if (m_pid > 0) {
        int status = 0;
        ::waitpid(m_pid, &status, 0);
    }
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
        throw ProviderError("cannot resolve " + host);
    int fd = -1;
    for (auto* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0)
            continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0)
            break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0)
        throw ProviderError("cannot connect to " + host + ":" + service);
    return std::make_unique<FdChannel>(fd, fd, true);
}

std::unique_ptr<LineChannel> open_endpoint(const std::string& endpoint) {
    if (endpoint.rfind("cmd:", 0) == 0)
        return std::make_unique<ChildProcessChannel>(endpoint.substr(4));
    if (endpoint.rfind("tcp:", 0) == 0) {
        const auto rest = endpoint.substr(4);
        const auto colon = rest.rfind(':');
        require(colon != std::string::npos, "tcp endpoint must be tcp:HOST:PORT");
        int port = 0;
        try {
            port = std::stoi(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw ValidationError("bad port in endpoint " + endpoint);
        }
        return connect_tcp(rest.substr(0, colon), port);
    }
    throw ValidationError("unknown endpoint '" + endpoint + "' (expected tcp:HOST:PORT or cmd:COMMAND)");
}

TcpListener::TcpListener(int port) : m_fd(-1), m_port(port) {
    ignore_sigpipe();
    m_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (m_fd < 0)
        throw ProviderError("socket failed");
    int yes = 1;
    ::setsockopt(m_fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(m_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(m_fd, 4) != 0) {
        ::close(m_fd);
        throw ProviderError("cannot listen on port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(m_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    m_port = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (m_fd >= 0)
        ::close(m_fd);
}

std::unique_ptr<LineChannel> TcpListener::accept() {
    const int fd = ::accept(m_fd, nullptr, nullptr);
    if (fd < 0)
        throw ProviderError("accept failed");
    return std::make_unique<FdChannel>(fd, fd, true);
}

}  // namespace gem::io
