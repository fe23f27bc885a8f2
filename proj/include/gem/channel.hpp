// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace gem::io {

/// Newline-delimited byte stream. One writer and one reader may use a channel concurrently.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    // Appends the terminating '\n'.
    virtual void write_line(std::string_view line) = 0;
    // nullopt at end of stream.
    virtual std::optional<std::string> read_line() = 0;
    virtual void close_write() = 0;
};

/// Two connected in-process ends: what one writes, the other reads.
std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> make_memory_channel_pair();

/// Reads and writes POSIX file descriptors. Owned descriptors are closed on destruction.
class FdChannel : public LineChannel {
public:
    FdChannel(int read_fd, int write_fd, bool owns_fds);
    ~FdChannel() override;
    FdChannel(const FdChannel&) = delete;
    FdChannel& operator=(const FdChannel&) = delete;

    void write_line(std::string_view line) override;
    std::optional<std::string> read_line() override;
    void close_write() override;

protected:
    int m_read_fd;
    int m_write_fd;
    bool m_owns;
    std::string m_buffer;
};

/// Spawns `/bin/sh -c command` and talks to it over its stdin/stdout.
class ChildProcessChannel final : public FdChannel {
public:
    explicit ChildProcessChannel(const std::string& command);
    ~ChildProcessChannel() override;

private:
    ChildProcessChannel(int read_fd, int write_fd, int pid);
    int m_pid;
};

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port);

/// Endpoint syntax: "tcp:HOST:PORT" or "cmd:COMMAND".
std::unique_ptr<LineChannel> open_endpoint(const std::string& endpoint);

/// Listening socket; accept() blocks for the next connection.
class TcpListener {
public:
    explicit TcpListener(int port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    int port() const { return m_port; }
    std::unique_ptr<LineChannel> accept();

private:
    int m_fd;
    int m_port;
};

}  // namespace gem::io
