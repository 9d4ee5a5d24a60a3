#include "fourpc/socket_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace fourpc {

namespace {

void write_all(int fd, const u8* data, size_t len) {
    while (len > 0) {
        ssize_t n = ::write(fd, data, len);
        if (n <= 0) throw TransportError("socket write failed");
        data += n;
        len -= static_cast<size_t>(n);
    }
}

bool read_all(int fd, u8* data, size_t len) {
    while (len > 0) {
        ssize_t n = ::read(fd, data, len);
        if (n <= 0) return false;
        data += n;
        len -= static_cast<size_t>(n);
    }
    return true;
}

int listen_on(int port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw TransportError("bind failed on port " + std::to_string(port));
    if (::listen(fd, kNumParties) != 0) throw TransportError("listen failed");
    return fd;
}

int connect_to(const std::string& host, int port, double timeout_s) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(timeout_s * 1000));
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw TransportError("socket() failed");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw TransportError("bad host " + host);
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return fd;
        }
        ::close(fd);
        if (std::chrono::steady_clock::now() > deadline)
            throw TransportError("connect timeout to " + host + ":" + std::to_string(port));
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

}  // namespace

SocketTransport::SocketTransport(int self, const std::array<Endpoint, kNumParties>& eps,
                                 double connect_timeout_s)
    : self_(self) {
    for (int i = 0; i < kNumParties; ++i) fds_[i] = -1;
    int listener = listen_on(eps[self].port);
    // Higher ids dial lower ids; a one-byte hello identifies the caller.
    for (int peer = 0; peer < self; ++peer) {
        int fd = connect_to(eps[peer].host, eps[peer].port, connect_timeout_s);
        u8 hello = static_cast<u8>(self);
        write_all(fd, &hello, 1);
        fds_[peer] = fd;
    }
    for (int peer = self + 1; peer < kNumParties; ++peer) {
        int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) throw TransportError("accept failed");
        u8 hello = 0;
        if (!read_all(fd, &hello, 1)) throw TransportError("hello read failed");
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        if (hello >= kNumParties || fds_[hello] != -1) throw TransportError("bad hello");
        fds_[hello] = fd;
    }
    ::close(listener);
    for (int peer = 0; peer < kNumParties; ++peer) {
        if (peer == self_) continue;
        readers_[peer] = std::thread([this, peer] { reader_loop(peer); });
    }
}

SocketTransport::~SocketTransport() {
    stopping_ = true;
    for (int i = 0; i < kNumParties; ++i)
        if (i != self_ && fds_[i] >= 0) ::shutdown(fds_[i], SHUT_RDWR);
    for (int i = 0; i < kNumParties; ++i)
        if (i != self_ && readers_[i].joinable()) readers_[i].join();
    for (int i = 0; i < kNumParties; ++i)
        if (i != self_ && fds_[i] >= 0) ::close(fds_[i]);
}

void SocketTransport::reader_loop(int peer) {
    for (;;) {
        u8 header[kEnvelopeHeaderBytes];
        if (!read_all(fds_[peer], header, sizeof header)) break;
        Envelope env;
        env.from = peer;
        env.tag = header[0];
        env.seq = static_cast<u32>(header[1]) | static_cast<u32>(header[2]) << 8 |
                  static_cast<u32>(header[3]) << 16 | static_cast<u32>(header[4]) << 24;
        u32 len = static_cast<u32>(header[5]) | static_cast<u32>(header[6]) << 8 |
                  static_cast<u32>(header[7]) << 16 | static_cast<u32>(header[8]) << 24;
        env.payload.resize(len);
        if (!read_all(fds_[peer], env.payload.data(), len)) break;
        Box& box = boxes_[peer];
        std::lock_guard<std::mutex> lk(box.mu);
        box.queues[env.tag].push_back(std::move(env));
        box.cv.notify_all();
    }
    Box& box = boxes_[peer];
    std::lock_guard<std::mutex> lk(box.mu);
    box.closed = true;
    box.cv.notify_all();
}

void SocketTransport::send(int from, int to, Envelope env) {
    stats.record_send(from, to, env.tag, env.payload, env.depth);
    std::vector<u8> frame(kEnvelopeHeaderBytes + env.payload.size());
    frame[0] = env.tag;
    frame[1] = static_cast<u8>(env.seq);
    frame[2] = static_cast<u8>(env.seq >> 8);
    frame[3] = static_cast<u8>(env.seq >> 16);
    frame[4] = static_cast<u8>(env.seq >> 24);
    u32 len = static_cast<u32>(env.payload.size());
    frame[5] = static_cast<u8>(len);
    frame[6] = static_cast<u8>(len >> 8);
    frame[7] = static_cast<u8>(len >> 16);
    frame[8] = static_cast<u8>(len >> 24);
    std::memcpy(frame.data() + kEnvelopeHeaderBytes, env.payload.data(), env.payload.size());
    std::lock_guard<std::mutex> lk(send_mu_[to]);
    write_all(fds_[to], frame.data(), frame.size());
}

Envelope SocketTransport::recv(int /*self*/, int from, u8 tag) {
    Box& box = boxes_[from];
    std::unique_lock<std::mutex> lk(box.mu);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(watchdog_seconds * 1000));
    bool ok = box.cv.wait_until(lk, deadline, [&] {
        if (box.closed) return true;
        auto it = box.queues.find(tag);
        return it != box.queues.end() && !it->second.empty();
    });
    auto it = box.queues.find(tag);
    if (!ok || it == box.queues.end() || it->second.empty())
        throw TransportError(box.closed && ok
                                 ? "peer disconnected: P" + std::to_string(from)
                                 : "watchdog: blocked on recv from P" + std::to_string(from) +
                                       " tag " + tag_name(tag));
    Envelope env = std::move(it->second.front());
    it->second.pop_front();
    return env;
}

}  // namespace fourpc
