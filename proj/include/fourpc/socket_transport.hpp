#pragma once

#include <atomic>
#include <thread>

#include "fourpc/transport.hpp"

namespace fourpc {

// TCP mesh between the four parties. Party i listens on ports[i]; higher ids
// connect to lower ids. Envelopes travel as the wire header (1-byte tag,
// 4-byte sequence, 4-byte length, little-endian) followed by the payload.
// Causal depth and virtual time are simulation-only concepts and are not on
// the wire.
class SocketTransport : public Transport {
public:
    struct Endpoint {
        std::string host = "127.0.0.1";
        int port = 0;
    };

    SocketTransport(int self, const std::array<Endpoint, kNumParties>& endpoints,
                    double connect_timeout_s = 20.0);
    ~SocketTransport() override;

    void send(int from, int to, Envelope env) override;
    Envelope recv(int self, int from, u8 tag) override;

private:
    void reader_loop(int peer);

    int self_ = 0;
    int fds_[kNumParties];
    std::mutex send_mu_[kNumParties];
    std::thread readers_[kNumParties];
    std::atomic<bool> stopping_{false};

    struct Box {
        std::mutex mu;
        std::condition_variable cv;
        std::map<u8, std::deque<Envelope>> queues;
        bool closed = false;
    };
    Box boxes_[kNumParties];
};

}  // namespace fourpc
