#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "collab/types.hpp"

namespace collab {

// ---------------------------------------------------------------------------
// Messages. The wire frame is the stable contract:
//   1 kind byte | 4-byte LE agent id | 8-byte LE payload real-count |
//   IEEE-754 64-bit LE reals, matrices in row-major order.
// The frame carries no shape metadata beyond the real count, so decoding
// infers shapes per kind; RawData needs the column count supplied by the
// receiver (the server knows every agent's mask).
// ---------------------------------------------------------------------------

enum class MessageKind : std::uint8_t {
    Summary = 1,
    RawData = 2,
    LocalModel = 3,
    CovarianceBlock = 4,
};

struct SummaryBody {
    Vector theta_hat;
    Matrix sigma_hat;  // d_i x d_i symmetric
    double residual_risk;
};

struct RawDataBody {
    Matrix features;  // n x d_i
    Vector labels;    // n
};

struct LocalModelBody {
    Vector coeffs;
};

struct CovarianceBody {
    Matrix block;  // square symmetric
};

struct Message {
    std::uint32_t agent_id;
    std::variant<SummaryBody, RawDataBody, LocalModelBody, CovarianceBody> body;
};

MessageKind kind_of(const Message& msg);

/// Number of payload reals the message occupies on the wire. Symmetric
/// matrices ship in full by default (d^2 reals, the Theta(d_i^2) accounting);
/// packed mode ships the lower triangle and the ledger reflects it.
std::uint64_t real_count(const Message& msg, bool packed_symmetric = false);

std::vector<std::uint8_t> encode_message(const Message& msg, bool packed_symmetric = false);

/// Inverse of encode_message. raw_data_cols supplies d_i when decoding
/// RawData frames (unrecoverable from the count alone); other kinds infer
/// their shape from the count.
Message decode_message(const std::vector<std::uint8_t>& bytes, bool packed_symmetric = false,
                       std::optional<Index> raw_data_cols = std::nullopt);

// ---------------------------------------------------------------------------
// Communication ledger: exact real-number counts per agent, per Table-1-style
// accounting. Metadata bytes are excluded; only payload reals count.
// ---------------------------------------------------------------------------

enum class Direction { AgentToServer, ServerToAgent };

struct LedgerEntry {
    std::uint64_t reals_sent = 0;
    std::uint64_t reals_received = 0;
};

struct CommLedger {
    std::string method_tag;
    std::map<std::uint32_t, LedgerEntry> per_agent;
    LedgerEntry server;

    const LedgerEntry& agent(std::uint32_t id) const {
        static const LedgerEntry zero;
        auto it = per_agent.find(id);
        return it == per_agent.end() ? zero : it->second;
    }

    std::uint64_t total_agent_sent() const {
        std::uint64_t t = 0;
        for (const auto& [id, e] : per_agent) t += e.reals_sent;
        return t;
    }
    std::uint64_t total_agent_received() const {
        std::uint64_t t = 0;
        for (const auto& [id, e] : per_agent) t += e.reals_received;
        return t;
    }
};

void ledger_record(CommLedger& ledger, std::uint32_t agent_id, Direction direction,
                   const Message& msg, bool packed_symmetric = false);

// ---------------------------------------------------------------------------
// Transport: in-process queue pair per agent. Producers may be concurrent;
// the server consumes uplink messages in agent-id order so runs stay
// deterministic. An optional dump sink writes every frame to disk.
// ---------------------------------------------------------------------------

class Transport {
  public:
    struct Options {
        bool packed_symmetric = false;
        std::string dump_path;  // empty: no dump
    };

    explicit Transport(std::string method_tag, Options opts = {});

    void send_to_server(Message msg);
    /// All queued uplink messages, agent-id order (FIFO within an agent).
    std::vector<Message> drain_server_inbox();

    void send_to_agent(Message msg);
    std::vector<Message> drain_agent_inbox(std::uint32_t agent_id);

    CommLedger ledger() const;
    bool packed() const { return opts_.packed_symmetric; }

  private:
    void dump_frame(const Message& msg);

    mutable std::mutex mu_;
    std::map<std::uint32_t, std::deque<Message>> uplink_;
    std::map<std::uint32_t, std::deque<Message>> downlink_;
    CommLedger ledger_;
    Options opts_;
    std::ofstream dump_;
};

}  // namespace collab
