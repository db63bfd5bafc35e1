#include "collab/transport.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace collab {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_real(std::vector<std::uint8_t>& out, double x) {
    put_u64(out, std::bit_cast<std::uint64_t>(x));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in.at(at++)) << (8 * b);
    return v;
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t& at) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in.at(at++)) << (8 * b);
    return v;
}

double get_real(const std::vector<std::uint8_t>& in, std::size_t& at) {
    return std::bit_cast<double>(get_u64(in, at));
}

void put_matrix_row_major(std::vector<std::uint8_t>& out, const Matrix& a) {
    for (Index r = 0; r < a.rows(); ++r)
        for (Index c = 0; c < a.cols(); ++c) put_real(out, a(r, c));
}

/// Lower triangle, row-major, diagonal included.
void put_matrix_packed(std::vector<std::uint8_t>& out, const Matrix& a) {
    for (Index r = 0; r < a.rows(); ++r)
        for (Index c = 0; c <= r; ++c) put_real(out, a(r, c));
}

Matrix get_matrix_row_major(const std::vector<std::uint8_t>& in, std::size_t& at, Index rows,
                            Index cols) {
    Matrix a(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) a(r, c) = get_real(in, at);
    return a;
}

Matrix get_matrix_packed(const std::vector<std::uint8_t>& in, std::size_t& at, Index side) {
    Matrix a(side, side);
    for (Index r = 0; r < side; ++r)
        for (Index c = 0; c <= r; ++c) {
            a(r, c) = get_real(in, at);
            a(c, r) = a(r, c);
        }
    return a;
}

std::uint64_t packed_count(Index side) {
    const auto s = static_cast<std::uint64_t>(side);
    return s * (s + 1) / 2;
}

/// Exact integer solution of side^2 = count, or -1.
Index square_side(std::uint64_t count) {
    const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(count))));
    return static_cast<std::uint64_t>(side) * static_cast<std::uint64_t>(side) == count ? side : -1;
}

Index packed_side(std::uint64_t count) {
    const auto side =
        static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(count) + 1.0) - 1.0) / 2.0));
    return packed_count(side) == count ? side : -1;
}

}  // namespace

MessageKind kind_of(const Message& msg) {
    return static_cast<MessageKind>(msg.body.index() + 1);
}

std::uint64_t real_count(const Message& msg, bool packed_symmetric) {
    return std::visit(
        [&](const auto& body) -> std::uint64_t {
            using Body = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<Body, SummaryBody>) {
                const auto di = static_cast<std::uint64_t>(body.theta_hat.size());
                const std::uint64_t cov =
                    packed_symmetric ? packed_count(body.sigma_hat.rows()) : di * di;
                return cov + di + 1;
            } else if constexpr (std::is_same_v<Body, RawDataBody>) {
                return static_cast<std::uint64_t>(body.features.rows()) *
                       (static_cast<std::uint64_t>(body.features.cols()) + 1);
            } else if constexpr (std::is_same_v<Body, LocalModelBody>) {
                return static_cast<std::uint64_t>(body.coeffs.size());
            } else {
                return packed_symmetric
                           ? packed_count(body.block.rows())
                           : static_cast<std::uint64_t>(body.block.rows()) *
                                 static_cast<std::uint64_t>(body.block.cols());
            }
        },
        msg.body);
}

std::vector<std::uint8_t> encode_message(const Message& msg, bool packed_symmetric) {
    std::vector<std::uint8_t> out;
    const std::uint64_t count = real_count(msg, packed_symmetric);
    out.reserve(13 + 8 * count);
    out.push_back(static_cast<std::uint8_t>(kind_of(msg)));
    put_u32(out, msg.agent_id);
    put_u64(out, count);
    std::visit(
        [&](const auto& body) {
            using Body = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<Body, SummaryBody>) {
                for (Index j = 0; j < body.theta_hat.size(); ++j) put_real(out, body.theta_hat[j]);
                if (packed_symmetric)
                    put_matrix_packed(out, body.sigma_hat);
                else
                    put_matrix_row_major(out, body.sigma_hat);
                put_real(out, body.residual_risk);
            } else if constexpr (std::is_same_v<Body, RawDataBody>) {
                // Row layout [x_row | y]: n blocks of d_i + 1 reals.
                for (Index r = 0; r < body.features.rows(); ++r) {
                    for (Index c = 0; c < body.features.cols(); ++c)
                        put_real(out, body.features(r, c));
                    put_real(out, body.labels[r]);
                }
            } else if constexpr (std::is_same_v<Body, LocalModelBody>) {
                for (Index j = 0; j < body.coeffs.size(); ++j) put_real(out, body.coeffs[j]);
            } else {
                if (packed_symmetric)
                    put_matrix_packed(out, body.block);
                else
                    put_matrix_row_major(out, body.block);
            }
        },
        msg.body);
    return out;
}

Message decode_message(const std::vector<std::uint8_t>& bytes, bool packed_symmetric,
                       std::optional<Index> raw_data_cols) {
    std::size_t at = 0;
    if (bytes.size() < 13) throw DimensionError("decode_message: frame too short");
    const auto kind = static_cast<MessageKind>(bytes[at++]);
    const std::uint32_t agent_id = get_u32(bytes, at);
    const std::uint64_t count = get_u64(bytes, at);
    if (bytes.size() != 13 + 8 * count) throw DimensionError("decode_message: frame length mismatch");

    switch (kind) {
        case MessageKind::Summary: {
            // count = cov + d_i + 1 with cov = d_i^2 (full) or d_i(d_i+1)/2.
            Index di = -1;
            for (Index cand = 0;; ++cand) {
                const std::uint64_t c =
                    (packed_symmetric ? packed_count(cand) : static_cast<std::uint64_t>(cand) * cand) +
                    static_cast<std::uint64_t>(cand) + 1;
                if (c == count) {
                    di = cand;
                    break;
                }
                if (c > count) break;
            }
            if (di < 0) throw DimensionError("decode_message: bad Summary real count");
            SummaryBody body;
            body.theta_hat.resize(di);
            for (Index j = 0; j < di; ++j) body.theta_hat[j] = get_real(bytes, at);
            body.sigma_hat = packed_symmetric ? get_matrix_packed(bytes, at, di)
                                              : get_matrix_row_major(bytes, at, di, di);
            body.residual_risk = get_real(bytes, at);
            return Message{agent_id, std::move(body)};
        }
        case MessageKind::RawData: {
            Index cols = raw_data_cols.value_or(0);
            if (!raw_data_cols) {
                if (count != 0)
                    throw DimensionError(
                        "decode_message: RawData needs raw_data_cols to recover its shape");
                cols = 0;
            }
            const std::uint64_t stride = static_cast<std::uint64_t>(cols) + 1;
            if (count % stride != 0) throw DimensionError("decode_message: bad RawData real count");
            const Index n = static_cast<Index>(count / stride);
            RawDataBody body{Matrix(n, cols), Vector(n)};
            for (Index r = 0; r < n; ++r) {
                for (Index c = 0; c < cols; ++c) body.features(r, c) = get_real(bytes, at);
                body.labels[r] = get_real(bytes, at);
            }
            return Message{agent_id, std::move(body)};
        }
        case MessageKind::LocalModel: {
            LocalModelBody body;
            body.coeffs.resize(static_cast<Index>(count));
            for (Index j = 0; j < body.coeffs.size(); ++j) body.coeffs[j] = get_real(bytes, at);
            return Message{agent_id, std::move(body)};
        }
        case MessageKind::CovarianceBlock: {
            const Index side = packed_symmetric ? packed_side(count) : square_side(count);
            if (side < 0) throw DimensionError("decode_message: bad CovarianceBlock real count");
            CovarianceBody body;
            body.block = packed_symmetric ? get_matrix_packed(bytes, at, side)
                                          : get_matrix_row_major(bytes, at, side, side);
            return Message{agent_id, std::move(body)};
        }
    }
    throw DimensionError("decode_message: unknown kind byte");
}

void ledger_record(CommLedger& ledger, std::uint32_t agent_id, Direction direction,
                   const Message& msg, bool packed_symmetric) {
    const std::uint64_t count = real_count(msg, packed_symmetric);
    auto& entry = ledger.per_agent[agent_id];
    if (direction == Direction::AgentToServer) {
        entry.reals_sent += count;
        ledger.server.reals_received += count;
    } else {
        entry.reals_received += count;
        ledger.server.reals_sent += count;
    }
}

Transport::Transport(std::string method_tag, Options opts) : opts_(std::move(opts)) {
    ledger_.method_tag = std::move(method_tag);
    if (!opts_.dump_path.empty()) {
        dump_.open(opts_.dump_path, std::ios::binary | std::ios::trunc);
        if (!dump_) throw IoError("Transport: cannot open dump path " + opts_.dump_path);
    }
}

void Transport::dump_frame(const Message& msg) {
    if (!dump_.is_open()) return;
    const auto frame = encode_message(msg, opts_.packed_symmetric);
    dump_.write(reinterpret_cast<const char*>(frame.data()),
                static_cast<std::streamsize>(frame.size()));
}

void Transport::send_to_server(Message msg) {
    std::lock_guard<std::mutex> lock(mu_);
    ledger_record(ledger_, msg.agent_id, Direction::AgentToServer, msg, opts_.packed_symmetric);
    dump_frame(msg);
    uplink_[msg.agent_id].push_back(std::move(msg));
}

std::vector<Message> Transport::drain_server_inbox() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<Message> out;
    for (auto& [id, queue] : uplink_) {
        for (auto& msg : queue) out.push_back(std::move(msg));
        queue.clear();
    }
    return out;
}

void Transport::send_to_agent(Message msg) {
    std::lock_guard<std::mutex> lock(mu_);
    ledger_record(ledger_, msg.agent_id, Direction::ServerToAgent, msg, opts_.packed_symmetric);
    dump_frame(msg);
    downlink_[msg.agent_id].push_back(std::move(msg));
}

std::vector<Message> Transport::drain_agent_inbox(std::uint32_t agent_id) {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<Message> out;
    auto it = downlink_.find(agent_id);
    if (it == downlink_.end()) return out;
    for (auto& msg : it->second) out.push_back(std::move(msg));
    it->second.clear();
    return out;
}

CommLedger Transport::ledger() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ledger_;
}

}  // namespace collab
