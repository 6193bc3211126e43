#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symexp/model.hpp"

namespace symexp {

class OracleError : public Error {
public:
    OracleError(const std::string& what, std::optional<std::int64_t> request_id = std::nullopt,
                std::optional<std::size_t> batch_index = std::nullopt)
        : Error(what), request_id_(request_id), batch_index_(batch_index) {}

    std::optional<std::int64_t> request_id() const noexcept { return request_id_; }
    std::optional<std::size_t> batch_index() const noexcept { return batch_index_; }

private:
    std::optional<std::int64_t> request_id_;
    std::optional<std::size_t> batch_index_;
};

/// The black-box decision function f: {0,1}^n -> {0,1}.
class Oracle {
public:
    virtual ~Oracle() = default;

    virtual std::size_t n_features() const = 0;
    virtual Label predict(const Instance& x) = 0;
    /// Elementwise predict; order preserved. A failure aborts the whole batch
    /// and the error carries the failing index.
    virtual std::vector<Label> predict_batch(std::span<const Instance> xs);
    virtual std::string describe() const = 0;

protected:
    void check_size(const Instance& x) const;
};

/// Exhaustive table of 2^n labels. Entry index has bit i set iff feature i is 1.
class TruthTableOracle final : public Oracle {
public:
    static constexpr std::size_t kMaxFeatures = 20;

    TruthTableOracle(std::size_t n, std::vector<Label> table);
    /// Table given as a '0'/'1' string of length 2^n.
    static TruthTableOracle from_string(std::size_t n, std::string_view table);

    std::size_t n_features() const override { return n_; }
    Label predict(const Instance& x) override;
    std::string describe() const override;

    static std::size_t index_of(const Instance& x);

private:
    std::size_t n_;
    std::vector<Label> table_;
};

/// Positive iff at least k of the features in `pixels` are 1.
class ThresholdOracle final : public Oracle {
public:
    ThresholdOracle(std::size_t n, std::vector<std::size_t> pixels, std::size_t k);

    std::size_t n_features() const override { return n_; }
    Label predict(const Instance& x) override;
    std::string describe() const override;

    std::span<const std::size_t> pixels() const noexcept { return pixels_; }
    std::size_t k() const noexcept { return k_; }

private:
    std::size_t n_;
    std::vector<std::size_t> pixels_;
    std::size_t k_;
};

/// Child process speaking newline-delimited JSON on stdin/stdout:
///   parent: {"hello":{"n_features":N}}    child: {"ready":true,"n_features":N}
///   parent: {"id":k,"x":[b0,...]}          child: {"id":k,"y":0|1}
/// Ids start at 0 and strictly increase; responses arrive in request order.
/// Single-owner: callers must serialize access.
class ExternalProcessOracle final : public Oracle {
public:
    static constexpr std::chrono::milliseconds kDefaultTimeout{10'000};

    /// `command` is run through /bin/sh -c.
    ExternalProcessOracle(std::string command, std::size_t n_features,
                          std::chrono::milliseconds timeout = kDefaultTimeout);
    ~ExternalProcessOracle() override;
    ExternalProcessOracle(const ExternalProcessOracle&) = delete;
    ExternalProcessOracle& operator=(const ExternalProcessOracle&) = delete;

    std::size_t n_features() const override { return n_; }
    Label predict(const Instance& x) override;
    std::vector<Label> predict_batch(std::span<const Instance> xs) override;
    std::string describe() const override;

    std::int64_t next_request_id() const noexcept { return next_id_; }
    /// False after a transport or protocol failure; per-request errors keep it usable.
    bool usable() const noexcept { return !broken_; }

private:
    void handshake();
    void close_child() noexcept;
    void send_line(const std::string& line);
    std::string read_line(std::optional<std::int64_t> id);
    Label read_response(std::int64_t id);
    [[noreturn]] void fail(const std::string& what, std::optional<std::int64_t> id);

    std::string command_;
    std::size_t n_;
    std::chrono::milliseconds timeout_;
    int fd_ = -1;
    int pid_ = -1;
    std::string buffer_;
    std::int64_t next_id_ = 0;
    bool broken_ = false;
};

/// Request line for the JSON-lines protocol (no trailing newline).
std::string oracle_request_line(std::int64_t id, const Instance& x);
std::string oracle_response_line(std::int64_t id, Label y);
std::string oracle_hello_line(std::size_t n_features);
std::string oracle_ready_line(std::size_t n_features);

/// One request line and the exact response line expected for it.
struct ProtocolExchange {
    std::string request;
    std::string response;
};

/// Handshake followed by each input asked `repeats` times in a row, with the
/// responses `reference` dictates. Ids count from 0.
std::vector<ProtocolExchange> conformance_vectors(Oracle& reference, std::span<const Instance> inputs,
                                                  std::size_t repeats = 2);
/// One JSON object per line: {"request":"...","response":"..."}.
std::string vectors_to_jsonl(std::span<const ProtocolExchange> vectors);
std::vector<ProtocolExchange> vectors_from_jsonl(std::istream& in);

struct ConformanceReport {
    std::size_t exchanges = 0;
    std::vector<std::string> failures;
    bool passed() const noexcept { return failures.empty(); }
};

/// Replays `vectors` against a child started from `command`. Stops at the
/// first transport failure.
ConformanceReport check_conformance(const std::string& command, std::span<const ProtocolExchange> vectors,
                                    std::chrono::milliseconds timeout = ExternalProcessOracle::kDefaultTimeout);

}  // namespace symexp
