#include "symexp/oracle.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace symexp {

void Oracle::check_size(const Instance& x) const {
    if (x.size() != n_features())
        throw OracleError("instance has " + std::to_string(x.size()) + " features, oracle expects " +
                          std::to_string(n_features()));
}

std::vector<Label> Oracle::predict_batch(std::span<const Instance> xs) {
    std::vector<Label> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
            out.push_back(predict(xs[i]));
        } catch (const OracleError& e) {
            throw OracleError(std::string(e.what()) + " (batch index " + std::to_string(i) + ")", e.request_id(), i);
        }
    }
    return out;
}

// --- truth table -------------------------------------------------------------

TruthTableOracle::TruthTableOracle(std::size_t n, std::vector<Label> table) : n_(n), table_(std::move(table)) {
    if (n == 0 || n > kMaxFeatures) throw OracleError("truth-table oracle supports 1..20 features");
    if (table_.size() != (std::size_t{1} << n))
        throw OracleError("truth table must have 2^" + std::to_string(n) + " entries, got " +
                          std::to_string(table_.size()));
}

TruthTableOracle TruthTableOracle::from_string(std::size_t n, std::string_view table) {
    std::vector<Label> t;
    t.reserve(table.size());
    for (char c : table) {
        if (c != '0' && c != '1') throw OracleError(std::string("invalid truth-table character '") + c + "'");
        t.push_back(label_from_bool(c == '1'));
    }
    return TruthTableOracle(n, std::move(t));
}

std::size_t TruthTableOracle::index_of(const Instance& x) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) idx |= std::size_t{1} << i;
    return idx;
}

Label TruthTableOracle::predict(const Instance& x) {
    check_size(x);
    return table_[index_of(x)];
}

std::string TruthTableOracle::describe() const {
    std::string s = "truthtable(n=" + std::to_string(n_) + ", table=";
    for (auto l : table_) s += l == Label::Positive ? '1' : '0';
    return s + ")";
}

// --- threshold ---------------------------------------------------------------

ThresholdOracle::ThresholdOracle(std::size_t n, std::vector<std::size_t> pixels, std::size_t k)
    : n_(n), pixels_(std::move(pixels)), k_(k) {
    if (n == 0) throw OracleError("threshold oracle needs at least one feature");
    std::sort(pixels_.begin(), pixels_.end());
    if (std::adjacent_find(pixels_.begin(), pixels_.end()) != pixels_.end())
        throw OracleError("threshold oracle: duplicate pixel index");
    if (!pixels_.empty() && pixels_.back() >= n) throw OracleError("threshold oracle: pixel index out of range");
    if (k_ > pixels_.size()) throw OracleError("threshold oracle: k exceeds pixel count");
}

Label ThresholdOracle::predict(const Instance& x) {
    check_size(x);
    std::size_t on = 0;
    for (auto p : pixels_) on += x[p];
    return label_from_bool(on >= k_);
}

std::string ThresholdOracle::describe() const {
    return "threshold(n=" + std::to_string(n_) + ", |S|=" + std::to_string(pixels_.size()) +
           ", k=" + std::to_string(k_) + ")";
}

// --- wire protocol -----------------------------------------------------------

std::string oracle_request_line(std::int64_t id, const Instance& x) {
    std::string s = "{\"id\":" + std::to_string(id) + ",\"x\":[";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ',';
        s += x[i] ? '1' : '0';
    }
    return s + "]}";
}

std::string oracle_response_line(std::int64_t id, Label y) {
    return "{\"id\":" + std::to_string(id) + ",\"y\":" + std::to_string(to_int(y)) + "}";
}

std::string oracle_hello_line(std::size_t n) {
    return "{\"hello\":{\"n_features\":" + std::to_string(n) + "}}";
}

std::string oracle_ready_line(std::size_t n) {
    return "{\"ready\":true,\"n_features\":" + std::to_string(n) + "}";
}

// --- external process --------------------------------------------------------

ExternalProcessOracle::ExternalProcessOracle(std::string command, std::size_t n_features,
                                             std::chrono::milliseconds timeout)
    : command_(std::move(command)), n_(n_features), timeout_(timeout) {
    if (n_ == 0) throw OracleError("external oracle needs at least one feature");
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
        throw OracleError(std::string("socketpair failed: ") + std::strerror(errno));
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw OracleError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];
    pid_ = pid;

    try {
        handshake();
    } catch (...) {
        close_child();
        throw;
    }
}

void ExternalProcessOracle::handshake() {
    send_line(oracle_hello_line(n_));
    auto line = read_line(std::nullopt);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        fail("handshake: malformed line '" + line + "'", std::nullopt);
    }
    if (!j.is_object() || j.size() != 2 || !j.contains("ready") || j["ready"] != true || !j.contains("n_features") ||
        !j["n_features"].is_number_unsigned() || j["n_features"].get<std::size_t>() != n_)
        fail("handshake: unexpected reply '" + line + "'", std::nullopt);
}

ExternalProcessOracle::~ExternalProcessOracle() { close_child(); }

void ExternalProcessOracle::close_child() noexcept {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_WR);
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 100; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(10'000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void ExternalProcessOracle::fail(const std::string& what, std::optional<std::int64_t> id) {
    broken_ = true;
    throw OracleError("external oracle '" + command_ + "': " + what, id);
}

void ExternalProcessOracle::send_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
        auto w = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            fail(std::string("write failed: ") + std::strerror(errno), std::nullopt);
        }
        off += static_cast<std::size_t>(w);
    }
}

std::string ExternalProcessOracle::read_line(std::optional<std::int64_t> id) {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) fail("timed out after " + std::to_string(timeout_.count()) + " ms", id);
        pollfd p{fd_, POLLIN, 0};
        int r = ::poll(&p, 1, static_cast<int>(left.count()));
        if (r < 0) {
            if (errno == EINTR) continue;
            fail(std::string("poll failed: ") + std::strerror(errno), id);
        }
        if (r == 0) continue;
        char buf[4096];
        auto got = ::read(fd_, buf, sizeof buf);
        if (got < 0) {
            if (errno == EINTR) continue;
            fail(std::string("read failed: ") + std::strerror(errno), id);
        }
        if (got == 0) fail("process closed its output (crashed or exited)", id);
        buffer_.append(buf, static_cast<std::size_t>(got));
    }
}

Label ExternalProcessOracle::read_response(std::int64_t id) {
    auto line = read_line(id);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        fail("protocol violation: malformed line '" + line + "'", id);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer())
        fail("protocol violation: '" + line + "'", id);
    if (j["id"].get<std::int64_t>() != id)
        fail("protocol violation: expected response id " + std::to_string(id) + ", got '" + line + "'", id);
    if (j.size() == 2 && j.contains("error")) {
        throw OracleError("external oracle reported an error for request " + std::to_string(id) + ": " +
                              j["error"].dump(),
                          id);
    }
    if (j.size() != 2 || !j.contains("y") || !j["y"].is_number_integer())
        fail("protocol violation: '" + line + "'", id);
    auto y = j["y"].get<std::int64_t>();
    if (y != 0 && y != 1) fail("protocol violation: label must be 0 or 1 in '" + line + "'", id);
    return label_from_bool(y == 1);
}

Label ExternalProcessOracle::predict(const Instance& x) {
    check_size(x);
    if (broken_) throw OracleError("external oracle '" + command_ + "' is no longer usable");
    const auto id = next_id_++;
    send_line(oracle_request_line(id, x));
    return read_response(id);
}

std::vector<Label> ExternalProcessOracle::predict_batch(std::span<const Instance> xs) {
    for (const auto& x : xs) check_size(x);
    if (broken_) throw OracleError("external oracle '" + command_ + "' is no longer usable");
    constexpr std::size_t kWindow = 64;
    std::vector<Label> out;
    out.reserve(xs.size());
    std::size_t sent = 0;
    const auto first_id = next_id_;
    while (out.size() < xs.size()) {
        while (sent < xs.size() && sent - out.size() < kWindow) {
            send_line(oracle_request_line(next_id_++, xs[sent]));
            ++sent;
        }
        const auto idx = out.size();
        try {
            out.push_back(read_response(first_id + static_cast<std::int64_t>(idx)));
        } catch (const OracleError& e) {
            // Outstanding responses would desynchronize the stream.
            broken_ = true;
            throw OracleError(std::string(e.what()) + " (batch index " + std::to_string(idx) + ")", e.request_id(),
                              idx);
        }
    }
    return out;
}

std::string ExternalProcessOracle::describe() const {
    return "external(n=" + std::to_string(n_) + ", cmd=" + command_ + ")";
}

// --- conformance vectors -----------------------------------------------------

std::vector<ProtocolExchange> conformance_vectors(Oracle& reference, std::span<const Instance> inputs,
                                                  std::size_t repeats) {
    const auto n = reference.n_features();
    std::vector<ProtocolExchange> out{{oracle_hello_line(n), oracle_ready_line(n)}};
    std::int64_t id = 0;
    for (const auto& x : inputs) {
        const auto y = reference.predict(x);
        for (std::size_t r = 0; r < repeats; ++r, ++id)
            out.push_back({oracle_request_line(id, x), oracle_response_line(id, y)});
    }
    return out;
}

std::string vectors_to_jsonl(std::span<const ProtocolExchange> vectors) {
    std::string out;
    for (const auto& v : vectors) {
        out += nlohmann::json{{"request", v.request}, {"response", v.response}}.dump();
        out += '\n';
    }
    return out;
}

std::vector<ProtocolExchange> vectors_from_jsonl(std::istream& in) {
    std::vector<ProtocolExchange> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({j.at("request").get<std::string>(), j.at("response").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad conformance vector: ") + e.what());
        }
    }
    return out;
}

ConformanceReport check_conformance(const std::string& command, std::span<const ProtocolExchange> vectors,
                                    std::chrono::milliseconds timeout) {
    if (vectors.empty()) throw Error("no conformance vectors");
    std::size_t n = 0;
    try {
        n = nlohmann::json::parse(vectors[0].request).at("hello").at("n_features").get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
        throw Error("first conformance vector must be the handshake");
    }
    ConformanceReport rep;
    std::unique_ptr<ExternalProcessOracle> oracle;
    try {
        oracle = std::make_unique<ExternalProcessOracle>(command, n, timeout);
    } catch (const OracleError& e) {
        rep.failures.push_back(std::string("handshake: ") + e.what());
        return rep;
    }
    ++rep.exchanges;
    for (std::size_t k = 1; k < vectors.size(); ++k) {
        const auto& v = vectors[k];
        Instance x;
        std::int64_t id = 0;
        try {
            auto j = nlohmann::json::parse(v.request);
            id = j.at("id").get<std::int64_t>();
            std::vector<std::uint8_t> bits;
            for (const auto& b : j.at("x")) bits.push_back(static_cast<std::uint8_t>(b.get<int>()));
            x = Instance(std::move(bits));
        } catch (const nlohmann::json::exception&) {
            throw Error("malformed request in conformance vector " + std::to_string(k));
        }
        if (id != oracle->next_request_id())
            throw Error("conformance vector " + std::to_string(k) + " breaks the id sequence");
        try {
            auto got = oracle_response_line(id, oracle->predict(x));
            ++rep.exchanges;
            if (got != v.response)
                rep.failures.push_back("request " + v.request + ": expected " + v.response + ", got " + got);
        } catch (const OracleError& e) {
            rep.failures.push_back("request " + v.request + ": " + e.what());
            if (!oracle->usable()) break;
        }
    }
    return rep;
}

}  // namespace symexp
