#include "symexp/sat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "symexp/dimacs.hpp"

namespace symexp::sat {

std::string_view to_string(Status s) {
    switch (s) {
    case Status::Sat: return "SAT";
    case Status::Unsat: return "UNSAT";
    case Status::Unknown: return "UNKNOWN";
    }
    return "?";
}

namespace {

// Internal literal: 2*v + s, v 0-based, s = 1 for negative polarity.
using Lit = std::uint32_t;
using CRef = std::uint32_t;
constexpr Lit kUndefLit = UINT32_MAX;
constexpr CRef kNoReason = UINT32_MAX;

constexpr Lit mk_lit(std::uint32_t v, bool negative) { return 2 * v + (negative ? 1u : 0u); }
constexpr Lit neg(Lit l) { return l ^ 1u; }
constexpr std::uint32_t var_of(Lit l) { return l >> 1; }
constexpr bool is_neg(Lit l) { return (l & 1u) != 0; }

Lit from_ext(Literal l) { return mk_lit(static_cast<std::uint32_t>(l.var() - 1), !l.positive()); }
Literal to_ext(Lit l) { return Literal(static_cast<Var>(var_of(l) + 1), !is_neg(l)); }

// Finite subsequence of the Luby restart sequence, scaled by y.
double luby(double y, int x) {
    int size = 1, seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    return std::pow(y, seq);
}

enum class SearchResult { Sat, Unsat, Restart, Budget };

}  // namespace

struct Solver::Impl {
    struct ClauseRec {
        std::vector<Lit> lits;
        double activity = 0;
        bool learnt = false;
        bool deleted = false;
    };
    struct Watcher {
        CRef cref;
        Lit blocker;
    };

    // Max-activity binary heap over variables; ties go to the lower index.
    struct VarHeap {
        const std::vector<double>* act = nullptr;
        std::vector<std::uint32_t> heap;
        std::vector<int> index;

        bool before(std::uint32_t a, std::uint32_t b) const {
            double x = (*act)[a], y = (*act)[b];
            return x > y || (x == y && a < b);
        }
        bool contains(std::uint32_t v) const { return v < index.size() && index[v] >= 0; }
        void up(std::size_t i) {
            auto v = heap[i];
            while (i > 0) {
                auto p = (i - 1) / 2;
                if (!before(v, heap[p])) break;
                heap[i] = heap[p];
                index[heap[i]] = static_cast<int>(i);
                i = p;
            }
            heap[i] = v;
            index[v] = static_cast<int>(i);
        }
        void down(std::size_t i) {
            auto v = heap[i];
            for (;;) {
                auto l = 2 * i + 1;
                if (l >= heap.size()) break;
                auto r = l + 1;
                auto c = (r < heap.size() && before(heap[r], heap[l])) ? r : l;
                if (!before(heap[c], v)) break;
                heap[i] = heap[c];
                index[heap[i]] = static_cast<int>(i);
                i = c;
            }
            heap[i] = v;
            index[v] = static_cast<int>(i);
        }
        void insert(std::uint32_t v) {
            if (v >= index.size()) index.resize(v + 1, -1);
            if (contains(v)) return;
            heap.push_back(v);
            up(heap.size() - 1);
        }
        void increased(std::uint32_t v) {
            if (contains(v)) up(static_cast<std::size_t>(index[v]));
        }
        std::uint32_t pop() {
            auto top = heap.front();
            index[top] = -1;
            auto last = heap.back();
            heap.pop_back();
            if (!heap.empty()) {
                heap[0] = last;
                index[last] = 0;
                down(0);
            }
            return top;
        }
        bool empty() const { return heap.empty(); }
    };

    std::vector<ClauseRec> clauses;
    std::vector<CRef> learnts;
    std::vector<std::vector<Watcher>> watches;  // watches[p]: clauses watching ~p

    std::vector<std::int8_t> assigns;  // 1 true, -1 false, 0 unassigned
    std::vector<int> level;
    std::vector<CRef> reason;
    std::vector<std::uint8_t> polarity;  // saved phase, 1 = positive
    std::vector<double> activity;
    std::vector<std::uint8_t> seen;
    VarHeap order;

    std::vector<Lit> trail;
    std::vector<std::size_t> trail_lim;
    std::size_t qhead = 0;

    std::vector<Lit> assumptions;
    std::vector<std::uint8_t> model;
    std::vector<Literal> core;

    double var_inc = 1.0;
    double cla_inc = 1.0;
    static constexpr double kVarDecay = 0.95;
    static constexpr double kClaDecay = 0.999;
    double max_learnts = 0;
    bool ok = true;
    Stats stats;

    Impl() { order.act = &activity; }

    std::uint32_t n_vars() const { return static_cast<std::uint32_t>(assigns.size()); }
    int decision_level() const { return static_cast<int>(trail_lim.size()); }
    std::int8_t value(Lit l) const {
        auto a = assigns[var_of(l)];
        return is_neg(l) ? static_cast<std::int8_t>(-a) : a;
    }

    void reserve(std::uint32_t n) {
        while (n_vars() < n) {
            auto v = n_vars();
            assigns.push_back(0);
            level.push_back(0);
            reason.push_back(kNoReason);
            polarity.push_back(0);
            activity.push_back(0.0);
            seen.push_back(0);
            watches.emplace_back();
            watches.emplace_back();
            order.insert(v);
        }
    }

    void enqueue(Lit p, CRef from) {
        auto v = var_of(p);
        assigns[v] = is_neg(p) ? -1 : 1;
        level[v] = decision_level();
        reason[v] = from;
        trail.push_back(p);
    }

    void attach(CRef cr) {
        const auto& c = clauses[cr].lits;
        watches[neg(c[0])].push_back({cr, c[1]});
        watches[neg(c[1])].push_back({cr, c[0]});
    }

    void new_decision_level() { trail_lim.push_back(trail.size()); }

    void cancel_until(int lvl) {
        if (decision_level() <= lvl) return;
        for (std::size_t c = trail.size(); c-- > trail_lim[static_cast<std::size_t>(lvl)];) {
            auto v = var_of(trail[c]);
            assigns[v] = 0;
            reason[v] = kNoReason;
            polarity[v] = is_neg(trail[c]) ? 0 : 1;
            order.insert(v);
        }
        qhead = trail_lim[static_cast<std::size_t>(lvl)];
        trail.resize(qhead);
        trail_lim.resize(static_cast<std::size_t>(lvl));
    }

    CRef propagate() {
        CRef confl = kNoReason;
        while (qhead < trail.size()) {
            Lit p = trail[qhead++];
            auto& ws = watches[p];
            ++stats.propagations;
            const Lit false_lit = neg(p);
            std::size_t i = 0, j = 0;
            while (i < ws.size()) {
                Watcher w = ws[i];
                if (value(w.blocker) == 1) {
                    ws[j++] = ws[i++];
                    continue;
                }
                auto& c = clauses[w.cref].lits;
                if (c[0] == false_lit) std::swap(c[0], c[1]);
                ++i;
                Lit first = c[0];
                Watcher nw{w.cref, first};
                if (first != w.blocker && value(first) == 1) {
                    ws[j++] = nw;
                    continue;
                }
                bool moved = false;
                for (std::size_t k = 2; k < c.size(); ++k) {
                    if (value(c[k]) != -1) {
                        c[1] = c[k];
                        c[k] = false_lit;
                        watches[neg(c[1])].push_back(nw);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[j++] = nw;
                if (value(first) == -1) {
                    confl = w.cref;
                    qhead = trail.size();
                    while (i < ws.size()) ws[j++] = ws[i++];
                } else {
                    enqueue(first, w.cref);
                }
            }
            ws.resize(j);
            if (confl != kNoReason) break;
        }
        return confl;
    }

    void bump_var(std::uint32_t v) {
        if ((activity[v] += var_inc) > 1e100) {
            for (auto& a : activity) a *= 1e-100;
            var_inc *= 1e-100;
        }
        order.increased(v);
    }

    void bump_clause(ClauseRec& c) {
        if ((c.activity += cla_inc) > 1e20) {
            for (auto cr : learnts) clauses[cr].activity *= 1e-20;
            cla_inc *= 1e-20;
        }
    }

    bool redundant(Lit l) const {
        auto r = reason[var_of(l)];
        if (r == kNoReason) return false;
        const auto& c = clauses[r].lits;
        for (std::size_t k = 1; k < c.size(); ++k) {
            auto v = var_of(c[k]);
            if (!seen[v] && level[v] > 0) return false;
        }
        return true;
    }

    void analyze(CRef confl, std::vector<Lit>& out, int& bt_level) {
        int path = 0;
        Lit p = kUndefLit;
        out.clear();
        out.push_back(kUndefLit);
        std::size_t index = trail.size();

        do {
            auto& c = clauses[confl];
            if (c.learnt) bump_clause(c);
            for (std::size_t k = (p == kUndefLit ? 0 : 1); k < c.lits.size(); ++k) {
                Lit q = c.lits[k];
                auto v = var_of(q);
                if (!seen[v] && level[v] > 0) {
                    bump_var(v);
                    seen[v] = 1;
                    if (level[v] >= decision_level())
                        ++path;
                    else
                        out.push_back(q);
                }
            }
            while (!seen[var_of(trail[--index])]) {
            }
            p = trail[index];
            confl = reason[var_of(p)];
            seen[var_of(p)] = 0;
            --path;
        } while (path > 0);
        out[0] = neg(p);

        // Local minimization: drop literals implied by the rest of the clause.
        std::vector<Lit> full = out;
        std::size_t keep = 1;
        for (std::size_t k = 1; k < out.size(); ++k)
            if (!redundant(out[k])) out[keep++] = out[k];
        out.resize(keep);
        for (auto l : full) seen[var_of(l)] = 0;

        if (out.size() == 1) {
            bt_level = 0;
        } else {
            std::size_t max_i = 1;
            for (std::size_t k = 2; k < out.size(); ++k)
                if (level[var_of(out[k])] > level[var_of(out[max_i])]) max_i = k;
            std::swap(out[1], out[max_i]);
            bt_level = level[var_of(out[1])];
        }
    }

    // `failed` is an assumption currently assigned false.
    void analyze_final(Lit failed) {
        core.clear();
        core.push_back(to_ext(failed));
        if (decision_level() == 0) return;
        seen[var_of(failed)] = 1;
        for (std::size_t i = trail.size(); i-- > trail_lim[0];) {
            auto v = var_of(trail[i]);
            if (!seen[v]) continue;
            if (reason[v] == kNoReason) {
                if (level[v] > 0) core.push_back(to_ext(trail[i]));
            } else {
                const auto& c = clauses[reason[v]].lits;
                for (std::size_t k = 1; k < c.size(); ++k)
                    if (level[var_of(c[k])] > 0) seen[var_of(c[k])] = 1;
            }
            seen[v] = 0;
        }
        seen[var_of(failed)] = 0;
    }

    bool locked(CRef cr) const {
        const auto& c = clauses[cr].lits;
        return reason[var_of(c[0])] == cr && value(c[0]) == 1;
    }

    void reduce_db() {
        std::sort(learnts.begin(), learnts.end(), [&](CRef a, CRef b) {
            const auto& x = clauses[a];
            const auto& y = clauses[b];
            if ((x.lits.size() > 2) != (y.lits.size() > 2)) return x.lits.size() > 2;
            return x.activity < y.activity || (x.activity == y.activity && a < b);
        });
        const double extra = cla_inc / static_cast<double>(std::max<std::size_t>(learnts.size(), 1));
        std::size_t keep = 0;
        bool removed = false;
        for (std::size_t i = 0; i < learnts.size(); ++i) {
            auto cr = learnts[i];
            auto& c = clauses[cr];
            if (c.lits.size() > 2 && !locked(cr) && (i < learnts.size() / 2 || c.activity < extra)) {
                c.deleted = true;
                std::vector<Lit>().swap(c.lits);
                removed = true;
            } else {
                learnts[keep++] = cr;
            }
        }
        learnts.resize(keep);
        if (removed)
            for (auto& ws : watches)
                ws.erase(std::remove_if(ws.begin(), ws.end(), [&](const Watcher& w) { return clauses[w.cref].deleted; }),
                         ws.end());
    }

    Lit pick_branch() {
        while (!order.empty()) {
            auto v = order.pop();
            if (assigns[v] == 0) return mk_lit(v, polarity[v] == 0);
        }
        return kUndefLit;
    }

    static bool out_of_budget(const Budget& b, std::uint64_t conflicts_this_call) {
        if (b.max_conflicts && conflicts_this_call >= *b.max_conflicts) return true;
        if (b.deadline && std::chrono::steady_clock::now() >= *b.deadline) return true;
        return false;
    }

    SearchResult search(double nof_conflicts, const Budget& budget, std::uint64_t& call_conflicts) {
        std::uint64_t local_conflicts = 0;
        std::uint64_t decisions_since_check = 0;
        std::vector<Lit> learnt;
        for (;;) {
            CRef confl = propagate();
            if (confl != kNoReason) {
                ++stats.conflicts;
                ++local_conflicts;
                ++call_conflicts;
                if (decision_level() == 0) {
                    ok = false;
                    return SearchResult::Unsat;
                }
                int bt = 0;
                analyze(confl, learnt, bt);
                cancel_until(bt);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], kNoReason);
                } else {
                    auto cr = static_cast<CRef>(clauses.size());
                    clauses.push_back({learnt, 0.0, true, false});
                    learnts.push_back(cr);
                    attach(cr);
                    bump_clause(clauses[cr]);
                    enqueue(learnt[0], cr);
                }
                ++stats.learned;
                var_inc *= 1.0 / kVarDecay;
                cla_inc *= 1.0 / kClaDecay;
                if (out_of_budget(budget, call_conflicts)) return SearchResult::Budget;
                continue;
            }

            if (static_cast<double>(local_conflicts) >= nof_conflicts) {
                cancel_until(0);
                ++stats.restarts;
                return SearchResult::Restart;
            }
            if (budget.deadline && ++decisions_since_check >= 1024) {
                decisions_since_check = 0;
                if (out_of_budget(budget, call_conflicts)) return SearchResult::Budget;
            }
            if (static_cast<double>(learnts.size()) - static_cast<double>(trail.size()) >= max_learnts) {
                reduce_db();
            }

            Lit next = kUndefLit;
            while (static_cast<std::size_t>(decision_level()) < assumptions.size()) {
                Lit a = assumptions[static_cast<std::size_t>(decision_level())];
                if (value(a) == 1) {
                    new_decision_level();
                } else if (value(a) == -1) {
                    analyze_final(a);
                    return SearchResult::Unsat;
                } else {
                    next = a;
                    break;
                }
            }
            if (next == kUndefLit) {
                ++stats.decisions;
                next = pick_branch();
                if (next == kUndefLit) return SearchResult::Sat;
            }
            new_decision_level();
            enqueue(next, kNoReason);
        }
    }

    Status solve(std::span<const Literal> assumps, const Budget& budget) {
        model.clear();
        core.clear();
        ++stats.solves;
        Var top = 0;
        for (auto l : assumps) top = std::max(top, l.var());
        reserve(static_cast<std::uint32_t>(top));
        if (!ok) return Status::Unsat;

        assumptions.clear();
        for (auto l : assumps) assumptions.push_back(from_ext(l));
        max_learnts = std::max(static_cast<double>(clauses.size() - learnts.size()) / 3.0, 2000.0);

        std::uint64_t call_conflicts = 0;
        SearchResult r = SearchResult::Restart;
        for (int restarts = 0; r == SearchResult::Restart; ++restarts) {
            r = search(luby(2.0, restarts) * 100.0, budget, call_conflicts);
        }

        Status status = Status::Unknown;
        if (r == SearchResult::Sat) {
            status = Status::Sat;
            model.assign(n_vars() + 1u, 0);
            for (std::uint32_t v = 0; v < n_vars(); ++v) model[v + 1] = assigns[v] > 0 ? 1 : 0;
        } else if (r == SearchResult::Unsat) {
            status = Status::Unsat;
        }
        cancel_until(0);
        return status;
    }

    void add_clause(std::span<const Literal> ext) {
        Var top = 0;
        for (auto l : ext) top = std::max(top, l.var());
        reserve(static_cast<std::uint32_t>(top));
        if (!ok) return;
        cancel_until(0);

        std::vector<Lit> ps;
        ps.reserve(ext.size());
        for (auto l : ext) ps.push_back(from_ext(l));
        std::sort(ps.begin(), ps.end());
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

        std::size_t keep = 0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (value(ps[i]) == 1 || (i + 1 < ps.size() && ps[i + 1] == neg(ps[i]))) return;  // satisfied or tautology
            if (value(ps[i]) == 0) ps[keep++] = ps[i];
        }
        ps.resize(keep);

        if (ps.empty()) {
            ok = false;
        } else if (ps.size() == 1) {
            enqueue(ps[0], kNoReason);
            ok = propagate() == kNoReason;
        } else {
            auto cr = static_cast<CRef>(clauses.size());
            clauses.push_back({std::move(ps), 0.0, false, false});
            attach(cr);
        }
    }
};

Solver::Solver() : impl_(std::make_unique<Impl>()) {}
Solver::~Solver() = default;
Solver::Solver(Solver&&) noexcept = default;
Solver& Solver::operator=(Solver&&) noexcept = default;

void Solver::reserve_vars(Var n) { impl_->reserve(static_cast<std::uint32_t>(std::max<Var>(n, 0))); }
Var Solver::var_count() const noexcept { return static_cast<Var>(impl_->n_vars()); }

void Solver::add_clause(const Clause& c) { impl_->add_clause(c.literals()); }
void Solver::add_clause(std::span<const Literal> lits) { impl_->add_clause(lits); }
void Solver::add_formula(const CnfFormula& f) {
    reserve_vars(f.var_count());
    for (const auto& c : f.clauses()) add_clause(c);
}

void Solver::set_phase(Var v, bool positive) {
    reserve_vars(v);
    impl_->polarity[static_cast<std::size_t>(v - 1)] = positive ? 1 : 0;
}

Status Solver::solve(std::span<const Literal> assumptions, const Budget& budget) {
    return impl_->solve(assumptions, budget);
}

const std::vector<std::uint8_t>& Solver::model() const noexcept { return impl_->model; }
bool Solver::model_value(Var v) const { return impl_->model.at(static_cast<std::size_t>(v)) != 0; }
const std::vector<Literal>& Solver::core() const noexcept { return impl_->core; }
bool Solver::okay() const noexcept { return impl_->ok; }
const Stats& Solver::stats() const noexcept { return impl_->stats; }

// ---------------------------------------------------------------------------
// External solvers
// ---------------------------------------------------------------------------

ExternalResult parse_solver_output(std::string_view output, Var var_count) {
    ExternalResult res;
    bool have_status = false;
    res.model.assign(static_cast<std::size_t>(var_count) + 1, 0);
    std::istringstream in{std::string(output)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("s ", 0) == 0) {
            auto verdict = line.substr(2);
            if (verdict == "SATISFIABLE")
                res.status = Status::Sat;
            else if (verdict == "UNSATISFIABLE")
                res.status = Status::Unsat;
            else if (verdict == "UNKNOWN")
                res.status = Status::Unknown;
            else
                throw Error("external solver: unrecognized status line '" + line + "'");
            have_status = true;
        } else if (line.rfind("v ", 0) == 0 || line == "v") {
            std::istringstream vs(line.substr(1));
            long long lit = 0;
            while (vs >> lit) {
                if (lit == 0) break;
                auto v = lit < 0 ? -lit : lit;
                if (v > var_count) throw Error("external solver: model literal out of range: " + std::to_string(lit));
                res.model[static_cast<std::size_t>(v)] = lit > 0 ? 1 : 0;
            }
            if (!vs.eof() && vs.fail()) throw Error("external solver: malformed value line '" + line + "'");
        }
    }
    if (!have_status) throw Error("external solver: no 's' status line in output");
    if (res.status != Status::Sat) res.model.clear();
    return res;
}

ExternalResult solve_external(const CnfFormula& cnf, const std::string& command) {
    std::array<char, 32> tmpl{};
    std::snprintf(tmpl.data(), tmpl.size(), "/tmp/symexpXXXXXX");
    int fd = ::mkstemp(tmpl.data());
    if (fd < 0) throw Error("external solver: cannot create temporary file");
    ::close(fd);
    const std::string path = tmpl.data();
    {
        std::ofstream out(path);
        out << emit_dimacs(cnf);
        if (!out) {
            std::remove(path.c_str());
            throw Error("external solver: cannot write " + path);
        }
    }

    std::string full = command + " '" + path + "'";
    FILE* pipe = ::popen(full.c_str(), "r");
    if (pipe == nullptr) {
        std::remove(path.c_str());
        throw Error("external solver: cannot launch '" + command + "'");
    }
    std::string output;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), got);
    int rc = ::pclose(pipe);
    std::remove(path.c_str());
    if (rc == -1) throw Error("external solver: wait failed");
    // Exit codes 10/20 are conventional and carry no extra information here.
    return parse_solver_output(output, cnf.var_count());
}

}  // namespace symexp::sat
