#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace epimail {

/// σ: every agent's received (or sent) messages. BCC sets never reach a mailbox.
class Mailbox {
public:
    const std::set<Message>& of(Agent a) const {
        static const std::set<Message> empty;
        auto it = boxes_.find(a);
        return it == boxes_.end() ? empty : it->second;
    }

    bool contains(Agent a, const Message& m) const { return of(a).count(m) != 0; }

    /// Notes agent `a` can quote: L_a is not included.
    NoteSet learned(Agent a) const {
        NoteSet out;
        for (const Message& m : of(a)) out = out | m.factual_info();
        return out;
    }

    void deliver(AgentSet to, const Message& m) {
        for (Agent a : to) boxes_[a].insert(m);
    }

    const std::map<Agent, std::set<Message>>& boxes() const { return boxes_; }

    friend bool operator==(const Mailbox&, const Mailbox&) = default;

private:
    std::map<Agent, std::set<Message>> boxes_;
};

struct Configuration {
    State residual;
    Mailbox boxes;
};

enum class BlockReason {
    /// forward of a message the sender does not have in the mailbox (L.1)
    MissingOriginal,
    /// note neither held initially nor learned from the mailbox (L.2/L.3)
    UnknownNote,
};

inline const char* to_string(BlockReason r) {
    return r == BlockReason::MissingOriginal ? "missing-original" : "unknown-note";
}

struct Blocked {
    Email email;
    BlockReason reason;
};

inline std::optional<BlockReason> blocking_reason(const Configuration& c, const Email& e) {
    const Message& m = e.message;
    Agent i = m.sender();
    if (m.is_forward() && !c.boxes.contains(i, m.original())) return BlockReason::MissingOriginal;
    Note l = m.note();
    if (c.residual.notes_of(i).contains(l) || c.boxes.learned(i).contains(l)) return std::nullopt;
    return BlockReason::UnknownNote;
}

inline bool can_process(const Configuration& c, const Email& e) {
    if (!c.residual.contains(e)) throw std::invalid_argument("email is not pending: " + to_string(e));
    return !blocking_reason(c, e).has_value();
}

inline Configuration step(const Configuration& c, const Email& e) {
    if (!can_process(c, e)) throw std::invalid_argument("email not enabled: " + to_string(e));
    Configuration next{c.residual.without(e, AgentSet{}), c.boxes};
    next.boxes.deliver(e.involved(), e.message);
    return next;
}

struct Exchange {
    std::vector<Email> steps;
    Configuration final;

    bool properly_terminates() const { return final.residual.size() == 0; }

    std::vector<Blocked> stuck() const {
        std::vector<Blocked> out;
        for (const Email& e : final.residual.emails())
            if (auto r = blocking_reason(final, e)) out.push_back({e, *r});
        return out;
    }
};

/// Picks one of the enabled emails (given in structural order) by index.
using Policy = std::function<std::size_t(std::span<const Email> enabled)>;

inline std::size_t lowest_key_policy(std::span<const Email>) { return 0; }

inline Configuration initial_configuration(const State& s) { return Configuration{s, Mailbox{}}; }

inline std::vector<Email> enabled_emails(const Configuration& c) {
    std::vector<Email> out;
    for (const Email& e : c.residual.emails())
        if (!blocking_reason(c, e)) out.push_back(e);
    return out;
}

inline Exchange run_exchange(const State& s, const Policy& policy = lowest_key_policy) {
    Exchange run{{}, initial_configuration(s)};
    for (;;) {
        auto enabled = enabled_emails(run.final);
        if (enabled.empty()) return run;
        std::size_t pick = policy(enabled);
        if (pick >= enabled.size()) throw std::out_of_range("policy picked a non-enabled email");
        run.final = step(run.final, enabled[pick]);
        run.steps.push_back(enabled[pick]);
    }
}

/// Enumerates distinct maximal runs (distinct step sequences), stopping after `limit`.
inline std::vector<Exchange> all_exchanges(const State& s, std::size_t limit) {
    std::vector<Exchange> out;
    std::vector<Email> prefix;
    std::function<void(const Configuration&)> dfs = [&](const Configuration& c) {
        if (out.size() >= limit) return;
        auto enabled = enabled_emails(c);
        if (enabled.empty()) {
            out.push_back(Exchange{prefix, c});
            return;
        }
        for (const Email& e : enabled) {
            prefix.push_back(e);
            dfs(step(c, e));
            prefix.pop_back();
            if (out.size() >= limit) return;
        }
    };
    dfs(initial_configuration(s));
    return out;
}

/// Strict partial order over a state's emails, as pairs of indices into State::emails().
struct SpoWitness {
    std::set<std::pair<std::size_t, std::size_t>> order;

    bool precedes(std::size_t a, std::size_t b) const { return order.count({a, b}) != 0; }
};

/// L.1–L.3 with ≺ given by the witness, after checking that it is an spo.
inline bool check_spo(const State& s, const SpoWitness& w) {
    const auto emails = s.emails();
    const std::size_t n = emails.size();
    for (auto [a, b] : w.order) {
        if (a >= n || b >= n || a == b) return false;
        for (auto it = w.order.lower_bound({b, 0}); it != w.order.end() && it->first == b; ++it)
            if (!w.precedes(a, it->second)) return false;
    }
    auto explained = [&](std::size_t k, Agent i, Note l) {
        if (s.notes_of(i).contains(l)) return true;
        for (std::size_t p = 0; p < n; ++p) {
            if (!w.precedes(p, k)) continue;
            const Email& src = emails[p];
            if (src.receivers().contains(i) && src.message.factual_info().contains(l)) return true;
        }
        return false;
    };
    for (std::size_t k = 0; k < n; ++k) {
        const Message& m = emails[k].message;
        if (m.is_forward()) {
            bool l1 = false;
            for (std::size_t p = 0; p < n && !l1; ++p)
                l1 = w.precedes(p, k) && emails[p].message == m.original() &&
                     emails[p].involved().contains(m.sender());
            if (!l1) return false;
        }
        if (!explained(k, m.sender(), m.note())) return false;
    }
    return true;
}

struct LegalityReport {
    bool legal = false;
    /// Processing order of the greedy run (complete when legal).
    std::vector<Email> order;
    /// Only the precedences L.1–L.3 need, transitively closed. Meaningful when legal.
    SpoWitness witness;
    /// Residual emails of a stuck run with the clause that blocks each.
    std::vector<Blocked> stuck;

    explicit operator bool() const { return legal; }
};

namespace detail {

struct Saturation {
    std::vector<std::size_t> order;
    std::vector<bool> done;
};

// Greedy lowest-key saturation on indices; mirrors step/can_process.
inline Saturation saturate(const State& s) {
    const auto emails = s.emails();
    const std::size_t n = emails.size();
    std::vector<std::ptrdiff_t> original(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
        const Message& m = emails[k].message;
        if (!m.is_forward()) continue;
        if (const Email* o = s.find(m.original())) original[k] = o - emails.data();
        else original[k] = -2;
    }
    std::array<std::uint64_t, kMaxSymbols> known{};
    for (const auto& [a, held] : s.note_assignment()) known[a.index()] = held.bits();
    for (std::size_t a = 0; a < kMaxSymbols; ++a) known[a] |= 1U;  // true

    Saturation sat{{}, std::vector<bool>(n, false)};
    sat.order.reserve(n);
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (sat.done[k]) continue;
            const Message& m = emails[k].message;
            const std::uint8_t i = m.sender().index();
            if (m.is_forward()) {
                auto o = original[k];
                if (o < 0 || !sat.done[static_cast<std::size_t>(o)] ||
                    !emails[static_cast<std::size_t>(o)].involved().contains(m.sender()))
                    continue;
            }
            if (!((known[i] >> m.note().index()) & 1U)) continue;
            sat.done[k] = true;
            sat.order.push_back(k);
            const std::uint64_t fi = m.factual_info().bits();
            for (Agent a : emails[k].involved()) known[a.index()] |= fi;
            progress = true;
            break;
        }
    }
    return sat;
}

}  // namespace detail

/// Legality without diagnostics; precondition: validate_state(s) is empty.
inline bool is_legal(const State& s) {
    return detail::saturate(s).order.size() == s.size();
}

inline LegalityReport check_legality(const State& s) {
    if (auto v = validate_state(s); !v.empty())
        throw std::invalid_argument("malformed state: " + v.front().detail);
    const auto emails = s.emails();
    const std::size_t n = emails.size();
    auto sat = detail::saturate(s);
    LegalityReport report;
    for (std::size_t k : sat.order) report.order.push_back(emails[k]);
    report.legal = sat.order.size() == n;
    if (!report.legal) {
        Configuration stuck{s, Mailbox{}};
        for (const Email& e : report.order) stuck = step(stuck, e);
        report.stuck = Exchange{report.order, stuck}.stuck();
        return report;
    }

    std::vector<std::size_t> position(n);
    for (std::size_t p = 0; p < n; ++p) position[sat.order[p]] = p;
    std::set<std::pair<std::size_t, std::size_t>> required;
    for (std::size_t k = 0; k < n; ++k) {
        const Message& m = emails[k].message;
        Agent i = m.sender();
        if (m.is_forward()) {
            const Email* o = s.find(m.original());
            required.emplace(static_cast<std::size_t>(o - emails.data()), k);
        }
        if (s.notes_of(i).contains(m.note())) continue;
        // earliest processed email that delivered the note to i
        for (std::size_t p = 0; p < position[k]; ++p) {
            const Email& src = emails[sat.order[p]];
            if (src.receivers().contains(i) && src.message.factual_info().contains(m.note())) {
                required.emplace(sat.order[p], k);
                break;
            }
        }
    }
    // transitive closure
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (auto [a, b] : required) reach[a][b] = true;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t a = 0; a < n; ++a)
            if (reach[a][m])
                for (std::size_t b = 0; b < n; ++b)
                    if (reach[m][b]) reach[a][b] = true;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (reach[a][b]) report.witness.order.emplace(a, b);
    return report;
}

}  // namespace epimail
