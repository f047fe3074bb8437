#pragma once

// Truth of formulas over legal states.
//
// Atoms and boolean connectives are decided on the state itself. C_G φ
// quantifies over every legal state ∼_G-reachable from the current one, an
// infinite set; it is evaluated over a finite universe of legal states generated
// from the root by the constructions that preserve legality (email removal, BCC
// variation, note augmentation, bounded forward insertion). Every universe
// member is legal and every ∼ step inside it is genuine, so a `false` verdict on
// a common-knowledge formula with an epistemic-free body is a sound refutation.
// `true` verdicts on epistemic formulas are relative to the universe and are
// labelled bounded.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "formula.hpp"
#include "legality.hpp"
#include "model.hpp"

namespace epimail {

/// m_B ∼_i m'_B'
inline bool email_indist(const Email& e1, const Email& e2, Agent i) {
    const Message& m = e1.message;
    if (m != e2.message) return false;
    if (m.sender() == i) return e1.bcc == e2.bcc;
    if (m.recipients().contains(i)) return true;
    return e1.bcc.contains(i) && e2.bcc.contains(i);
}

/// s1 ∼_i s2, by the defining clauses.
inline bool state_indist(const State& s1, const State& s2, Agent i) {
    if (s1.notes_of(i) != s2.notes_of(i)) return false;
    auto covered = [i](const State& from, const State& to) {
        for (const Email& e : from.emails()) {
            if (!e.involved().contains(i)) continue;
            bool matched = false;
            for (const Email& f : to.emails())
                if (email_indist(e, f, i)) {
                    matched = true;
                    break;
                }
            if (!matched) return false;
        }
        return true;
    };
    return covered(s1, s2) && covered(s2, s1);
}

/// What agent i observes of a state: L_i and each email it took part in, with
/// the BCC set visible only when i sent it. Equal views ⇔ ∼_i.
struct AgentView {
    NoteSet notes;
    std::vector<std::pair<Message, AgentSet>> seen;

    friend bool operator==(const AgentView&, const AgentView&) = default;
    friend auto operator<=>(const AgentView&, const AgentView&) = default;
};

inline AgentView agent_view(const State& s, Agent i) {
    AgentView v{s.notes_of(i), {}};
    for (const Email& e : s.emails())
        if (e.involved().contains(i))
            v.seen.emplace_back(e.message, e.message.sender() == i ? e.bcc : AgentSet{});
    return v;
}

/// Truth of an epistemic-free formula, read off the state.
inline bool holds_directly(const State& s, const Formula& f) {
    switch (f.kind()) {
        case FormulaKind::Sent: return s.has_message(f.message());
        case FormulaKind::Involved: {
            const Email* e = s.find(f.message());
            return e != nullptr && e->involved().contains(f.agent());
        }
        case FormulaKind::Not: return !holds_directly(s, f.sub());
        case FormulaKind::And: return holds_directly(s, f.left()) && holds_directly(s, f.right());
        case FormulaKind::Common:
            throw std::invalid_argument("common knowledge cannot be read off a single state");
    }
    return false;
}

struct UniverseParams {
    /// drop <-maximal emails
    bool removals = true;
    /// vary BCC sets within Ag ∖ (S ∪ R)
    bool bcc_variants = true;
    /// extend L_j by notes occurring in the root's messages
    bool note_augment = true;
    /// most TRUE-note single-recipient forwards added on top of the root
    std::size_t fwd_depth = 1;
    std::size_t max_states = 20000;

    /// Componentwise ⊆: every state generated under *this is generated under `wider`.
    bool within(const UniverseParams& wider) const {
        return (!removals || wider.removals) && (!bcc_variants || wider.bcc_variants) &&
               (!note_augment || wider.note_augment) &&
               fwd_depth <= wider.fwd_depth && max_states <= wider.max_states;
    }
};

/// Finite set of legal states closed (up to the cap) under the legality-preserving
/// constructions. Member 0 is the root.
class Universe {
public:
    Universe(const State& root, const UniverseParams& params) : params_(params) {
        if (!is_legal(root)) throw std::invalid_argument("universe root must be a legal state");
        for (const Email& e : root.emails()) root_messages_.insert(e.message);
        for (const Email& e : root.emails()) notes_ = notes_ | e.message.factual_info();
        notes_.erase(Note::truth());
        admit(root);
        for (std::size_t next = 0; next < states_.size() && !truncated_; ++next) expand(next);
    }

    const std::vector<State>& states() const { return states_; }
    std::size_t size() const { return states_.size(); }
    bool truncated() const { return truncated_; }
    const UniverseParams& params() const { return params_; }

    std::optional<std::size_t> find(const State& s) const {
        auto it = index_.find(s);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    void admit(const State& s) {
        if (truncated_ || index_.count(s)) return;
        if (rejected_.count(s) || !is_legal(s)) {
            rejected_.insert(s);
            return;
        }
        if (states_.size() == params_.max_states) {
            truncated_ = true;
            return;
        }
        index_.emplace(s, states_.size());
        states_.push_back(s);
    }

    std::size_t inserted(const State& s) const {
        std::size_t n = 0;
        for (const Email& e : s.emails()) n += root_messages_.count(e.message) == 0;
        return n;
    }

    void expand(std::size_t k) {
        const State t = states_[k];
        const AgentSet agents = t.agents();
        if (params_.removals)
            for (const Email& e : t.emails())
                if (is_maximal(t, e)) admit(remove_email(t, e));
        if (params_.bcc_variants) {
            for (const Email& e : t.emails()) {
                for (Agent x : agents - e.message.participants()) {
                    AgentSet toggled = e.bcc;
                    if (toggled.contains(x)) toggled.erase(x);
                    else toggled.insert(x);
                    admit(change_bcc(t, e, toggled));
                }
            }
        }
        if (params_.note_augment) {
            for (Agent a : agents)
                for (Note n : notes_ - t.notes_of(a)) admit(t.with_notes(a, NoteSet{n}));
        }
        if (inserted(t) < params_.fwd_depth) {
            for (const Email& e : t.emails()) {
                for (Agent i : e.involved()) {
                    for (Agent r : agents - singleton(i)) {
                        Message f = Message::forward(i, e.message, singleton(r));
                        if (!t.has_message(f)) admit(t.with_email(Email{f, AgentSet{}}));
                    }
                }
            }
        }
    }

    UniverseParams params_;
    std::vector<State> states_;
    std::unordered_map<State, std::size_t, StateHash> index_;
    std::unordered_set<State, StateHash> rejected_;
    std::unordered_set<Message> root_messages_;
    NoteSet notes_;
    bool truncated_ = false;
};

inline Universe generate_universe(const State& s, const UniverseParams& p) { return Universe(s, p); }

enum class EvalMode { Exact, Bounded };

inline const char* to_string(EvalMode m) { return m == EvalMode::Exact ? "exact" : "bounded"; }

/// One ∼ step of a countermodel path: `state` is indistinguishable for `via`
/// from the previous state on the path (the root for the first hop).
struct Hop {
    Agent via;
    State state;
};

struct EvalResult {
    bool value = false;
    EvalMode mode = EvalMode::Exact;
    /// Present when the formula is C_G φ and false: a ∼_G path to a state where φ fails.
    std::optional<std::vector<Hop>> countermodel;
    std::size_t universe_size = 0;
    bool truncated = false;
};

/// Global labelling of one universe: each subformula's truth is computed once for
/// every member, so nested operators reuse the same finite model.
class Evaluator {
public:
    explicit Evaluator(State root, UniverseParams params = {})
        : root_(std::move(root)), params_(params) {
        if (!is_legal(root_)) throw std::invalid_argument("formulas are evaluated on legal states only");
    }

    EvalResult eval(const Formula& f) {
        EvalResult r;
        r.mode = f.epistemic_free() ? EvalMode::Exact : EvalMode::Bounded;
        if (f.epistemic_free()) {
            r.value = holds_directly(root_, f);
            return r;
        }
        r.value = truth(f)[0] != 0;
        r.universe_size = universe().size();
        r.truncated = universe().truncated();
        if (!r.value && f.kind() == FormulaKind::Common) r.countermodel = path_to_failure(f.group(), truth(f.sub()));
        return r;
    }

    /// Truth of f at universe member k.
    bool holds_at(const Formula& f, std::size_t k) { return truth(f).at(k) != 0; }

    const Universe& universe() {
        if (!universe_) universe_.emplace(root_, params_);
        return *universe_;
    }

    const State& root() const { return root_; }

    /// Class ids of ∼_G within the universe (reflexive-transitive closure of ∪_{i∈G} ∼_i).
    const std::vector<std::uint32_t>& components(AgentSet group) {
        if (auto it = components_.find(group); it != components_.end()) return it->second;
        const std::size_t n = universe().size();
        std::vector<std::uint32_t> parent(n);
        std::iota(parent.begin(), parent.end(), 0U);
        auto find = [&](std::uint32_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (Agent a : group) {
            const auto& ids = view_ids(a);
            std::vector<std::int64_t> first(view_count_[a.index()], -1);
            for (std::uint32_t k = 0; k < n; ++k) {
                auto& f = first[ids[k]];
                if (f < 0) f = k;
                else parent[find(k)] = find(static_cast<std::uint32_t>(f));
            }
        }
        std::vector<std::uint32_t> out(n);
        for (std::uint32_t k = 0; k < n; ++k) out[k] = find(k);
        return components_.emplace(group, std::move(out)).first->second;
    }

private:
    const std::vector<char>& truth(const Formula& f) {
        if (auto it = memo_.find(f); it != memo_.end()) return it->second;
        const auto& states = universe().states();
        const std::size_t n = states.size();
        std::vector<char> out(n, 0);
        switch (f.kind()) {
            case FormulaKind::Sent:
            case FormulaKind::Involved:
                for (std::size_t k = 0; k < n; ++k) out[k] = holds_directly(states[k], f);
                break;
            case FormulaKind::Not: {
                const auto& sub = truth(f.sub());
                for (std::size_t k = 0; k < n; ++k) out[k] = !sub[k];
                break;
            }
            case FormulaKind::And: {
                const auto& l = truth(f.left());
                const auto& r = truth(f.right());
                for (std::size_t k = 0; k < n; ++k) out[k] = l[k] && r[k];
                break;
            }
            case FormulaKind::Common: {
                const auto& body = truth(f.sub());
                const auto& comp = components(f.group());
                std::vector<char> bad(n, 0);
                for (std::size_t k = 0; k < n; ++k)
                    if (!body[k]) bad[comp[k]] = 1;
                for (std::size_t k = 0; k < n; ++k) out[k] = !bad[comp[k]];
                break;
            }
        }
        return memo_.emplace(f, std::move(out)).first->second;
    }

    const std::vector<std::uint32_t>& view_ids(Agent a) {
        auto& ids = view_ids_[a.index()];
        if (!ids.empty() || universe().size() == 0) return ids;
        std::map<AgentView, std::uint32_t> classes;
        ids.reserve(universe().size());
        for (const State& s : universe().states()) {
            auto [it, fresh] = classes.emplace(agent_view(s, a), static_cast<std::uint32_t>(classes.size()));
            ids.push_back(it->second);
        }
        view_count_[a.index()] = classes.size();
        return ids;
    }

    /// buckets(a)[v] lists the members whose view for a has class id v.
    const std::vector<std::vector<std::uint32_t>>& buckets(Agent a) {
        auto& b = buckets_[a.index()];
        if (!b.empty()) return b;
        const auto& ids = view_ids(a);
        b.resize(view_count_[a.index()]);
        for (std::uint32_t k = 0; k < ids.size(); ++k) b[ids[k]].push_back(k);
        return b;
    }

    std::vector<Hop> path_to_failure(AgentSet group, const std::vector<char>& body) {
        const auto& states = universe().states();
        const std::size_t n = states.size();
        if (!body[0]) return {};
        std::vector<std::int64_t> parent(n, -1);
        std::vector<std::uint8_t> via(n, 0);
        std::map<std::uint8_t, std::vector<char>> scanned;  // per agent, per view class
        for (Agent a : group) scanned[a.index()].assign(buckets(a).size(), 0);
        std::deque<std::uint32_t> queue{0};
        parent[0] = 0;
        while (!queue.empty()) {
            std::uint32_t k = queue.front();
            queue.pop_front();
            if (!body[k]) {
                std::vector<Hop> path;
                for (std::uint32_t cur = k; cur != 0; cur = static_cast<std::uint32_t>(parent[cur]))
                    path.push_back(Hop{Agent::from_index(via[cur]), states[cur]});
                std::reverse(path.begin(), path.end());
                return path;
            }
            for (Agent a : group) {
                const std::uint32_t view = view_ids(a)[k];
                auto& done = scanned[a.index()];
                if (done[view]) continue;
                done[view] = 1;
                for (std::uint32_t next : buckets(a)[view]) {
                    if (parent[next] >= 0) continue;
                    parent[next] = k;
                    via[next] = a.index();
                    queue.push_back(next);
                }
            }
        }
        throw std::logic_error("no failing state reachable although the formula is false");
    }

    State root_;
    UniverseParams params_;
    std::optional<Universe> universe_;
    std::map<Formula, std::vector<char>> memo_;
    std::map<AgentSet, std::vector<std::uint32_t>> components_;
    std::array<std::vector<std::uint32_t>, kMaxSymbols> view_ids_;
    std::array<std::size_t, kMaxSymbols> view_count_{};
    std::array<std::vector<std::vector<std::uint32_t>>, kMaxSymbols> buckets_;
};

inline EvalResult eval(const State& s, const Formula& f, const UniverseParams& p = {}) {
    return Evaluator(s, p).eval(f);
}

}  // namespace epimail
