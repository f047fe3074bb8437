#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "symbols.hpp"

namespace epimail {

enum class MessageKind : std::uint8_t { Send, Forward };

namespace detail {
inline std::size_t hash_mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}
}  // namespace detail

/// A send s(i,l,G) or a forward f(i,l.m,G) of an unaltered inner message.
/// Immutable; copies share the underlying term. Identity is structural.
class Message {
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

public:
    static Message send(Agent sender, Note note, AgentSet recipients) {
        return Message(std::make_shared<const Node>(MessageKind::Send, sender, note, recipients, nullptr));
    }

    static Message forward(Agent sender, Note note, const Message& original, AgentSet recipients) {
        return Message(std::make_shared<const Node>(MessageKind::Forward, sender, note, recipients,
                                                    original.node_));
    }

    /// Plain forward: the appended note is `true`.
    static Message forward(Agent sender, const Message& original, AgentSet recipients) {
        return forward(sender, Note::truth(), original, recipients);
    }

    MessageKind kind() const { return node_->kind; }
    bool is_forward() const { return node_->kind == MessageKind::Forward; }
    Agent sender() const { return node_->sender; }
    Note note() const { return node_->note; }
    AgentSet recipients() const { return node_->recipients; }
    /// S(m) ∪ R(m).
    AgentSet participants() const { return node_->recipients | singleton(node_->sender); }
    Message original() const {
        if (!node_->original) throw std::logic_error("send message has no original");
        return Message(node_->original);
    }
    std::size_t depth() const { return node_->depth; }
    std::size_t hash() const { return node_->hash; }
    /// FI(m), including `true`.
    NoteSet factual_info() const { return node_->fi; }

    friend bool operator==(const Message& a, const Message& b) {
        if (a.node_ == b.node_) return true;
        if (a.node_->hash != b.node_->hash) return false;
        return compare(*a.node_, *b.node_) == 0;
    }

    /// Deterministic structural order: depth first, so originals precede their forwards.
    friend std::strong_ordering operator<=>(const Message& a, const Message& b) {
        return compare(*a.node_, *b.node_);
    }

private:
    struct Node {
        Node(MessageKind k, Agent s, Note n, AgentSet r, NodePtr o)
            : kind(k), sender(s), note(n), recipients(r), original(std::move(o)) {
            if (recipients.empty()) throw std::invalid_argument("message recipients must be nonempty");
            depth = original ? original->depth + 1 : 0;
            fi = NoteSet{note, Note::truth()};
            if (original) fi = fi | original->fi;
            std::size_t h = detail::hash_mix(static_cast<std::size_t>(kind), sender.index());
            h = detail::hash_mix(h, note.index());
            h = detail::hash_mix(h, static_cast<std::size_t>(recipients.bits()));
            if (original) h = detail::hash_mix(h, original->hash);
            hash = h;
        }
        MessageKind kind;
        Agent sender;
        Note note;
        AgentSet recipients;
        NodePtr original;
        std::size_t depth = 0;
        std::size_t hash = 0;
        NoteSet fi;
    };

    static std::strong_ordering compare(const Node& x, const Node& y) {
        if (&x == &y) return std::strong_ordering::equal;
        if (auto c = x.depth <=> y.depth; c != 0) return c;
        if (auto c = x.kind <=> y.kind; c != 0) return c;
        if (auto c = x.sender <=> y.sender; c != 0) return c;
        if (auto c = x.note <=> y.note; c != 0) return c;
        if (auto c = x.recipients <=> y.recipients; c != 0) return c;
        if (x.original && y.original) return compare(*x.original, *y.original);
        return std::strong_ordering::equal;
    }

    explicit Message(NodePtr node) : node_(std::move(node)) {}

    NodePtr node_;
};

inline Agent sender(const Message& m) { return m.sender(); }
inline AgentSet recipients(const Message& m) { return m.recipients(); }
inline NoteSet factual_info(const Message& m) { return m.factual_info(); }

/// Strict: `inner` is reached by unwrapping one or more forward layers of `outer`.
inline bool is_part_of(const Message& inner, const Message& outer) {
    if (inner.depth() >= outer.depth()) return false;
    Message cur = outer;
    while (cur.depth() > inner.depth()) cur = cur.original();
    return cur == inner;
}

/// Validity of m → m2: m2 is m itself or is part of it.
inline bool implies_message(const Message& m, const Message& m2) {
    return m == m2 || is_part_of(m2, m);
}

/// Validity of m → i ◁ m2.
inline bool implies_involvement(const Message& m, Agent i, const Message& m2) {
    if (implies_message(m, m2) && m2.participants().contains(i)) return true;
    // some f(i, l.m2, G) is m or part of m
    for (Message cur = m; cur.is_forward(); cur = cur.original()) {
        if (cur.sender() == i && cur.original() == m2) return true;
    }
    return false;
}

/// A message together with its (secret) BCC recipients: the full version m_B.
struct Email {
    Message message;
    AgentSet bcc;

    /// S(m) ∪ R(m) ∪ B.
    AgentSet involved() const { return message.participants() | bcc; }
    /// R(m) ∪ B: the agents the email is delivered to.
    AgentSet receivers() const { return message.recipients() | bcc; }

    friend bool operator==(const Email&, const Email&) = default;
    friend std::strong_ordering operator<=>(const Email& a, const Email& b) {
        if (auto c = a.message <=> b.message; c != 0) return c;
        return a.bcc <=> b.bcc;
    }
};

/// m_B < m'_B' iff m ≠ m' and m' → m.
inline bool email_lt(const Email& e1, const Email& e2) {
    return e1.message != e2.message && implies_message(e2.message, e1.message);
}

inline std::vector<Email> downward_closure(std::span<const Email> all, std::span<const Email> subset) {
    std::vector<Email> out(subset.begin(), subset.end());
    for (const Email& e : all) {
        bool below = std::any_of(subset.begin(), subset.end(),
                                 [&](const Email& top) { return email_lt(e, top); });
        if (below) out.push_back(e);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// A finite set of emails plus the notes each agent initially holds.
///
/// Emails are kept sorted and free of exact duplicates. Two emails of the same
/// message with different BCC sets can be represented (validate_state reports
/// them) so that malformed inputs can be diagnosed rather than rejected silently.
class State {
public:
    using NoteAssignment = std::vector<std::pair<Agent, NoteSet>>;

    State() = default;

    State(AgentSet agents, std::vector<Email> emails, const std::map<Agent, NoteSet>& notes = {})
        : agents_(agents), emails_(std::move(emails)) {
        std::sort(emails_.begin(), emails_.end());
        emails_.erase(std::unique(emails_.begin(), emails_.end()), emails_.end());
        AgentSet keyed = agents_;
        for (const auto& [a, _] : notes) keyed.insert(a);
        for (Agent a : keyed) {
            NoteSet held{Note::truth()};
            if (auto it = notes.find(a); it != notes.end()) held = held | it->second;
            notes_.emplace_back(a, held);
        }
        rehash();
    }

    AgentSet agents() const { return agents_; }
    std::span<const Email> emails() const { return emails_; }
    std::size_t size() const { return emails_.size(); }
    const NoteAssignment& note_assignment() const { return notes_; }

    /// L_i; agents without an entry hold only `true`.
    NoteSet notes_of(Agent a) const {
        for (const auto& [b, held] : notes_)
            if (b == a) return held;
        return NoteSet{Note::truth()};
    }

    /// The full version of m, if any (the first one when the state is malformed).
    const Email* find(const Message& m) const {
        auto it = std::lower_bound(emails_.begin(), emails_.end(), m,
                                   [](const Email& e, const Message& key) { return e.message < key; });
        if (it != emails_.end() && it->message == m) return &*it;
        return nullptr;
    }

    std::optional<std::size_t> index_of(const Email& e) const {
        auto it = std::lower_bound(emails_.begin(), emails_.end(), e);
        if (it != emails_.end() && *it == e) return static_cast<std::size_t>(it - emails_.begin());
        return std::nullopt;
    }

    bool contains(const Email& e) const { return index_of(e).has_value(); }
    bool has_message(const Message& m) const { return find(m) != nullptr; }

    std::size_t hash() const { return hash_; }

    // Structural surgery; each returns a new state.
    State without(const Email& e, AgentSet augmented) const {
        State out = *this;
        auto idx = index_of(e);
        if (!idx) throw std::invalid_argument("email not in state");
        out.emails_.erase(out.emails_.begin() + static_cast<std::ptrdiff_t>(*idx));
        out.augment(augmented, e.message.factual_info());
        out.rehash();
        return out;
    }

    State replaced(const Email& e, Email replacement, AgentSet augmented) const {
        State out = *this;
        auto idx = index_of(e);
        if (!idx) throw std::invalid_argument("email not in state");
        out.emails_.erase(out.emails_.begin() + static_cast<std::ptrdiff_t>(*idx));
        out.emails_.insert(std::lower_bound(out.emails_.begin(), out.emails_.end(), replacement),
                           std::move(replacement));
        out.augment(augmented, e.message.factual_info());
        out.rehash();
        return out;
    }

    State with_email(Email e) const {
        State out = *this;
        auto pos = std::lower_bound(out.emails_.begin(), out.emails_.end(), e);
        if (pos != out.emails_.end() && *pos == e) return out;
        out.emails_.insert(pos, std::move(e));
        out.rehash();
        return out;
    }

    State with_notes(Agent a, NoteSet extra) const {
        State out = *this;
        out.augment(singleton(a), extra);
        out.rehash();
        return out;
    }

    friend bool operator==(const State& a, const State& b) {
        return a.hash_ == b.hash_ && a.agents_ == b.agents_ && a.notes_ == b.notes_ &&
               a.emails_ == b.emails_;
    }

private:
    void augment(AgentSet who, NoteSet extra) {
        for (auto& [a, held] : notes_)
            if (who.contains(a)) held = held | extra;
        for (Agent a : who) {
            bool present = std::any_of(notes_.begin(), notes_.end(),
                                       [&](const auto& entry) { return entry.first == a; });
            if (!present) {
                auto pos = std::lower_bound(
                    notes_.begin(), notes_.end(), a,
                    [](const auto& entry, Agent key) { return entry.first < key; });
                notes_.emplace(pos, a, extra | NoteSet{Note::truth()});
            }
        }
    }

    void rehash() {
        std::size_t h = static_cast<std::size_t>(agents_.bits());
        for (const auto& [a, held] : notes_) {
            h = detail::hash_mix(h, a.index());
            h = detail::hash_mix(h, static_cast<std::size_t>(held.bits()));
        }
        for (const Email& e : emails_) {
            h = detail::hash_mix(h, e.message.hash());
            h = detail::hash_mix(h, static_cast<std::size_t>(e.bcc.bits()));
        }
        hash_ = h;
    }

    AgentSet agents_;
    std::vector<Email> emails_;
    NoteAssignment notes_;
    std::size_t hash_ = 0;
};

struct StateHash {
    std::size_t operator()(const State& s) const { return s.hash(); }
};

/// s ∖ m_B: drop the email; its recipients (regular and BCC) keep what it told them.
inline State remove_email(const State& s, const Email& e) {
    return s.without(e, e.receivers());
}

/// s[m_{B ↦ C}] for C ⊆ B.
inline State shrink_bcc(const State& s, const Email& e, AgentSet c) {
    if (!c.subset_of(e.bcc)) throw std::invalid_argument("new BCC set is not a subset of the old one");
    if (!s.contains(e)) throw std::invalid_argument("email not in state");
    return s.replaced(e, Email{e.message, c}, e.bcc - c);
}

/// Generalisation used for universe exploration: agents dropped from the BCC set
/// keep the factual information; agents added receive nothing extra.
inline State change_bcc(const State& s, const Email& e, AgentSet c) {
    return s.replaced(e, Email{e.message, c}, e.bcc - c);
}

/// <-maximal emails: those whose message is not forwarded (at any depth) within the state.
inline bool is_maximal(const State& s, const Email& e) {
    for (const Email& other : s.emails())
        if (email_lt(e, other)) return false;
    return true;
}

enum class ViolationKind { BccOverlap, DuplicateFullVersion, EmptyRecipients, UndeclaredAgent };

struct Violation {
    ViolationKind kind;
    std::string detail;
};

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::BccOverlap: return "bcc-overlap";
        case ViolationKind::DuplicateFullVersion: return "duplicate-full-version";
        case ViolationKind::EmptyRecipients: return "empty-recipients";
        case ViolationKind::UndeclaredAgent: return "undeclared-agent";
    }
    return "?";
}

std::string to_string(const Message& m);

inline std::vector<Violation> validate_state(const State& s) {
    std::vector<Violation> out;
    const auto& emails = s.emails();
    for (std::size_t k = 0; k < emails.size(); ++k) {
        const Email& e = emails[k];
        if (e.message.participants().intersects(e.bcc))
            out.push_back({ViolationKind::BccOverlap,
                           "BCC set of " + to_string(e.message) + " overlaps sender/recipients"});
        if (k > 0 && emails[k - 1].message == e.message)
            out.push_back({ViolationKind::DuplicateFullVersion,
                           "message " + to_string(e.message) + " has more than one full version"});
        AgentSet mentioned = e.involved();
        for (Message cur = e.message;; cur = cur.original()) {
            mentioned = mentioned | cur.participants();
            if (!cur.is_forward()) break;
        }
        if (!mentioned.subset_of(s.agents()))
            out.push_back({ViolationKind::UndeclaredAgent,
                           "email " + to_string(e.message) + " mentions undeclared agent(s) " +
                               join_names(mentioned - s.agents())});
    }
    for (const auto& [a, _] : s.note_assignment())
        if (!s.agents().contains(a))
            out.push_back({ViolationKind::UndeclaredAgent, "notes given for undeclared agent " + a.name()});
    return out;
}

/// Term notation: s(c,l,{a,d}), f(a,s(c,l,{a,d}),{b}), f(a,l2.s(...),{b}).
inline std::string to_string(const Message& m) {
    std::string group = "{" + join_names(m.recipients()) + "}";
    if (!m.is_forward()) return "s(" + m.sender().name() + "," + m.note().name() + "," + group + ")";
    std::string note = m.note().is_truth() ? "" : m.note().name() + ".";
    return "f(" + m.sender().name() + "," + note + to_string(m.original()) + "," + group + ")";
}

inline std::string to_string(const Email& e) {
    return to_string(e.message) + "_{" + join_names(e.bcc) + "}";
}

}  // namespace epimail

template <>
struct std::hash<epimail::Message> {
    std::size_t operator()(const epimail::Message& m) const { return m.hash(); }
};
