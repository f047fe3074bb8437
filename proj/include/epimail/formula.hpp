#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace epimail {

enum class FormulaKind : std::uint8_t { Sent, Involved, Not, And, Common };

/// φ ::= m | i ◁ m | ¬φ | φ ∧ φ | C_G φ.  K_i φ is C_{{i}} φ.
class Formula {
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

public:
    static Formula sent(const Message& m) { return make(FormulaKind::Sent, m, std::nullopt, {}, nullptr, nullptr); }
    static Formula involved(Agent i, const Message& m) {
        return make(FormulaKind::Involved, m, i, {}, nullptr, nullptr);
    }
    static Formula negate(const Formula& f) {
        return make(FormulaKind::Not, std::nullopt, std::nullopt, {}, f.node_, nullptr);
    }
    static Formula conj(const Formula& a, const Formula& b) {
        return make(FormulaKind::And, std::nullopt, std::nullopt, {}, a.node_, b.node_);
    }
    static Formula common(AgentSet group, const Formula& f) {
        if (group.empty()) throw std::invalid_argument("common knowledge needs a nonempty group");
        return make(FormulaKind::Common, std::nullopt, std::nullopt, group, f.node_, nullptr);
    }
    static Formula knows(Agent i, const Formula& f) { return common(singleton(i), f); }
    static Formula disj(const Formula& a, const Formula& b) { return negate(conj(negate(a), negate(b))); }
    static Formula implies(const Formula& a, const Formula& b) { return negate(conj(a, negate(b))); }

    /// Left-nested conjunction; `parts` must be nonempty.
    static Formula conj_all(const std::vector<Formula>& parts) {
        if (parts.empty()) throw std::invalid_argument("empty conjunction");
        Formula acc = parts.front();
        for (std::size_t k = 1; k < parts.size(); ++k) acc = conj(acc, parts[k]);
        return acc;
    }

    FormulaKind kind() const { return node_->kind; }
    const Message& message() const { return *node_->message; }
    Agent agent() const { return *node_->agent; }
    AgentSet group() const { return node_->group; }
    Formula sub() const { return Formula(node_->left); }
    Formula left() const { return Formula(node_->left); }
    Formula right() const { return Formula(node_->right); }

    /// True when no common-knowledge operator occurs.
    bool epistemic_free() const { return node_->epistemic_free; }
    std::size_t size() const { return node_->size; }

    friend bool operator==(const Formula& a, const Formula& b) { return compare(*a.node_, *b.node_) == 0; }
    friend std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
        return compare(*a.node_, *b.node_);
    }

private:
    struct Node {
        FormulaKind kind;
        std::optional<Message> message;
        std::optional<Agent> agent;
        AgentSet group;
        NodePtr left;
        NodePtr right;
        bool epistemic_free = true;
        std::size_t size = 1;
    };

    static Formula make(FormulaKind kind, std::optional<Message> m, std::optional<Agent> a, AgentSet g,
                        NodePtr left, NodePtr right) {
        bool free = kind != FormulaKind::Common && (!left || left->epistemic_free) &&
                    (!right || right->epistemic_free);
        std::size_t size = 1 + (left ? left->size : 0) + (right ? right->size : 0);
        return Formula(std::make_shared<const Node>(
            Node{kind, std::move(m), a, g, std::move(left), std::move(right), free, size}));
    }

    static std::strong_ordering compare(const Node& x, const Node& y) {
        if (&x == &y) return std::strong_ordering::equal;
        if (auto c = x.kind <=> y.kind; c != 0) return c;
        switch (x.kind) {
            case FormulaKind::Sent: return *x.message <=> *y.message;
            case FormulaKind::Involved:
                if (auto c = *x.agent <=> *y.agent; c != 0) return c;
                return *x.message <=> *y.message;
            case FormulaKind::Not: return compare(*x.left, *y.left);
            case FormulaKind::And:
                if (auto c = compare(*x.left, *y.left); c != 0) return c;
                return compare(*x.right, *y.right);
            case FormulaKind::Common:
                if (auto c = x.group <=> y.group; c != 0) return c;
                return compare(*x.left, *y.left);
        }
        return std::strong_ordering::equal;
    }

    explicit Formula(NodePtr node) : node_(std::move(node)) {}

    NodePtr node_;
};

/// m_B as a formula over the declared agent set:
/// m ∧ ⋀_{i ∈ S∪R∪B} i◁m ∧ ⋀_{i ∉ S∪R∪B} ¬ i◁m.
inline Formula expand_email_atom(const Message& m, AgentSet bcc, AgentSet agents) {
    if (m.participants().intersects(bcc))
        throw std::invalid_argument("BCC set overlaps sender/recipients of " + to_string(m));
    AgentSet in = m.participants() | bcc;
    std::vector<Formula> parts{Formula::sent(m)};
    for (Agent i : in) parts.push_back(Formula::involved(i, m));
    for (Agent i : agents - in) parts.push_back(Formula::negate(Formula::involved(i, m)));
    return Formula::conj_all(std::move(parts));
}

inline Formula expand_email_atom(const Email& e, AgentSet agents) {
    return expand_email_atom(e.message, e.bcc, agents);
}

/// Recognises the shape produced by expand_email_atom and recovers (m, B).
inline std::optional<Email> match_email_atom(const Formula& f, AgentSet agents) {
    std::vector<Formula> parts;
    Formula cur = f;
    while (cur.kind() == FormulaKind::And) {
        parts.push_back(cur.right());
        cur = cur.left();
    }
    parts.push_back(cur);
    const Formula head = parts.back();
    if (head.kind() != FormulaKind::Sent) return std::nullopt;
    const Message& m = head.message();
    AgentSet in;
    for (const Formula& p : parts)
        if (p.kind() == FormulaKind::Involved && p.message() == m) in.insert(p.agent());
    if (!m.participants().subset_of(in)) return std::nullopt;
    Email e{m, in - m.participants()};
    if (expand_email_atom(e, agents) != f) return std::nullopt;
    return e;
}

}  // namespace epimail
