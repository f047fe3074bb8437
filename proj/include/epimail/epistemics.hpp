#pragma once

// Closed-form epistemic content of messages and emails, and exact decision
// procedures for common knowledge of sent messages, emails and involvement.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "formula.hpp"
#include "legality.hpp"
#include "model.hpp"
#include "semantics.hpp"

namespace epimail {

/// The query lies outside the fragment an exact procedure covers.
class UnsupportedFragment : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// EI(s(i,l,G)) = C_{{i}∪G} s(i,l,G);  EI(f(i,l.m,G)) = C_{{i}∪G}(f(i,l.m,G) ∧ EI(m)).
inline Formula epistemic_info(const Message& m) {
    if (!m.is_forward()) return Formula::common(m.participants(), Formula::sent(m));
    return Formula::common(m.participants(),
                           Formula::conj(Formula::sent(m), epistemic_info(m.original())));
}

/// C_{S(m)∪{i}}(EI(m) ∧ i◁m): what BCC recipient i shares with the sender.
inline Formula bcc_gain(const Message& m, Agent i) {
    return Formula::common(singleton(m.sender()) | singleton(i),
                           Formula::conj(epistemic_info(m), Formula::involved(i, m)));
}

/// EI(m_B) = EI(m) ∧ ⋀_{i∈B} C_{S(m)∪{i}}(EI(m) ∧ i◁m) ∧ C_{S(m)} m_B.
inline Formula epistemic_info(const Email& e, AgentSet agents) {
    std::vector<Formula> parts{epistemic_info(e.message)};
    for (Agent i : e.bcc) parts.push_back(bcc_gain(e.message, i));
    parts.push_back(Formula::common(singleton(e.message.sender()), expand_email_atom(e, agents)));
    return Formula::conj_all(parts);
}

/// IG(m_B, i). A self-addressed sender gets the sender's (larger) gain.
inline Formula info_gain(const Email& e, Agent i, AgentSet agents) {
    const Message& m = e.message;
    if (m.sender() == i) return epistemic_info(e, agents);
    if (m.recipients().contains(i)) return epistemic_info(m);
    if (e.bcc.contains(i)) return bcc_gain(m, i);
    throw std::invalid_argument(i.name() + " is not involved in " + to_string(e));
}

/// E_A: emails whose delivery the whole group A witnessed jointly.
inline bool is_shared_by(const Email& e, AgentSet group) {
    const AgentSet sr = e.message.participants();
    if (group.subset_of(sr)) return true;
    for (Agent j : e.bcc)
        if (group.subset_of(singleton(e.message.sender()) | singleton(j))) return true;
    return false;
}

inline std::vector<Email> shared_emails(std::span<const Email> emails, AgentSet group) {
    if (group.empty()) throw std::invalid_argument("group must be nonempty");
    std::vector<Email> out;
    for (const Email& e : emails)
        if (is_shared_by(e, group)) out.push_back(e);
    return out;
}

namespace detail {
inline void require_legal(const State& s) {
    if (!is_legal(s)) throw std::invalid_argument("decision procedures apply to legal states only");
}
inline void require_group(AgentSet group) {
    if (group.empty()) throw std::invalid_argument("group must be nonempty");
}
}  // namespace detail

/// s ⊨ C_A m iff some shared email's message implies m.
inline bool decide_ck_message(const State& s, AgentSet group, const Message& m) {
    detail::require_legal(s);
    detail::require_group(group);
    for (const Email& e : shared_emails(s.emails(), group))
        if (implies_message(e.message, m)) return true;
    return false;
}

/// s ⊨ C_A i◁m.
inline bool decide_ck_involved(const State& s, AgentSet group, Agent i, const Message& m) {
    detail::require_legal(s);
    detail::require_group(group);
    const auto shared = shared_emails(s.emails(), group);
    for (const Email& e : shared)
        if (implies_involvement(e.message, i, m)) return true;
    if (group.subset_of(singleton(m.sender()) | singleton(i))) {
        for (const Email& e : shared)
            if (e.message == m && e.bcc.contains(i)) return true;
    }
    return false;
}

struct EmailCkVerdict {
    bool holds = false;
    /// Ag = S(m) ∪ R(m) ∪ B
    bool c1 = false;
    /// every BCC recipient's involvement is proven by a shared email
    bool c2 = false;
    /// some shared email proves m
    bool c3 = false;
    /// BCC recipients for which C2 finds no shared proof
    AgentSet unproven_bcc;

    std::vector<std::string> failed() const {
        std::vector<std::string> out;
        if (!c1) out.emplace_back("C1");
        if (!c2) out.emplace_back("C2");
        if (!c3) out.emplace_back("C3");
        return out;
    }
};

/// s ⊨ C_A m_B for |A| ≥ 3.
inline EmailCkVerdict decide_ck_email(const State& s, AgentSet group, const Message& m, AgentSet bcc) {
    detail::require_legal(s);
    if (group.size() < 3)
        throw UnsupportedFragment(
            "common knowledge of an email is decided exactly only for groups of three or more agents; "
            "use the bounded evaluator");
    if (m.participants().intersects(bcc))
        throw std::invalid_argument("BCC set overlaps sender/recipients of " + to_string(m));
    const auto shared = shared_emails(s.emails(), group);
    EmailCkVerdict v;
    v.c1 = s.agents() == (m.participants() | bcc);
    for (Agent i : bcc) {
        bool proven = false;
        for (const Email& e : shared) proven = proven || implies_involvement(e.message, i, m);
        if (!proven) v.unproven_bcc.insert(i);
    }
    v.c2 = v.unproven_bcc.empty();
    for (const Email& e : shared) v.c3 = v.c3 || implies_message(e.message, m);
    v.holds = v.c1 && v.c2 && v.c3;
    return v;
}

/// s ⊨ C_A ¬ i◁m. Exact unless the answer hinges on C_A ¬m, which is delegated
/// to the bounded evaluator.
inline EvalResult decide_ck_not_involved(const State& s, AgentSet group, Agent i, const Message& m,
                                         const UniverseParams& params = {}) {
    detail::require_legal(s);
    detail::require_group(group);
    EvalResult r;
    r.mode = EvalMode::Exact;
    if (const Email* e = s.find(m); e && e->involved().contains(i)) {
        r.value = false;
        r.countermodel = std::vector<Hop>{};
        return r;
    }
    if (group.subset_of(singleton(m.sender()) | singleton(i))) {
        r.value = true;
        return r;
    }
    r = eval(s, Formula::common(group, Formula::negate(Formula::sent(m))), params);
    if (!r.value && r.countermodel) {
        // A state where m was sent; one more hop through a group member outside
        // S(m) ∪ {i} adds i as a BCC recipient without anyone else noticing.
        const State& last = r.countermodel->empty() ? s : r.countermodel->back().state;
        const Email* e = last.find(m);
        if (e && !e->involved().contains(i)) {
            Agent j = *(group - (singleton(m.sender()) | singleton(i))).begin();
            r.countermodel->push_back(Hop{j, last.replaced(*e, Email{m, e->bcc | singleton(i)}, AgentSet{})});
        }
    }
    return r;
}

struct KnowledgeReport {
    struct Gain {
        Agent agent;
        Formula formula;
    };
    struct Entry {
        Email email;
        Formula epistemic_info;
        std::vector<Gain> gains;
    };
    std::vector<Entry> entries;
    /// ⋀_{e∈E} EI(e); absent for an empty state.
    std::optional<Formula> conjunction;
};

inline KnowledgeReport who_knows_what(const State& s) {
    detail::require_legal(s);
    KnowledgeReport report;
    std::vector<Formula> all;
    for (const Email& e : s.emails()) {
        KnowledgeReport::Entry entry{e, epistemic_info(e, s.agents()), {}};
        for (Agent i : e.involved().sorted()) entry.gains.push_back({i, info_gain(e, i, s.agents())});
        all.push_back(entry.epistemic_info);
        report.entries.push_back(std::move(entry));
    }
    if (!all.empty()) report.conjunction = Formula::conj_all(all);
    return report;
}

/// Replays the removal argument behind E_A: repeatedly drops a <-maximal email
/// not shared by A, going through BCC shrinks where needed. Every hop is ∼_a for
/// the agent it names; the last state has emails (E_A)_≤.
inline std::vector<Hop> restrict_to_shared(const State& s, AgentSet group) {
    detail::require_legal(s);
    detail::require_group(group);
    std::vector<Hop> path;
    State cur = s;
    for (;;) {
        std::optional<Email> victim;
        for (const Email& e : cur.emails())
            if (!is_shared_by(e, group) && is_maximal(cur, e)) {
                victim = e;
                break;
            }
        if (!victim) return path;
        const Message& m = victim->message;
        Agent j = *(group - m.participants()).begin();
        if (!victim->bcc.contains(j)) {
            path.push_back({j, remove_email(cur, *victim)});
        } else {
            Agent k = *(group - (singleton(m.sender()) | singleton(j))).begin();
            path.push_back({j, shrink_bcc(cur, *victim, singleton(j))});
            path.push_back({k, shrink_bcc(cur, *victim, AgentSet{})});
            path.push_back({j, remove_email(cur, *victim)});
        }
        cur = path.back().state;
    }
}

}  // namespace epimail
