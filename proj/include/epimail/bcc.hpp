#pragma once

// Replacing BCC delivery by plain forwards, and the formula that tells the two apart.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "formula.hpp"
#include "legality.hpp"
#include "model.hpp"
#include "semantics.hpp"

namespace epimail {

struct SimulationPlan {
    Email original;
    /// m_∅ first, then one plain forward per former BCC recipient.
    std::vector<Email> replacement;
};

/// m_B with B = {j₁,…,j_k} becomes m_∅, f(S(m), m, {j₁})_∅, …, f(S(m), m, {j_k})_∅.
inline SimulationPlan simulate_bcc_email(const Email& e) {
    SimulationPlan plan{e, {Email{e.message, AgentSet{}}}};
    for (Agent j : e.bcc.sorted())
        plan.replacement.push_back(Email{Message::forward(e.message.sender(), e.message, singleton(j)), AgentSet{}});
    return plan;
}

struct SimulationResult {
    State state;
    std::vector<SimulationPlan> plans;
    LegalityReport legality;
};

/// Applies every email's plan. Existing forwards are kept verbatim, so the result
/// can be illegal; `legality` then carries the stuck diagnostics.
inline SimulationResult simulate_bcc_state(const State& s) {
    SimulationResult out;
    std::vector<Email> emails;
    for (const Email& e : s.emails()) {
        out.plans.push_back(simulate_bcc_email(e));
        for (const Email& r : out.plans.back().replacement) emails.push_back(r);
    }
    std::map<Agent, NoteSet> notes;
    for (const auto& [a, held] : s.note_assignment()) notes.emplace(a, held);
    out.state = State(s.agents(), std::move(emails), notes);
    out.legality = check_legality(out.state);
    return out;
}

/// f(i,l.m,G) as s(i,l,G) followed by f(i,m,G). Construction only.
inline std::vector<Message> simulate_note_append(const Message& f) {
    if (!f.is_forward()) throw std::invalid_argument("not a forward: " + to_string(f));
    return {Message::send(f.sender(), f.note(), f.recipients()),
            Message::forward(f.sender(), f.original(), f.recipients())};
}

enum class HypothesisKind { EmailAbsent, NotBcc, BadObserver, ForwardToJ, ForwardByJ, IllegalState };

inline const char* to_string(HypothesisKind k) {
    switch (k) {
        case HypothesisKind::EmailAbsent: return "email-absent";
        case HypothesisKind::NotBcc: return "j-not-bcc";
        case HypothesisKind::BadObserver: return "bad-k";
        case HypothesisKind::ForwardToJ: return "forward-to-j";
        case HypothesisKind::ForwardByJ: return "forward-by-j";
        case HypothesisKind::IllegalState: return "illegal-state";
    }
    return "?";
}

class HypothesisViolation : public std::runtime_error {
public:
    HypothesisViolation(HypothesisKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    HypothesisKind kind() const { return kind_; }

private:
    HypothesisKind kind_;
};

/// K_j m ∧ K_j ¬K_k K_j m
inline Formula distinguishing_formula(const Message& m, Agent j, Agent k) {
    Formula kjm = Formula::knows(j, Formula::sent(m));
    return Formula::conj(kjm, Formula::knows(j, Formula::negate(Formula::knows(k, kjm))));
}

struct NonSimulabilityReport {
    Formula formula;
    EvalResult on_original;
    SimulationResult simulation;
    /// Absent when the simulation is illegal.
    std::optional<EvalResult> on_simulation;
    /// t' = t ∪ {f(S(m'), m', k)} with m' the plan's forward to j.
    std::optional<State> countermodel;
    /// t ∼_j t', t' legal and t' ⊨ K_k K_j m.
    bool countermodel_verified = false;
};

inline void check_nonsimulability_hypotheses(const State& s, const Email& e, Agent j, Agent k) {
    const Message& m = e.message;
    if (!is_legal(s)) throw HypothesisViolation(HypothesisKind::IllegalState, "the state is not legal");
    if (!s.contains(e)) throw HypothesisViolation(HypothesisKind::EmailAbsent, to_string(e) + " is not in the state");
    if (!e.bcc.contains(j))
        throw HypothesisViolation(HypothesisKind::NotBcc, j.name() + " is not a BCC recipient of " + to_string(e));
    if (!s.agents().contains(k) || k == j || k == m.sender())
        throw HypothesisViolation(HypothesisKind::BadObserver,
                                  k.name() + " must be a declared agent other than " + j.name() + " and the sender");
    for (const Email& other : s.emails()) {
        if (!is_part_of(m, other.message)) continue;
        if (other.message.sender() == j)
            throw HypothesisViolation(HypothesisKind::ForwardByJ,
                                      to_string(other.message) + " forwards " + to_string(m) + " by " + j.name());
        if (other.receivers().contains(j))
            throw HypothesisViolation(HypothesisKind::ForwardToJ,
                                      to_string(other.message) + " forwards " + to_string(m) + " to " + j.name());
    }
}

inline NonSimulabilityReport check_nonsimulability(const State& s, const Email& e, Agent j, Agent k,
                                                   const UniverseParams& params = {}) {
    check_nonsimulability_hypotheses(s, e, j, k);
    const Message& m = e.message;
    NonSimulabilityReport report{distinguishing_formula(m, j, k), eval(s, distinguishing_formula(m, j, k), params),
                                 simulate_bcc_state(s), std::nullopt, std::nullopt, false};
    const State& t = report.simulation.state;
    if (!report.simulation.legality) return report;
    Evaluator ev(t, params);
    report.on_simulation = ev.eval(report.formula);

    Message to_j = Message::forward(m.sender(), m, singleton(j));
    Message to_k = Message::forward(to_j.sender(), to_j, singleton(k));
    State tp = t.with_email(Email{to_k, AgentSet{}});
    report.countermodel = tp;
    if (!is_legal(tp) || !state_indist(t, tp, j)) return report;
    Formula kk = Formula::knows(k, Formula::knows(j, Formula::sent(m)));
    if (auto idx = ev.universe().find(tp)) report.countermodel_verified = ev.holds_at(kk, *idx);
    else report.countermodel_verified = eval(tp, kk, params).value;
    return report;
}

}  // namespace epimail
