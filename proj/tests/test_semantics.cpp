#include <gtest/gtest.h>

#include "support.hpp"

using namespace testkit;

namespace {

Formula sent(const Message& m) { return Formula::sent(m); }
Formula invl(const char* a, const Message& m) { return Formula::involved(Agent(a), m); }

TEST(Formula, BuildersAndAccessors) {
    AlmaThread x;
    Formula k = Formula::knows(x.a, sent(x.m));
    EXPECT_EQ(k.kind(), FormulaKind::Common);
    EXPECT_EQ(k.group(), set_of({"a"}));
    EXPECT_EQ(k, Formula::common(set_of({"a"}), sent(x.m)));
    EXPECT_FALSE(k.epistemic_free());
    EXPECT_TRUE(Formula::disj(sent(x.m), sent(x.m1)).epistemic_free());
    EXPECT_THROW(Formula::common(AgentSet{}, sent(x.m)), std::invalid_argument);
    EXPECT_EQ(Formula::implies(sent(x.m), sent(x.m1)),
              Formula::negate(Formula::conj(sent(x.m), Formula::negate(sent(x.m1)))));
    EXPECT_NE(sent(x.m), sent(x.m1));
}

TEST(EmailAtom, Expansion) {
    Agent i("i"), j("j"), k("k");
    Message m = Message::send(i, nt("l"), set_of({"j"}));
    AgentSet ijk = set_of({"i", "j", "k"});
    Formula f = expand_email_atom(m, set_of({"k"}), ijk);
    EXPECT_EQ(f, Formula::conj_all({sent(m), invl("i", m), invl("j", m), invl("k", m)}));
    Formula exact = expand_email_atom(m, {}, set_of({"i", "j"}));
    EXPECT_EQ(exact, Formula::conj_all({sent(m), invl("i", m), invl("j", m)}));
    Formula with_outsider = expand_email_atom(m, {}, ijk);
    EXPECT_EQ(with_outsider, Formula::conj_all({sent(m), invl("i", m), invl("j", m), Formula::negate(invl("k", m))}));
    EXPECT_THROW(expand_email_atom(m, set_of({"j"}), ijk), std::invalid_argument);
}

TEST(EmailAtom, MatchRecoversEmail) {
    AlmaThread x;
    auto e = match_email_atom(expand_email_atom(x.e2, x.all), x.all);
    ASSERT_TRUE(e.has_value());
    EXPECT_EQ(*e, x.e2);
    EXPECT_FALSE(match_email_atom(Formula::conj(sent(x.m), sent(x.m1)), x.all).has_value());
    EXPECT_FALSE(match_email_atom(sent(x.m), x.all).has_value());
}

TEST(EmailIndist, PairFromText) {
    Agent i("i"), j("j"), k("k");
    Message m = Message::send(i, nt("l"), set_of({"j"}));
    Email e{m, {}}, e2{m, set_of({"k"})};
    EXPECT_TRUE(email_indist(e, e2, j));
    EXPECT_FALSE(email_indist(e, e2, i));
    EXPECT_FALSE(email_indist(e, e2, k));
    for (Agent a : {i, j}) EXPECT_TRUE(email_indist(e, e, a));
    EXPECT_TRUE(email_indist(e2, e2, k));
}

TEST(StateIndist, ObservedTable) {
    Observed x;
    EXPECT_FALSE(state_indist(x.s1, x.s2, x.i));
    EXPECT_TRUE(state_indist(x.s1, x.s2, x.j));
    EXPECT_FALSE(state_indist(x.s1, x.s2, x.k));
    EXPECT_FALSE(state_indist(x.s1, x.s2, x.o));
    for (Agent a : {x.i, x.j, x.k, x.o}) EXPECT_TRUE(state_indist(x.s2, x.s2, a));
}

TEST(StateIndist, NotesMatter) {
    Observed x;
    State more = x.s1.with_notes(x.j, NoteSet{x.l});
    EXPECT_FALSE(state_indist(x.s1, more, x.j));
    EXPECT_TRUE(state_indist(x.s1, more, x.i));
}

TEST(AgentView, EqualViewsIffIndistinguishable) {
    Rng rng(707);
    std::vector<State> states;
    for (int n = 0; n < 60; ++n) states.push_back(random_legal_state(rng, {3, 3, 2, 1, 0.5}));
    for (const State& s : states)
        for (const State& t : states)
            for (Agent a : s.agents() & t.agents())
                EXPECT_EQ(agent_view(s, a) == agent_view(t, a), state_indist(s, t, a));
}

TEST(Universe, AllOffIsRoot) {
    AlmaThread x;
    UniverseParams off{false, false, false, 0, 100};
    Universe u(x.state, off);
    ASSERT_EQ(u.size(), 1U);
    EXPECT_EQ(u.states()[0], x.state);
}

TEST(Universe, BccVariantAndEmptyState) {
    Agent i("i"), j("j"), k("k");
    Message m = Message::send(i, nt("l"), set_of({"j"}));
    State s(set_of({"i", "j", "k"}), {Email{m, {}}}, {{i, NoteSet{nt("l")}}});
    UniverseParams p;
    p.note_augment = false;
    p.fwd_depth = 0;
    Universe u(s, p);
    EXPECT_TRUE(u.find(State(s.agents(), {Email{m, set_of({"k"})}}, {{i, NoteSet{nt("l")}}})).has_value());
    EXPECT_TRUE(u.find(remove_email(s, Email{m, {}})).has_value());
    for (const State& t : u.states()) EXPECT_TRUE(is_legal(t));
}

TEST(Universe, ObservedReachesS1Emails) {
    Observed x;
    UniverseParams p;
    p.note_augment = false;
    p.fwd_depth = 0;
    Universe u(x.s2, p);
    // removing k's forward hands k the note, so only the email set of s1 recurs
    bool found = false;
    for (const State& t : u.states()) found = found || std::ranges::equal(t.emails(), x.s1.emails());
    EXPECT_TRUE(found);
}

TEST(Universe, CapReported) {
    AlmaThread x;
    UniverseParams p;
    p.max_states = 5;
    Universe u(x.state, p);
    EXPECT_EQ(u.size(), 5U);
    EXPECT_TRUE(u.truncated());
}

TEST(Universe, IllegalRootRejected) {
    AlmaThread x;
    EXPECT_THROW(Universe(State(x.all, {x.e1}), UniverseParams{}), std::invalid_argument);
    EXPECT_THROW(Evaluator(State(x.all, {x.e1})), std::invalid_argument);
}

TEST(Eval, ObservedClaims) {
    Observed x;
    Evaluator ev(x.s2);
    Formula km = invl("k", x.m);
    EXPECT_TRUE(ev.eval(Formula::negate(Formula::knows(x.j, km))).value);
    EXPECT_TRUE(ev.eval(Formula::knows(x.o, km)).value);
    EXPECT_TRUE(ev.eval(Formula::common(set_of({"k", "o"}), km)).value);
    auto r = ev.eval(Formula::common(set_of({"j", "o"}), km));
    EXPECT_FALSE(r.value);
    EXPECT_EQ(r.mode, EvalMode::Bounded);
    ASSERT_TRUE(r.countermodel.has_value());
    EXPECT_TRUE(path_is_sound(x.s2, *r.countermodel, set_of({"j", "o"})));
    EXPECT_FALSE(holds_directly(r.countermodel->back().state, km));
}

TEST(Eval, EpistemicFreeIsExact) {
    AlmaThread x;
    auto r = eval(x.state, Formula::conj(sent(x.m), Formula::negate(invl("b", x.m))));
    EXPECT_TRUE(r.value);
    EXPECT_EQ(r.mode, EvalMode::Exact);
    EXPECT_EQ(r.universe_size, 0U);
    EXPECT_THROW(holds_directly(x.state, Formula::knows(x.a, sent(x.m))), std::invalid_argument);
}

TEST(Eval, HoldsDirectlyAtoms) {
    AlmaThread x;
    EXPECT_TRUE(holds_directly(x.state, invl("a", x.m2)));
    EXPECT_TRUE(holds_directly(x.state, invl("a", x.m1)));
    EXPECT_FALSE(holds_directly(x.state, invl("b", x.m)));
    Message absent = Message::send(x.d, x.l, set_of({"a"}));
    EXPECT_FALSE(holds_directly(x.state, sent(absent)));
    EXPECT_FALSE(holds_directly(x.state, invl("d", absent)));
}

// Property corpus for the semantic invariants.
std::vector<State> corpus(std::uint32_t seed, int n) {
    Rng rng(seed);
    std::vector<State> out;
    for (int k = 0; k < n; ++k) out.push_back(random_legal_state(rng, {}));
    return out;
}

TEST(IndistProperties, EmailRelationIsEquivalence) {
    Rng rng(808);
    const auto agents = numbered_agents(4);
    std::vector<Message> msgs;
    for (int k = 0; k < 20; ++k) {
        Message m = Message::send(rng.pick(agents), nt("x"), rng.nonempty_subset(agents, 0.4));
        if (rng.chance(0.5)) m = Message::forward(rng.pick(agents), m, rng.nonempty_subset(agents, 0.4));
        msgs.push_back(m);
    }
    std::vector<Email> emails;
    while (emails.size() < 600) {
        const Message& m = msgs[rng.below(5)];  // few messages so that pairs share them
        std::vector<Agent> out;
        for (Agent a : agents)
            if (!m.participants().contains(a)) out.push_back(a);
        emails.push_back(Email{m, rng.subset(out, 0.5)});
    }
    for (Agent a : agents) {
        for (std::size_t p = 0; p < 120; ++p) {
            const Email& x = emails[p];
            if (x.involved().contains(a)) EXPECT_TRUE(email_indist(x, x, a));
            for (std::size_t q = 0; q < 120; ++q) {
                const Email& y = emails[q];
                if (email_indist(x, y, a)) EXPECT_TRUE(email_indist(y, x, a));
                for (std::size_t r = 0; r < 120; r += 7)
                    if (email_indist(x, y, a) && email_indist(y, emails[r], a))
                        EXPECT_TRUE(email_indist(x, emails[r], a));
            }
        }
    }
}

TEST(IndistProperties, StateRelationIsEquivalence) {
    auto states = corpus(909, 40);
    // add close relatives so that the relation is not mostly empty
    const std::size_t base = states.size();
    for (std::size_t k = 0; k < base; ++k) {
        const State& s = states[k];
        for (const Email& e : s.emails())
            if (is_maximal(s, e)) states.push_back(remove_email(s, e));
    }
    ASSERT_GE(states.size(), 100U);
    std::size_t related = 0;
    for (const State& s : states)
        for (Agent a : s.agents()) {
            EXPECT_TRUE(state_indist(s, s, a));
            for (const State& t : states) {
                bool st = state_indist(s, t, a);
                EXPECT_EQ(st, state_indist(t, s, a));
                if (!st || &s == &t) continue;
                ++related;
                for (const State& u : states)
                    if (state_indist(t, u, a)) EXPECT_TRUE(state_indist(s, u, a));
            }
        }
    EXPECT_GT(related, 20U);
}

TEST(EvalProperties, InvolvementAgreesAmongInvolved) {
    for (const State& s : corpus(111, 100))
        for (const Email& e : s.emails())
            for (Agent i : e.involved())
                for (Agent j : e.involved())
                    EXPECT_EQ(eval(s, Formula::involved(i, e.message)).value,
                              eval(s, Formula::involved(j, e.message)).value);
}

TEST(EvalProperties, EmailAtomHoldsForEveryEmail) {
    for (const State& s : corpus(222, 100))
        for (const Email& e : s.emails()) EXPECT_TRUE(eval(s, expand_email_atom(e, s.agents())).value);
}

TEST(EvalProperties, CommonKnowledgeImpliesTruth) {
    auto states = corpus(333, 40);
    for (const State& s : states) {
        Evaluator ev(s);
        for (const Email& e : s.emails()) {
            for (Formula body : {Formula::sent(e.message), Formula::involved(e.message.sender(), e.message)}) {
                for (Agent a : s.agents()) {
                    Formula c = Formula::common(s.agents() - singleton(a) | e.message.participants(), body);
                    for (std::size_t k = 0; k < ev.universe().size(); k += 17)
                        if (ev.holds_at(c, k)) EXPECT_TRUE(ev.holds_at(body, k));
                }
            }
        }
    }
}

TEST(EvalProperties, RefutationsAreSoundAndMonotone) {
    auto states = corpus(444, 60);
    UniverseParams narrow;
    narrow.note_augment = false;
    narrow.fwd_depth = 0;
    ASSERT_TRUE(narrow.within(UniverseParams{}));
    int refuted = 0;
    for (const State& s : states) {
        Evaluator small(s, narrow), big(s);
        for (const Email& e : s.emails()) {
            const std::uint64_t all = s.agents().bits();
            for (std::uint64_t bits = all; bits != 0; bits = (bits - 1) & all) {
                AgentSet g = AgentSet::from_bits(bits);
                // positive formulas: a nested C over atoms
                Formula f = Formula::common(g, Formula::conj(Formula::sent(e.message),
                                                             Formula::knows(e.message.sender(), Formula::sent(e.message))));
                auto r = small.eval(f);
                if (r.value) continue;
                ++refuted;
                ASSERT_TRUE(r.countermodel.has_value());
                EXPECT_TRUE(path_is_sound(s, *r.countermodel, g));
                if (!small.universe().truncated() && !big.universe().truncated()) EXPECT_FALSE(big.eval(f).value);
            }
        }
    }
    EXPECT_GT(refuted, 20);
}

}  // namespace
