#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "epimail/legality.hpp"
#include "epimail/model.hpp"
#include "epimail/semantics.hpp"

namespace testkit {

using namespace epimail;

inline Agent ag(const std::string& n) { return Agent(n); }
inline Note nt(const std::string& n) { return Note(n); }

inline AgentSet set_of(std::initializer_list<const char*> names) {
    AgentSet out;
    for (const char* n : names) out.insert(Agent(n));
    return out;
}

inline std::vector<Agent> numbered_agents(std::size_t n) {
    std::vector<Agent> out;
    for (std::size_t k = 1; k <= n; ++k) out.push_back(Agent("g" + std::to_string(k)));
    return out;
}

inline AgentSet to_set(const std::vector<Agent>& v) {
    AgentSet out;
    for (Agent a : v) out.insert(a);
    return out;
}

/// Alma's four emails: c sends l to a and d; a forwards to b; b forwards to c, d
/// with a BCC to a; a forwards that to c, d with a BCC to b.
struct AlmaThread {
    Agent a{"a"}, b{"b"}, c{"c"}, d{"d"};
    Note l{"l"};
    Message m = Message::send(c, l, set_of({"a", "d"}));
    Message m1 = Message::forward(a, m, set_of({"b"}));
    Message m2 = Message::forward(b, m1, set_of({"c", "d"}));
    Message m3 = Message::forward(a, m2, set_of({"c", "d"}));
    Email e0{m, {}};
    Email e1{m1, {}};
    Email e2{m2, set_of({"a"})};
    Email e3{m3, set_of({"b"})};
    AgentSet all = set_of({"a", "b", "c", "d"});
    State state{all, {e0, e1, e2, e3}, {{c, NoteSet{l}}}};
};

/// j forwards i's message to o; in s2 k also got it by BCC and forwards it to o too.
struct Observed {
    Agent i{"i"}, j{"j"}, k{"k"}, o{"o"};
    Note l{"l"};
    Message m = Message::send(i, l, set_of({"j"}));
    Message fj = Message::forward(j, m, set_of({"o"}));
    Message fk = Message::forward(k, m, set_of({"o"}));
    AgentSet all = set_of({"i", "j", "k", "o"});
    State s1{all, {Email{m, {}}, Email{fj, {}}}, {{i, NoteSet{l}}}};
    State s2{all, {Email{m, set_of({"k"})}, Email{fj, {}}, Email{fk, {}}}, {{i, NoteSet{l}}}};
};

class Rng {
public:
    explicit Rng(std::uint32_t seed) : gen_(seed) {}

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(gen_); }

    template <class T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

    AgentSet subset(const std::vector<Agent>& pool, double p) {
        AgentSet out;
        for (Agent a : pool)
            if (chance(p)) out.insert(a);
        return out;
    }

    AgentSet nonempty_subset(const std::vector<Agent>& pool, double p) {
        AgentSet out = subset(pool, p);
        if (out.empty()) out.insert(pick(pool));
        return out;
    }

private:
    std::mt19937 gen_;
};

struct LegalStateShape {
    std::size_t max_agents = 4;
    std::size_t max_emails = 4;
    std::size_t max_depth = 2;  // forward nesting: a send has depth 0
    std::size_t notes = 1;
    double bcc_chance = 0.3;
};

/// A legal state grown by running an exchange: each new email is enabled when
/// it is added, so the insertion order witnesses legality.
inline State random_legal_state(Rng& rng, const LegalStateShape& shape) {
    const auto agents = numbered_agents(2 + rng.below(shape.max_agents - 1));
    std::vector<Note> notes;
    for (std::size_t k = 0; k < shape.notes; ++k) notes.push_back(Note("n" + std::to_string(k + 1)));
    std::map<Agent, NoteSet> held;
    for (Note n : notes) held[rng.pick(agents)].insert(n);

    std::map<Agent, std::vector<Message>> box;
    std::vector<Email> emails;
    const std::size_t target = 1 + rng.below(shape.max_emails);
    for (std::size_t attempt = 0; emails.size() < target && attempt < 200; ++attempt) {
        Agent i = rng.pick(agents);
        NoteSet known = held[i] | NoteSet{Note::truth()};
        for (const Message& m : box[i]) known = known | m.factual_info();
        std::vector<Note> usable(known.begin(), known.end());
        AgentSet g = rng.nonempty_subset(agents, 0.4);
        std::optional<Message> m;
        bool forwardable = false;
        for (const Message& x : box[i]) forwardable = forwardable || x.depth() < shape.max_depth;
        if (forwardable && rng.chance(0.5)) {
            std::vector<Message> options;
            for (const Message& x : box[i])
                if (x.depth() < shape.max_depth) options.push_back(x);
            Note l = rng.chance(0.7) ? Note::truth() : rng.pick(usable);
            m = Message::forward(i, l, rng.pick(options), g);
        } else {
            std::vector<Note> real;
            for (Note n : usable)
                if (!n.is_truth()) real.push_back(n);
            if (real.empty()) continue;
            m = Message::send(i, rng.pick(real), g);
        }
        if (std::any_of(emails.begin(), emails.end(), [&](const Email& e) { return e.message == *m; })) continue;
        std::vector<Agent> outsiders;
        for (Agent a : agents)
            if (!m->participants().contains(a)) outsiders.push_back(a);
        AgentSet bcc = rng.subset(outsiders, shape.bcc_chance);
        Email e{*m, bcc};
        emails.push_back(e);
        for (Agent a : e.involved()) box[a].push_back(*m);
    }
    return State(to_set(agents), emails, held);
}

struct AnyStateShape {
    std::size_t max_agents = 4;
    std::size_t max_emails = 6;
    std::size_t notes = 2;
};

/// Structurally valid but not necessarily legal: notes may be unheld and forwards
/// may lack their original or come from uninvolved agents.
inline State random_state(Rng& rng, const AnyStateShape& shape) {
    const auto agents = numbered_agents(2 + rng.below(shape.max_agents - 1));
    std::vector<Note> notes{Note::truth()};
    for (std::size_t k = 0; k < shape.notes; ++k) notes.push_back(Note("n" + std::to_string(k + 1)));
    std::map<Agent, NoteSet> held;
    for (std::size_t k = 1; k < notes.size(); ++k)
        if (rng.chance(0.7)) held[rng.pick(agents)].insert(notes[k]);

    std::vector<Message> pool;
    for (std::size_t k = 0; k < 8; ++k) {
        Agent i = rng.pick(agents);
        AgentSet g = rng.nonempty_subset(agents, 0.4);
        if (!pool.empty() && rng.chance(0.55)) {
            const Message& orig = rng.pick(pool);
            Agent f = rng.chance(0.75) ? rng.pick(std::vector<Agent>(orig.participants().begin(),
                                                                      orig.participants().end()))
                                       : i;
            pool.push_back(Message::forward(f, rng.chance(0.7) ? Note::truth() : rng.pick(notes), orig, g));
        } else {
            pool.push_back(Message::send(i, notes[1 + rng.below(notes.size() - 1)], g));
        }
    }
    std::vector<Email> emails;
    const std::size_t target = 1 + rng.below(shape.max_emails);
    for (std::size_t attempt = 0; emails.size() < target && attempt < 50; ++attempt) {
        // prefer later messages so that forwards are common, and usually include originals
        const Message& m = pool[pool.size() - 1 - rng.below(std::min<std::size_t>(pool.size(), 5))];
        std::vector<Message> chain{m};
        if (rng.chance(0.8))
            for (Message cur = m; cur.is_forward();) {
                cur = cur.original();
                chain.push_back(cur);
            }
        for (const Message& x : chain) {
            if (emails.size() >= target) break;
            if (std::any_of(emails.begin(), emails.end(), [&](const Email& e) { return e.message == x; })) continue;
            std::vector<Agent> outsiders;
            for (Agent a : agents)
                if (!x.participants().contains(a)) outsiders.push_back(a);
            emails.push_back(Email{x, rng.subset(outsiders, 0.3)});
        }
    }
    return State(to_set(agents), emails, held);
}

/// Legality by brute force: some linear order of the emails satisfies L.1–L.3.
/// Every strict partial order extends to a linear one and the conditions only
/// ask for predecessors, so this matches the existence of an spo.
inline bool legal_by_permutation(const State& s) {
    const auto emails = s.emails();
    std::vector<std::size_t> perm(emails.size());
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (std::size_t p = 0; p < perm.size() && ok; ++p) {
            const Email& e = emails[perm[p]];
            const Message& m = e.message;
            Agent i = m.sender();
            if (m.is_forward()) {
                bool found = false;
                for (std::size_t q = 0; q < p; ++q) {
                    const Email& c = emails[perm[q]];
                    found = found || (c.message == m.original() && c.involved().contains(i));
                }
                ok = found;
            }
            if (!ok) break;
            if (m.note().is_truth() || s.notes_of(i).contains(m.note())) continue;
            bool explained = false;
            for (std::size_t q = 0; q < p; ++q) {
                const Email& c = emails[perm[q]];
                explained = explained || (c.receivers().contains(i) && c.message.factual_info().contains(m.note()));
            }
            ok = explained;
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

/// Checks a countermodel path: each hop is legal and indistinguishable for its agent.
inline bool path_is_sound(const State& root, const std::vector<Hop>& path, AgentSet group) {
    const State* prev = &root;
    for (const Hop& h : path) {
        if (!group.contains(h.via) || !is_legal(h.state) || !state_indist(*prev, h.state, h.via)) return false;
        prev = &h.state;
    }
    return true;
}

}  // namespace testkit
