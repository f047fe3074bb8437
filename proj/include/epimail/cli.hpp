#pragma once

// Command dispatch for the epimail tool. Exit codes: 0 true/legal, 1 false/illegal,
// 2 usage or input error, 3 query outside the supported fragment.

#include <chrono>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcc.hpp"
#include "epistemics.hpp"
#include "legality.hpp"
#include "scenario.hpp"
#include "semantics.hpp"
#include "verdict.hpp"

namespace epimail::cli {

enum ExitCode : int { kTrue = 0, kFalse = 1, kUsage = 2, kUnsupported = 3 };

/// Input problem to report with exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The query needs a legal state and the scenario's is not; exit code 1.
class IllegalState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline Scenario load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_scenario(text);
    } catch (const ParseError& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline std::string label(const Scenario& sc, const Email& e) { return sc.name_of(e).value_or(to_string(e)); }

inline json state_json(const State& s) {
    json emails = json::array();
    for (const Email& e : s.emails()) emails.push_back(to_string(e));
    json notes = json::object();
    for (const auto& [a, held] : s.note_assignment()) {
        json ns = json::array();
        for (Note n : held.sorted())
            if (!n.is_truth()) ns.push_back(n.name());
        notes[a.name()] = ns;
    }
    return json{{"emails", emails}, {"notes", notes}};
}

inline json path_json(const std::vector<Hop>& path) {
    json out = json::array();
    for (const Hop& h : path) out.push_back(json{{"via", h.via.name()}, {"state", state_json(h.state)}});
    return out;
}

inline json shared_json(const Scenario& sc, AgentSet group) {
    json out = json::array();
    for (const Email& e : shared_emails(sc.state.emails(), group)) out.push_back(label(sc, e));
    return out;
}

inline AgentSet parse_group(const Scenario& sc, const std::string& list) {
    AgentSet out;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        bool found = false;
        for (Agent a : sc.agents) found = found || a.name() == name;
        if (!found) throw InputError("undeclared agent '" + name + "'");
        out.insert(Agent(name));
    }
    if (out.empty()) throw InputError("empty group");
    return out;
}

inline Agent parse_agent(const Scenario& sc, const std::string& name) {
    for (Agent a : sc.agents)
        if (a.name() == name) return a;
    throw InputError("undeclared agent '" + name + "'");
}

inline Email lookup_email(const Scenario& sc, const std::string& name) {
    if (auto e = sc.email(name)) return *e;
    throw InputError("undeclared email '" + name + "'");
}

inline Message lookup_message(const Scenario& sc, const std::string& name) {
    if (auto m = sc.message(name)) return *m;
    throw InputError("undeclared message '" + name + "'");
}

inline void require_legal(const State& s) {
    if (!is_legal(s)) throw IllegalState("the scenario's state is not legal; run 'check' for diagnostics");
}

inline Verdict make_verdict(std::string command, std::string query, std::string mode) {
    Verdict v;
    v.command = std::move(command);
    v.query = std::move(query);
    v.mode = std::move(mode);
    return v;
}

inline std::string yes_no(bool b) { return b ? "true" : "false"; }

struct Output {
    bool as_json = false;
    bool timing = false;
};

inline int finish(const Verdict& v, const std::string& text, const Output& o, std::ostream& out) {
    if (o.as_json) out << json(v).dump(2) << "\n";
    else {
        out << text;
        if (v.timing_ms) out << "time: " << *v.timing_ms << " ms\n";
    }
    if (!v.value) return kTrue;
    return *v.value ? kTrue : kFalse;
}

inline Verdict cmd_check(const Scenario& sc, std::string& text) {
    Verdict v = make_verdict("check", "legal", "exact");
    auto report = check_legality(sc.state);
    v.value = report.legal;
    std::ostringstream t;
    t << (report.legal ? "legal" : "illegal") << "\n";
    json order = json::array();
    for (const Email& e : report.order) order.push_back(label(sc, e));
    if (report.legal) {
        json pairs = json::array();
        t << "processing order:";
        for (const Email& e : report.order) t << " " << label(sc, e);
        t << "\nwitness spo:";
        const auto emails = sc.state.emails();
        for (auto [a, b] : report.witness.order) {
            pairs.push_back(json::array({label(sc, emails[a]), label(sc, emails[b])}));
            t << " " << label(sc, emails[a]) << "<" << label(sc, emails[b]);
        }
        t << "\n";
        v.witness = json{{"kind", "spo"}, {"order", order}, {"pairs", pairs}};
    } else {
        json blocked = json::array();
        for (const Blocked& b : report.stuck) {
            blocked.push_back(json{{"email", label(sc, b.email)}, {"reason", to_string(b.reason)}});
            t << "blocked: " << label(sc, b.email) << " (" << to_string(b.reason) << ")\n";
        }
        v.witness = json{{"kind", "stuck"}, {"processed", order}, {"blocked", blocked}};
    }
    text = t.str();
    return v;
}

inline void describe_ck_email(const Scenario& sc, const EmailCkVerdict& r, Verdict& v, std::ostringstream& t) {
    json failed = json::array();
    for (const auto& c : r.failed()) failed.push_back(c);
    v.details["conditions"] = json{{"C1", r.c1}, {"C2", r.c2}, {"C3", r.c3}};
    v.details["failed"] = failed;
    json unproven = json::array();
    for (Agent a : r.unproven_bcc.sorted()) unproven.push_back(a.name());
    v.details["unproven_bcc"] = unproven;
    (void)sc;
    if (!r.failed().empty()) {
        t << "failed conditions:";
        for (const auto& c : r.failed()) t << " " << c;
        t << "\n";
    }
}

inline Verdict cmd_eval(const Scenario& sc, const std::string& text_formula, const UniverseParams& params,
                        std::string& text) {
    Formula f = [&] {
        try {
            return parse_formula(text_formula, sc);
        } catch (const ParseError& e) {
            throw InputError(std::string("formula: ") + e.what());
        }
    }();
    require_legal(sc.state);
    Verdict v = make_verdict("eval", print_formula(f, sc), "exact");
    std::ostringstream t;
    auto bounded = [&](const EvalResult& r) {
        v.value = r.value;
        v.mode = to_string(r.mode);
        if (r.mode == EvalMode::Bounded)
            v.details["universe"] = json{{"states", r.universe_size}, {"truncated", r.truncated}};
        if (r.countermodel) {
            v.witness = json{{"kind", "countermodel"}, {"path", path_json(*r.countermodel)}};
            t << "countermodel:\n";
            for (const Hop& h : *r.countermodel) {
                t << "  ~" << h.via.name() << " {";
                bool first = true;
                for (const Email& e : h.state.emails()) {
                    t << (first ? "" : ", ") << to_string(e);
                    first = false;
                }
                t << "}\n";
            }
        }
    };
    if (f.kind() == FormulaKind::Common) {
        const AgentSet group = f.group();
        const Formula body = f.sub();
        auto email = body.kind() == FormulaKind::And ? match_email_atom(body, sc.agent_set()) : std::nullopt;
        if (body.kind() == FormulaKind::Sent) {
            v.value = decide_ck_message(sc.state, group, body.message());
            v.mode = "exact-via-procedure";
            v.witness = json{{"kind", "shared"}, {"emails", shared_json(sc, group)}};
        } else if (body.kind() == FormulaKind::Involved) {
            v.value = decide_ck_involved(sc.state, group, body.agent(), body.message());
            v.mode = "exact-via-procedure";
            v.witness = json{{"kind", "shared"}, {"emails", shared_json(sc, group)}};
        } else if (email && group.size() >= 3) {
            auto r = decide_ck_email(sc.state, group, email->message, email->bcc);
            v.value = r.holds;
            v.mode = "exact-via-procedure";
            v.witness = json{{"kind", "shared"}, {"emails", shared_json(sc, group)}};
            describe_ck_email(sc, r, v, t);
        } else if (body.kind() == FormulaKind::Not && body.sub().kind() == FormulaKind::Involved) {
            auto r = decide_ck_not_involved(sc.state, group, body.sub().agent(), body.sub().message(), params);
            bounded(r);
            if (r.mode == EvalMode::Exact) v.mode = "exact-via-procedure";
        } else {
            bounded(eval(sc.state, f, params));
        }
    } else {
        bounded(eval(sc.state, f, params));
    }
    text = yes_no(*v.value) + " (" + v.mode + ")\n" + t.str();
    return v;
}

inline Verdict cmd_ck(const Scenario& sc, const std::string& group_list, const std::string& message,
                      const std::string& email, std::string& text) {
    AgentSet group = parse_group(sc, group_list);
    require_legal(sc.state);
    std::ostringstream t;
    Verdict v = make_verdict("ck", "", "exact-via-procedure");
    v.witness = json{{"kind", "shared"}, {"emails", shared_json(sc, group)}};
    if (!message.empty()) {
        Message m = lookup_message(sc, message);
        v.query = "C{" + join_names(group) + "} sent(" + message + ")";
        v.value = decide_ck_message(sc.state, group, m);
    } else {
        Email e = lookup_email(sc, email);
        v.query = "C{" + join_names(group) + "} " + email;
        auto r = decide_ck_email(sc.state, group, e.message, e.bcc);
        v.value = r.holds;
        describe_ck_email(sc, r, v, t);
    }
    t << "shared emails:";
    for (const auto& e : v.witness["emails"]) t << " " << e.get<std::string>();
    t << "\n";
    text = yes_no(*v.value) + "\n" + t.str();
    return v;
}

inline json formula_json(const Formula& f, const Scenario& sc) {
    return json{{"text", print_formula(f, sc)}, {"term", format_formula(f)}};
}

inline Verdict cmd_ei(const Scenario& sc, const std::string& email, std::string& text) {
    Email e = lookup_email(sc, email);
    Formula f = epistemic_info(e, sc.agent_set());
    Verdict v = make_verdict("ei", "EI(" + email + ")", "exact");
    v.details["formula"] = formula_json(f, sc);
    text = print_formula(f, sc) + "\n";
    return v;
}

inline Verdict cmd_ig(const Scenario& sc, const std::string& email, const std::string& agent, std::string& text) {
    Email e = lookup_email(sc, email);
    Agent a = parse_agent(sc, agent);
    if (!e.involved().contains(a)) throw InputError(agent + " is not involved in " + email);
    Formula f = info_gain(e, a, sc.agent_set());
    Verdict v = make_verdict("ig", "IG(" + email + ", " + agent + ")", "exact");
    v.details["formula"] = formula_json(f, sc);
    text = print_formula(f, sc) + "\n";
    return v;
}

inline Verdict cmd_report(const Scenario& sc, std::string& text) {
    require_legal(sc.state);
    KnowledgeReport r = who_knows_what(sc.state);
    Verdict v = make_verdict("report", "who-knows-what", "exact");
    std::ostringstream t;
    json entries = json::array();
    for (const auto& entry : r.entries) {
        json gains = json::object();
        t << label(sc, entry.email) << ": " << print_formula(entry.epistemic_info, sc) << "\n";
        for (const auto& g : entry.gains) {
            gains[g.agent.name()] = print_formula(g.formula, sc);
            t << "  " << g.agent.name() << " gains " << print_formula(g.formula, sc) << "\n";
        }
        entries.push_back(json{{"email", label(sc, entry.email)},
                               {"epistemic_info", print_formula(entry.epistemic_info, sc)},
                               {"gains", gains}});
    }
    v.details["entries"] = entries;
    if (r.conjunction) v.details["conjunction"] = print_formula(*r.conjunction, sc);
    text = t.str();
    return v;
}

inline Verdict cmd_exchange(const Scenario& sc, bool all, std::size_t limit, std::string& text) {
    Verdict v = make_verdict("exchange", all ? "all exchanges terminate" : "greedy exchange terminates", "exact");
    std::ostringstream t;
    auto run_json = [&](const Exchange& x) {
        json steps = json::array();
        for (const Email& e : x.steps) steps.push_back(label(sc, e));
        json blocked = json::array();
        for (const Blocked& b : x.stuck())
            blocked.push_back(json{{"email", label(sc, b.email)}, {"reason", to_string(b.reason)}});
        return json{{"steps", steps}, {"terminates", x.properly_terminates()}, {"blocked", blocked}};
    };
    if (!all) {
        Exchange x = run_exchange(sc.state);
        v.value = x.properly_terminates();
        v.witness = json{{"kind", "exchange"}, {"run", run_json(x)}};
        t << (x.properly_terminates() ? "properly terminates" : "stuck") << "\nsteps:";
        for (const Email& e : x.steps) t << " " << label(sc, e);
        t << "\n";
        for (const Blocked& b : x.stuck()) t << "blocked: " << label(sc, b.email) << " (" << to_string(b.reason) << ")\n";
    } else {
        auto runs = all_exchanges(sc.state, limit);
        std::size_t good = 0;
        json list = json::array();
        for (const Exchange& x : runs) {
            good += x.properly_terminates();
            list.push_back(run_json(x));
        }
        v.value = good == runs.size();
        v.witness = json{{"kind", "exchanges"}, {"runs", list}};
        v.details["runs"] = runs.size();
        v.details["terminating"] = good;
        v.details["limit_reached"] = runs.size() >= limit;
        t << runs.size() << " exchange(s), " << good << " properly terminating\n";
    }
    text = t.str();
    return v;
}

inline Verdict cmd_simulate(const Scenario& sc, const std::string& email, const std::vector<std::string>& jk,
                            const UniverseParams& params, std::string& text) {
    std::ostringstream t;
    Verdict v = make_verdict("simulate-bcc", email.empty() ? "simulate state" : "simulate " + email, "exact");
    auto plan_json = [&](const SimulationPlan& p) {
        json repl = json::array();
        for (const Email& e : p.replacement) repl.push_back(to_string(e));
        return json{{"original", label(sc, p.original)}, {"replacement", repl}};
    };
    if (!email.empty() && jk.empty()) {
        SimulationPlan p = simulate_bcc_email(lookup_email(sc, email));
        v.witness = json{{"kind", "plan"}, {"plan", plan_json(p)}};
        t << label(sc, p.original) << " =>";
        for (const Email& e : p.replacement) t << " " << to_string(e);
        t << "\n";
        text = t.str();
        return v;
    }
    if (!jk.empty()) {
        if (email.empty()) throw InputError("--check-distinguish needs --email");
        Email e = lookup_email(sc, email);
        Agent j = parse_agent(sc, jk.at(0));
        Agent k = parse_agent(sc, jk.at(1));
        NonSimulabilityReport r = check_nonsimulability(sc.state, e, j, k, params);
        v.query = print_formula(r.formula, sc);
        v.mode = "bounded";
        v.details["original"] = json{{"value", r.on_original.value}, {"mode", to_string(r.on_original.mode)}};
        v.details["simulation"] = state_json(r.simulation.state);
        v.details["simulation_legal"] = r.simulation.legality.legal;
        if (r.on_simulation)
            v.details["on_simulation"] = json{{"value", r.on_simulation->value}, {"mode", to_string(r.on_simulation->mode)}};
        if (r.countermodel) {
            v.witness = json{{"kind", "countermodel"}, {"state", state_json(*r.countermodel)},
                             {"verified", r.countermodel_verified}};
        }
        v.value = r.on_original.value && r.on_simulation && !r.on_simulation->value && r.countermodel_verified;
        t << "formula: " << format_formula(r.formula) << "\n";
        t << "original: " << yes_no(r.on_original.value) << "\n";
        t << "simulation: " << (r.on_simulation ? yes_no(r.on_simulation->value) : "illegal") << "\n";
        if (r.countermodel) {
            t << "countermodel" << (r.countermodel_verified ? "" : " (not verified)") << ":";
            for (const Email& x : r.countermodel->emails()) t << " " << to_string(x);
            t << "\n";
        }
        t << (*v.value ? "distinguished" : "not distinguished") << "\n";
        text = t.str();
        return v;
    }
    require_legal(sc.state);
    SimulationResult r = simulate_bcc_state(sc.state);
    json plans = json::array();
    for (const auto& p : r.plans) plans.push_back(plan_json(p));
    v.value = r.legality.legal;
    v.witness = json{{"kind", "simulation"}, {"plans", plans}, {"state", state_json(r.state)}};
    json blocked = json::array();
    for (const Blocked& b : r.legality.stuck)
        blocked.push_back(json{{"email", to_string(b.email)}, {"reason", to_string(b.reason)}});
    v.details["blocked"] = blocked;
    t << "simulated state (" << r.state.size() << " emails, " << (r.legality.legal ? "legal" : "illegal") << "):\n";
    for (const Email& x : r.state.emails()) t << "  " << to_string(x) << "\n";
    for (const Blocked& b : r.legality.stuck) t << "blocked: " << to_string(b.email) << " (" << to_string(b.reason) << ")\n";
    text = t.str();
    return v;
}

}  // namespace detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Epistemic analysis of email exchanges with BCC", "epimail"};
    app.require_subcommand(1);

    std::string file, formula, group, message, email, agent;
    std::vector<std::string> jk;
    bool as_json = false, timing = false, all = false;
    std::size_t limit = 1000;
    UniverseParams params;
    bool no_bcc = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("file", file, "scenario file")->required();
        sub->add_flag("--json", as_json, "print the verdict as JSON");
        sub->add_flag("--timing", timing, "report wall-clock time");
    };
    auto universe = [&](CLI::App* sub) {
        sub->add_flag("--bcc-variants", params.bcc_variants, "explore BCC variants (default)");
        sub->add_flag("--no-bcc-variants", no_bcc, "do not explore BCC variants");
        sub->add_option("--fwd-depth", params.fwd_depth, "forwards added beyond the root state");
        sub->add_option("--max-states", params.max_states, "universe size cap");
    };

    auto* check = app.add_subcommand("check", "decide legality and print a witness order");
    common(check);
    auto* ev = app.add_subcommand("eval", "evaluate a formula");
    common(ev);
    ev->add_option("formula", formula, "formula text")->required();
    universe(ev);
    auto* ck = app.add_subcommand("ck", "decide common knowledge of a message or email");
    common(ck);
    ck->add_option("--group", group, "comma-separated agents")->required();
    auto* ck_msg = ck->add_option("--message", message, "message name");
    auto* ck_email = ck->add_option("--email", email, "email name");
    ck_msg->excludes(ck_email);
    auto* ei = app.add_subcommand("ei", "epistemic information of an email");
    common(ei);
    ei->add_option("--email", email, "email name")->required();
    auto* ig = app.add_subcommand("ig", "information gain of an involved agent");
    common(ig);
    ig->add_option("--email", email, "email name")->required();
    ig->add_option("--agent", agent, "agent name")->required();
    auto* report = app.add_subcommand("report", "who knows what after each email");
    common(report);
    auto* exchange = app.add_subcommand("exchange", "run the email exchange");
    common(exchange);
    exchange->add_flag("--all", all, "enumerate all exchanges");
    exchange->add_option("--limit", limit, "maximum number of exchanges enumerated");
    auto* sim = app.add_subcommand("simulate-bcc", "replace BCC delivery by forwards");
    common(sim);
    sim->add_option("--email", email, "email name");
    sim->add_option("--check-distinguish", jk, "BCC recipient j and observer k")->expected(2);
    universe(sim);

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kTrue;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kUsage;
    }
    if (no_bcc) params.bcc_variants = false;
    if (*ck && message.empty() && email.empty()) {
        err << "ck: one of --message or --email is required\n";
        return kUsage;
    }

    try {
        Scenario sc = detail::load(file);
        auto start = std::chrono::steady_clock::now();
        std::string text;
        Verdict v;
        if (*check) v = detail::cmd_check(sc, text);
        else if (*ev) v = detail::cmd_eval(sc, formula, params, text);
        else if (*ck) v = detail::cmd_ck(sc, group, message, email, text);
        else if (*ei) v = detail::cmd_ei(sc, email, text);
        else if (*ig) v = detail::cmd_ig(sc, email, agent, text);
        else if (*report) v = detail::cmd_report(sc, text);
        else if (*exchange) v = detail::cmd_exchange(sc, all, limit, text);
        else v = detail::cmd_simulate(sc, email, jk, params, text);
        if (timing)
            v.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return detail::finish(v, text, {as_json, timing}, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IllegalState& e) {
        err << "illegal: " << e.what() << "\n";
        return kFalse;
    } catch (const UnsupportedFragment& e) {
        err << "unsupported: " << e.what() << "\n";
        return kUnsupported;
    } catch (const HypothesisViolation& e) {
        err << "not applicable: " << e.what() << "\n";
        return kUnsupported;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace epimail::cli
