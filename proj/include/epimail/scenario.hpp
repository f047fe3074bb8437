#pragma once

// Line-oriented scenario files and the textual formula language.
//
//   agents a b c d
//   notes c: l                # omitted agents hold only true
//   notes l2 l3               # declares notes nobody holds initially
//   msg m0 = send c -> a d : l
//   msg m1 = fwd a [m0] -> b
//   msg m2 = fwd b +l2 [m1] -> c d
//   msg m3 = reply a [m0] : l3
//   email e0 = m0 bcc {b}
//
//   phi ::= sent(ID) | invl(AGENT, ID) | email(ID, {AGENTS}) | !phi | phi & phi
//         | phi '|' phi | phi -> phi | C{AGENTS} phi | K AGENT phi | (phi)

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "formula.hpp"
#include "model.hpp"

namespace epimail {

class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, Semantic };

    ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& what)
        : std::runtime_error((kind == Kind::Syntax ? "syntax error" : "error") + std::string(" at line ") +
                             std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          kind_(kind), line_(line), column_(column) {}

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    Kind kind_;
    std::size_t line_;
    std::size_t column_;
};

struct Scenario {
    /// Declaration order, for printing.
    std::vector<Agent> agents;
    /// Notes declared without a holder (true excluded).
    std::vector<Note> declared_notes;
    std::map<Agent, NoteSet> holdings;
    std::vector<std::pair<std::string, Message>> messages;
    std::vector<std::pair<std::string, Email>> emails;
    State state;

    AgentSet agent_set() const {
        AgentSet out;
        for (Agent a : agents) out.insert(a);
        return out;
    }

    std::optional<Message> message(std::string_view name) const {
        for (const auto& [n, m] : messages)
            if (n == name) return m;
        return std::nullopt;
    }

    std::optional<Email> email(std::string_view name) const {
        for (const auto& [n, e] : emails)
            if (n == name) return e;
        return std::nullopt;
    }

    /// First name bound to m, if any.
    std::optional<std::string> name_of(const Message& m) const {
        for (const auto& [n, x] : messages)
            if (x == m) return n;
        return std::nullopt;
    }

    std::optional<std::string> name_of(const Email& e) const {
        for (const auto& [n, x] : emails)
            if (x == e) return n;
        return std::nullopt;
    }

    friend bool operator==(const Scenario& a, const Scenario& b) {
        return a.agents == b.agents && a.declared_notes == b.declared_notes && a.holdings == b.holdings &&
               a.messages == b.messages && a.emails == b.emails && a.state == b.state;
    }
};

namespace detail {

struct Token {
    enum class Kind { Ident, Punct, End } kind;
    std::string text;
    std::size_t line;
    std::size_t column;
};

inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline std::vector<Token> tokenize(std::string_view text, std::size_t line) {
    std::vector<Token> out;
    std::size_t k = 0;
    while (k < text.size()) {
        char c = text[k];
        if (c == '#') break;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++k;
            continue;
        }
        std::size_t col = k + 1;
        if (ident_char(c)) {
            std::size_t start = k;
            while (k < text.size() && ident_char(text[k])) ++k;
            out.push_back({Token::Kind::Ident, std::string(text.substr(start, k - start)), line, col});
            continue;
        }
        if (c == '-') {
            if (k + 1 < text.size() && text[k + 1] == '>') {
                out.push_back({Token::Kind::Punct, "->", line, col});
                k += 2;
                continue;
            }
            throw ParseError(ParseError::Kind::Syntax, line, col, "expected '->'");
        }
        if (std::string_view("=:[]{},+()!&|").find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::Punct, std::string(1, c), line, col});
            ++k;
            continue;
        }
        throw ParseError(ParseError::Kind::Syntax, line, col, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::Kind::End, "", line, text.size() + 1});
    return out;
}

class Cursor {
public:
    explicit Cursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    bool at_end() const { return peek().kind == Token::Kind::End; }
    bool is(std::string_view punct) const { return peek().kind == Token::Kind::Punct && peek().text == punct; }
    bool is_word(std::string_view word) const { return peek().kind == Token::Kind::Ident && peek().text == word; }

    bool accept(std::string_view punct) {
        if (!is(punct)) return false;
        ++pos_;
        return true;
    }

    const Token& expect(std::string_view punct) {
        if (!is(punct)) fail("expected '" + std::string(punct) + "'" + found());
        return tokens_[pos_++];
    }

    const Token& ident(std::string_view what) {
        if (peek().kind != Token::Kind::Ident) fail("expected " + std::string(what) + found());
        return tokens_[pos_++];
    }

    void expect_end() {
        if (!at_end()) fail("unexpected trailing input" + found());
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(ParseError::Kind::Syntax, peek().line, peek().column, what);
    }

private:
    std::string found() const {
        if (at_end()) return ", found end of input";
        return ", found '" + peek().text + "'";
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

[[noreturn]] inline void semantic(const Token& at, const std::string& what) {
    throw ParseError(ParseError::Kind::Semantic, at.line, at.column, what);
}

class ScenarioParser {
public:
    Scenario run(std::string_view text) {
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            ++line_no;
            Cursor c(tokenize(text.substr(start, end - start), line_no));
            if (!c.at_end()) line(c);
            start = end + 1;
        }
        std::vector<Email> emails;
        for (const auto& [_, e] : sc_.emails) emails.push_back(e);
        sc_.state = State(sc_.agent_set(), std::move(emails), sc_.holdings);
        return std::move(sc_);
    }

private:
    void line(Cursor& c) {
        const Token& kw = c.ident("a directive (agents, notes, msg, email)");
        if (kw.text == "agents") agents(c);
        else if (kw.text == "notes") notes(c);
        else if (kw.text == "msg") message(c);
        else if (kw.text == "email") email(c);
        else semantic(kw, "unknown directive '" + kw.text + "'");
        c.expect_end();
    }

    void agents(Cursor& c) {
        if (c.at_end()) c.fail("expected at least one agent name");
        while (!c.at_end()) {
            const Token& t = c.ident("an agent name");
            if (known_agent(t.text)) semantic(t, "agent '" + t.text + "' declared twice");
            try {
                sc_.agents.push_back(Agent(t.text));
            } catch (const std::exception& ex) {
                semantic(t, ex.what());
            }
        }
    }

    void notes(Cursor& c) {
        if (c.peek(1).kind == Token::Kind::Punct && c.peek(1).text == ":") {
            Agent a = agent(c.ident("an agent name"));
            c.expect(":");
            NoteSet& held = sc_.holdings[a];
            while (!c.at_end()) {
                Note n = fresh_or_known_note(c.ident("a note name"));
                held.insert(n);
            }
            return;
        }
        if (c.at_end()) c.fail("expected note names or 'agent:'");
        while (!c.at_end()) {
            const Token& t = c.ident("a note name");
            Note n = fresh_or_known_note(t);
            if (!n.is_truth() && std::find(sc_.declared_notes.begin(), sc_.declared_notes.end(), n) ==
                                     sc_.declared_notes.end())
                sc_.declared_notes.push_back(n);
        }
    }

    void message(Cursor& c) {
        const Token& name = c.ident("a message name");
        if (sc_.message(name.text)) semantic(name, "message '" + name.text + "' defined twice");
        c.expect("=");
        const Token& kind = c.ident("send, fwd, reply or replyall");
        std::optional<Message> m;
        if (kind.text == "send") {
            Agent i = agent(c.ident("the sender"));
            const Token& arrow = c.expect("->");
            AgentSet g = agent_list(c, ":");
            if (g.empty()) semantic(arrow, "empty recipients");
            c.expect(":");
            m = Message::send(i, note(c.ident("a note")), g);
        } else if (kind.text == "fwd") {
            Agent i = agent(c.ident("the forwarding agent"));
            Note l = Note::truth();
            if (c.accept("+")) l = note(c.ident("a note"));
            Message orig = bracketed_message(c);
            const Token& arrow = c.expect("->");
            AgentSet g = agent_list(c, "");
            if (g.empty()) semantic(arrow, "empty recipients");
            m = Message::forward(i, l, orig, g);
        } else if (kind.text == "reply" || kind.text == "replyall") {
            const Token& who = c.ident("the replying agent");
            Agent i = agent(who);
            Message orig = bracketed_message(c);
            Note l = Note::truth();
            if (c.accept(":")) l = note(c.ident("a note"));
            if (!orig.recipients().contains(i))
                semantic(who, who.text + " is not a recipient of the message replied to");
            AgentSet g = singleton(orig.sender());
            if (kind.text == "replyall") g = g | orig.recipients();
            m = Message::forward(i, l, orig, g);
        } else {
            semantic(kind, "unknown message form '" + kind.text + "'");
        }
        sc_.messages.emplace_back(name.text, *m);
    }

    void email(Cursor& c) {
        const Token& name = c.ident("an email name");
        for (const auto& [n, _] : sc_.emails)
            if (n == name.text) semantic(name, "email '" + name.text + "' defined twice");
        c.expect("=");
        const Token& mt = c.ident("a message name");
        Message m = known_message(mt);
        AgentSet bcc;
        if (c.is_word("bcc")) {
            c.ident("bcc");
            const Token& open = c.expect("{");
            bcc = agent_list(c, "}");
            c.expect("}");
            if (m.participants().intersects(bcc))
                semantic(open, "BCC set overlaps sender/recipients of " + mt.text);
        }
        for (const auto& [n, e] : sc_.emails)
            if (e.message == m)
                semantic(mt, "duplicate full version: " + mt.text + " already has email '" + n + "'");
        sc_.emails.emplace_back(name.text, Email{m, bcc});
    }

    Message bracketed_message(Cursor& c) {
        c.expect("[");
        Message m = known_message(c.ident("a message name"));
        c.expect("]");
        return m;
    }

    AgentSet agent_list(Cursor& c, std::string_view stop) {
        AgentSet out;
        while (!c.at_end() && !(stop.size() && c.is(stop))) {
            if (c.accept(",")) continue;
            const Token& t = c.ident("an agent name");
            out.insert(agent(t));
        }
        return out;
    }

    bool known_agent(const std::string& name) const {
        return std::any_of(sc_.agents.begin(), sc_.agents.end(), [&](Agent a) { return a.name() == name; });
    }

    Agent agent(const Token& t) const {
        if (!known_agent(t.text)) semantic(t, "undeclared agent '" + t.text + "'");
        return Agent(t.text);
    }

    bool known_note(const std::string& name) const {
        if (name == Note::truth().name()) return true;
        if (std::any_of(sc_.declared_notes.begin(), sc_.declared_notes.end(),
                        [&](Note n) { return n.name() == name; }))
            return true;
        for (const auto& [_, held] : sc_.holdings)
            for (Note n : held)
                if (n.name() == name) return true;
        return false;
    }

    Note note(const Token& t) const {
        if (!known_note(t.text)) semantic(t, "undeclared note '" + t.text + "'");
        return Note(t.text);
    }

    static Note fresh_or_known_note(const Token& t) {
        try {
            return Note(t.text);
        } catch (const std::exception& ex) {
            semantic(t, ex.what());
        }
    }

    Message known_message(const Token& t) const {
        auto m = sc_.message(t.text);
        if (!m) semantic(t, "undeclared message '" + t.text + "'");
        return *m;
    }

    Scenario sc_;
};

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) { return detail::ScenarioParser().run(text); }

inline std::string print_scenario(const Scenario& sc) {
    auto names = [](AgentSet set) {
        std::string out;
        for (Agent a : set.sorted()) out += (out.empty() ? "" : " ") + a.name();
        return out;
    };
    std::string out = "agents";
    for (Agent a : sc.agents) out += " " + a.name();
    out += "\n";
    if (!sc.declared_notes.empty()) {
        out += "notes";
        for (Note n : sc.declared_notes) out += " " + n.name();
        out += "\n";
    }
    for (const auto& [a, held] : sc.holdings) {
        out += "notes " + a.name() + ":";
        for (Note n : held.sorted()) out += " " + n.name();
        out += "\n";
    }
    for (const auto& [name, m] : sc.messages) {
        out += "msg " + name + " = ";
        if (!m.is_forward()) {
            out += "send " + m.sender().name() + " -> " + names(m.recipients()) + " : " + m.note().name();
        } else {
            out += "fwd " + m.sender().name();
            if (!m.note().is_truth()) out += " +" + m.note().name();
            auto orig = sc.name_of(m.original());
            out += " [" + orig.value_or("?") + "] -> " + names(m.recipients());
        }
        out += "\n";
    }
    for (const auto& [name, e] : sc.emails)
        out += "email " + name + " = " + sc.name_of(e.message).value_or("?") + " bcc {" + join_names(e.bcc) + "}\n";
    return out;
}

namespace detail {

class FormulaParser {
public:
    FormulaParser(std::string_view text, const Scenario& sc) : c_(tokenize(text, 1)), sc_(sc) {}

    Formula run() {
        Formula f = implication();
        c_.expect_end();
        return f;
    }

private:
    Formula implication() {
        Formula lhs = disjunction();
        if (c_.accept("->")) return Formula::implies(lhs, implication());
        return lhs;
    }

    Formula disjunction() {
        Formula acc = conjunction();
        while (c_.accept("|")) acc = Formula::disj(acc, conjunction());
        return acc;
    }

    Formula conjunction() {
        Formula acc = unary();
        while (c_.accept("&")) acc = Formula::conj(acc, unary());
        return acc;
    }

    Formula unary() {
        if (c_.accept("!")) return Formula::negate(unary());
        if (c_.is_word("C") && c_.peek(1).kind == Token::Kind::Punct && c_.peek(1).text == "{") {
            c_.ident("C");
            const Token& open = c_.expect("{");
            AgentSet g = agents("}");
            c_.expect("}");
            if (g.empty()) semantic(open, "common knowledge needs a nonempty group");
            return Formula::common(g, unary());
        }
        if (c_.is_word("K") && c_.peek(1).kind == Token::Kind::Ident) {
            c_.ident("K");
            Agent a = agent(c_.ident("an agent name"));
            return Formula::knows(a, unary());
        }
        return atom();
    }

    Formula atom() {
        if (c_.accept("(")) {
            Formula f = implication();
            c_.expect(")");
            return f;
        }
        const Token& head = c_.ident("a formula");
        if (head.text == "sent") {
            c_.expect("(");
            Message m = message(c_.ident("a message name"));
            c_.expect(")");
            return Formula::sent(m);
        }
        if (head.text == "invl") {
            c_.expect("(");
            Agent a = agent(c_.ident("an agent name"));
            c_.expect(",");
            Message m = message(c_.ident("a message name"));
            c_.expect(")");
            return Formula::involved(a, m);
        }
        if (head.text == "email") {
            c_.expect("(");
            Message m = message(c_.ident("a message name"));
            c_.expect(",");
            const Token& open = c_.expect("{");
            AgentSet bcc = agents("}");
            c_.expect("}");
            c_.expect(")");
            if (m.participants().intersects(bcc)) semantic(open, "BCC set overlaps sender/recipients");
            return expand_email_atom(m, bcc, sc_.agent_set());
        }
        semantic(head, "unknown formula head '" + head.text + "'");
    }

    AgentSet agents(std::string_view stop) {
        AgentSet out;
        while (!c_.at_end() && !c_.is(stop)) {
            if (c_.accept(",")) continue;
            out.insert(agent(c_.ident("an agent name")));
        }
        return out;
    }

    Agent agent(const Token& t) const {
        for (Agent a : sc_.agents)
            if (a.name() == t.text) return a;
        semantic(t, "undeclared agent '" + t.text + "'");
    }

    Message message(const Token& t) const {
        auto m = sc_.message(t.text);
        if (!m) semantic(t, "undeclared message '" + t.text + "'");
        return *m;
    }

    Cursor c_;
    const Scenario& sc_;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text, const Scenario& sc) {
    return detail::FormulaParser(text, sc).run();
}

/// Text that parse_formula maps back to the same formula. Messages without a
/// name in `sc` are written as terms, which only the display reads.
inline std::string print_formula(const Formula& f, const Scenario& sc) {
    auto msg = [&](const Message& m) { return sc.name_of(m).value_or(to_string(m)); };
    switch (f.kind()) {
        case FormulaKind::Sent: return "sent(" + msg(f.message()) + ")";
        case FormulaKind::Involved: return "invl(" + f.agent().name() + ", " + msg(f.message()) + ")";
        case FormulaKind::Not: return "!" + print_formula(f.sub(), sc);
        case FormulaKind::And:
            if (auto e = match_email_atom(f, sc.agent_set()))
                return "email(" + msg(e->message) + ", {" + join_names(e->bcc) + "})";
            return "(" + print_formula(f.left(), sc) + " & " + print_formula(f.right(), sc) + ")";
        case FormulaKind::Common:
            if (f.group().size() == 1) return "K " + (*f.group().begin()).name() + " " + print_formula(f.sub(), sc);
            return "C{" + join_names(f.group()) + "} " + print_formula(f.sub(), sc);
    }
    return "?";
}

/// Formula in message-term notation, e.g. C{a,b}(s(c,l,{a,d}) & b◁s(c,l,{a,d})).
inline std::string format_formula(const Formula& f) {
    switch (f.kind()) {
        case FormulaKind::Sent: return to_string(f.message());
        case FormulaKind::Involved: return f.agent().name() + "◁" + to_string(f.message());
        case FormulaKind::Not: return "¬" + format_formula(f.sub());
        case FormulaKind::And: return "(" + format_formula(f.left()) + " ∧ " + format_formula(f.right()) + ")";
        case FormulaKind::Common:
            if (f.group().size() == 1) return "K_" + (*f.group().begin()).name() + " " + format_formula(f.sub());
            return "C{" + join_names(f.group()) + "} " + format_formula(f.sub());
    }
    return "?";
}

}  // namespace epimail
