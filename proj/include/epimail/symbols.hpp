#pragma once

// Agents and notes are interned process-wide into small integer ids so that
// sets of them fit in a single 64-bit mask. Interning is append-only and the
// id of a name never changes, so Agent/Note behave as plain values.

#include <array>
#include <atomic>
#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>
#include <algorithm>

namespace epimail {

inline constexpr std::size_t kMaxSymbols = 64;

namespace detail {

inline bool is_token(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_';
        if (!ok) return false;
    }
    return true;
}

class SymbolTable {
public:
    explicit SymbolTable(const char* kind) : kind_(kind) {}

    std::uint8_t intern(std::string_view name) {
        if (!is_token(name))
            throw std::invalid_argument(std::string("invalid ") + kind_ + " name '" +
                                        std::string(name) + "'");
        std::lock_guard lock(mutex_);
        if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
        std::size_t n = count_.load(std::memory_order_relaxed);
        if (n == kMaxSymbols)
            throw std::length_error(std::string("too many distinct ") + kind_ + " names (limit 64)");
        names_[n] = std::string(name);
        ids_.emplace(names_[n], static_cast<std::uint8_t>(n));
        count_.store(n + 1, std::memory_order_release);
        return static_cast<std::uint8_t>(n);
    }

    const std::string& name(std::uint8_t id) const {
        if (id >= count_.load(std::memory_order_acquire))
            throw std::out_of_range(std::string("unknown ") + kind_ + " id");
        return names_[id];
    }

private:
    const char* kind_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::uint8_t> ids_;
    std::array<std::string, kMaxSymbols> names_;
    std::atomic<std::size_t> count_{0};
};

inline SymbolTable& agent_table() {
    static SymbolTable table("agent");
    return table;
}

inline SymbolTable& note_table() {
    static SymbolTable& table = [] () -> SymbolTable& {
        static SymbolTable t("note");
        t.intern("true");
        return t;
    }();
    return table;
}

}  // namespace detail

class Agent {
public:
    explicit Agent(std::string_view name) : id_(detail::agent_table().intern(name)) {}

    static Agent from_index(std::uint8_t id) {
        Agent a;
        a.id_ = id;
        return a;
    }

    std::uint8_t index() const { return id_; }
    const std::string& name() const { return detail::agent_table().name(id_); }

    friend bool operator==(Agent, Agent) = default;
    friend auto operator<=>(Agent, Agent) = default;

private:
    Agent() = default;
    std::uint8_t id_ = 0;
};

/// An uninterpreted unit of content. The note `true` (id 0) is held by everyone.
class Note {
public:
    explicit Note(std::string_view name) : id_(detail::note_table().intern(name)) {}

    static Note truth() { return from_index(0); }
    static Note from_index(std::uint8_t id) {
        Note n;
        n.id_ = id;
        return n;
    }

    bool is_truth() const { return id_ == 0; }
    std::uint8_t index() const { return id_; }
    const std::string& name() const { return detail::note_table().name(id_); }

    friend bool operator==(Note, Note) = default;
    friend auto operator<=>(Note, Note) = default;

private:
    Note() { detail::note_table(); }
    std::uint8_t id_ = 0;
};

/// Finite set of interned symbols stored as a bit mask.
template <class Symbol>
class SymbolSet {
public:
    class iterator {
    public:
        using value_type = Symbol;
        using difference_type = std::ptrdiff_t;
        using iterator_category = std::forward_iterator_tag;

        iterator() = default;
        explicit iterator(std::uint64_t rest) : rest_(rest) {}
        Symbol operator*() const {
            return Symbol::from_index(static_cast<std::uint8_t>(std::countr_zero(rest_)));
        }
        iterator& operator++() {
            rest_ &= rest_ - 1;
            return *this;
        }
        iterator operator++(int) {
            auto copy = *this;
            ++*this;
            return copy;
        }
        friend bool operator==(iterator, iterator) = default;

    private:
        std::uint64_t rest_ = 0;
    };

    constexpr SymbolSet() = default;
    SymbolSet(std::initializer_list<Symbol> symbols) {
        for (Symbol s : symbols) insert(s);
    }
    template <std::input_iterator It>
    SymbolSet(It first, It last) {
        for (; first != last; ++first) insert(*first);
    }

    static constexpr SymbolSet from_bits(std::uint64_t bits) {
        SymbolSet s;
        s.bits_ = bits;
        return s;
    }

    std::uint64_t bits() const { return bits_; }
    bool empty() const { return bits_ == 0; }
    std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    bool contains(Symbol s) const { return (bits_ >> s.index()) & 1U; }
    void insert(Symbol s) { bits_ |= std::uint64_t{1} << s.index(); }
    void erase(Symbol s) { bits_ &= ~(std::uint64_t{1} << s.index()); }
    bool subset_of(SymbolSet other) const { return (bits_ & ~other.bits_) == 0; }
    bool intersects(SymbolSet other) const { return (bits_ & other.bits_) != 0; }

    iterator begin() const { return iterator(bits_); }
    iterator end() const { return iterator(0); }

    /// Members ordered by name, for display and serialization.
    std::vector<Symbol> sorted() const {
        std::vector<Symbol> out(begin(), end());
        std::sort(out.begin(), out.end(),
                  [](Symbol a, Symbol b) { return a.name() < b.name(); });
        return out;
    }

    friend SymbolSet operator|(SymbolSet a, SymbolSet b) { return from_bits(a.bits_ | b.bits_); }
    friend SymbolSet operator&(SymbolSet a, SymbolSet b) { return from_bits(a.bits_ & b.bits_); }
    friend SymbolSet operator-(SymbolSet a, SymbolSet b) { return from_bits(a.bits_ & ~b.bits_); }
    friend bool operator==(SymbolSet, SymbolSet) = default;
    friend auto operator<=>(SymbolSet, SymbolSet) = default;

private:
    std::uint64_t bits_ = 0;
};

using AgentSet = SymbolSet<Agent>;
using NoteSet = SymbolSet<Note>;

inline AgentSet singleton(Agent a) { return AgentSet{a}; }
inline NoteSet singleton(Note n) { return NoteSet{n}; }

inline std::string join_names(const AgentSet& set, std::string_view sep = ",") {
    std::string out;
    for (Agent a : set.sorted()) {
        if (!out.empty()) out += sep;
        out += a.name();
    }
    return out;
}

inline std::string join_names(const NoteSet& set, std::string_view sep = ",") {
    std::string out;
    for (Note n : set.sorted()) {
        if (!out.empty()) out += sep;
        out += n.name();
    }
    return out;
}

}  // namespace epimail
