#include "inversemf/subshift.hpp"

#include <algorithm>
#include <charconv>

#include "inversemf/errors.hpp"

namespace imf {

Word Word::child(int s) const {
    Word w = *this;
    w.letters.push_back(s);
    return w;
}

Word Word::prefix(std::size_t n) const {
    Word w;
    w.offset = offset;
    w.letters.assign(letters.begin(), letters.begin() + static_cast<std::ptrdiff_t>(std::min(n, letters.size())));
    return w;
}

bool Word::operator<(const Word& o) const {
    if (offset != o.offset) return offset < o.offset;
    return letters < o.letters;
}

std::string to_string(const Word& w) {
    std::string s;
    for (std::size_t i = 0; i < w.letters.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(w.letters[i]);
    }
    s += '@';
    s += std::to_string(w.offset);
    return s;
}

Word parse_word(std::string_view text) {
    Word w;
    auto at = text.find('@');
    std::string_view body = text.substr(0, at);
    if (at != std::string_view::npos) {
        std::string_view off = text.substr(at + 1);
        auto r = std::from_chars(off.data(), off.data() + off.size(), w.offset);
        if (r.ec != std::errc() || r.ptr != off.data() + off.size())
            fail(ErrorKind::InvalidArgument, "bad word offset in '" + std::string(text) + "'");
    }
    while (!body.empty()) {
        auto comma = body.find(',');
        std::string_view tok = body.substr(0, comma);
        int v = 0;
        auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || v < 1)
            fail(ErrorKind::InvalidArgument, "bad letter in word '" + std::string(text) + "'");
        w.letters.push_back(v);
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    return w;
}

std::vector<int> followers(const EnvPath& path, int t, int s) {
    path.require_horizon(t + 1, "followers");
    const auto& row = path.adm(t)[static_cast<std::size_t>(s - 1)];
    std::vector<int> out;
    for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j]) out.push_back(static_cast<int>(j) + 1);
    return out;
}

std::vector<int> next_letters(const EnvPath& path, int t, int prev) {
    if (prev == 0) {
        path.require_horizon(t, "next_letters");
        std::vector<int> out(static_cast<std::size_t>(path.alphabet(t)));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i) + 1;
        return out;
    }
    return followers(path, t - 1, prev);
}

bool is_admissible(const EnvPath& path, const Word& w, std::string* why) {
    if (w.offset < 0) fail(ErrorKind::InvalidArgument, "negative word offset");
    path.require_horizon(w.end_time(), "is_admissible");
    for (std::size_t i = 0; i < w.letters.size(); ++i) {
        const int t = w.offset + static_cast<int>(i);
        if (w.letters[i] < 1 || w.letters[i] > path.alphabet(t)) {
            if (why) *why = "letter " + std::to_string(w.letters[i]) + " at position " + std::to_string(i) + " exceeds alphabet";
            return false;
        }
        if (i > 0 && !path.allowed(t - 1, w.letters[i - 1], w.letters[i])) {
            if (why)
                *why = "transition " + std::to_string(w.letters[i - 1]) + "->" + std::to_string(w.letters[i]) +
                       " forbidden at position " + std::to_string(i - 1);
            return false;
        }
    }
    return true;
}

WordCursor::WordCursor(const EnvPath& path, int offset, int n) : path_(&path), n_(n) {
    if (n < 0) fail(ErrorKind::InvalidArgument, "word length must be non-negative");
    path.require_horizon(offset + n, "enumerate_words");
    word_.offset = offset;
}

bool WordCursor::fill() {
    // complete the word with the smallest admissible letters
    while (word_.letters.size() < static_cast<std::size_t>(n_)) {
        const int t = word_.offset + static_cast<int>(word_.letters.size());
        int s = 1;
        if (!word_.letters.empty()) {
            const auto& row = path_->adm(t - 1)[static_cast<std::size_t>(word_.letters.back() - 1)];
            s = 0;
            for (std::size_t j = 0; j < row.size(); ++j)
                if (row[j]) {
                    s = static_cast<int>(j) + 1;
                    break;
                }
        }
        word_.letters.push_back(s);
    }
    return true;
}

bool WordCursor::next() {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        return fill();
    }
    // increment the deepest position that has a larger admissible letter
    while (!word_.letters.empty()) {
        const std::size_t i = word_.letters.size() - 1;
        const int t = word_.offset + static_cast<int>(i);
        const int cur = word_.letters[i];
        const int l = path_->alphabet(t);
        int nxt = 0;
        for (int s = cur + 1; s <= l; ++s) {
            if (i == 0 || path_->allowed(t - 1, word_.letters[i - 1], s)) {
                nxt = s;
                break;
            }
        }
        if (nxt) {
            word_.letters[i] = nxt;
            return fill();
        }
        word_.letters.pop_back();
    }
    done_ = true;
    return false;
}

WordCursor enumerate_words(const EnvPath& path, int offset, int n) { return WordCursor(path, offset, n); }

std::vector<Word> all_words(const EnvPath& path, int offset, int n) {
    std::vector<Word> out;
    WordCursor c(path, offset, n);
    while (c.next()) out.push_back(c.word());
    return out;
}

std::uint64_t count_words(const EnvPath& path, int offset, int n) {
    if (n == 0) return 1;
    path.require_horizon(offset + n, "count_words");
    // u[s] = number of admissible words of the remaining length starting with s
    std::vector<std::uint64_t> u(static_cast<std::size_t>(path.alphabet(offset + n - 1)), 1);
    for (int t = offset + n - 2; t >= offset; --t) {
        const auto& a = path.adm(t);
        std::vector<std::uint64_t> v(a.size(), 0);
        for (std::size_t s = 0; s < a.size(); ++s)
            for (std::size_t s2 = 0; s2 < a[s].size(); ++s2)
                if (a[s][s2]) {
                    if (v[s] > UINT64_MAX - u[s2]) fail(ErrorKind::ResourceGuard, "word count overflows 64 bits");
                    v[s] += u[s2];
                }
        u.swap(v);
    }
    std::uint64_t total = 0;
    for (auto x : u) {
        if (total > UINT64_MAX - x) fail(ErrorKind::ResourceGuard, "word count overflows 64 bits");
        total += x;
    }
    return total;
}

int mixing_time(const EnvPath& path, int offset, int cap) {
    if (cap < 1) fail(ErrorKind::InvalidArgument, "mixing cap must be positive");
    BinMatrix prod;
    for (int p = 1; p <= cap; ++p) {
        const int t = offset + p - 1;
        path.require_horizon(t + 1, "mixing_time");
        const BinMatrix& a = path.adm(t);
        if (p == 1) {
            prod = a;
        } else {
            BinMatrix next(prod.size(), std::vector<std::uint8_t>(a.empty() ? 0 : a[0].size(), 0));
            for (std::size_t i = 0; i < prod.size(); ++i)
                for (std::size_t k = 0; k < prod[i].size(); ++k)
                    if (prod[i][k])
                        for (std::size_t j = 0; j < a[k].size(); ++j)
                            if (a[k][j]) next[i][j] = 1;
            prod.swap(next);
        }
        bool all = true;
        for (const auto& r : prod)
            for (auto x : r) all = all && x;
        if (all) return p;
    }
    fail(ErrorKind::NotMixingWithinCap, "no strictly positive product within " + std::to_string(cap) + " steps");
}

Word bridge(const EnvPath& path, const Word& w, const Word& next, int p) {
    if (w.empty() || next.empty()) fail(ErrorKind::InvalidArgument, "bridge needs non-empty words");
    if (p < 1) fail(ErrorKind::InvalidArgument, "bridge length must be positive");
    if (next.offset != w.end_time() + p)
        fail(ErrorKind::InvalidArgument, "next word must start " + std::to_string(p) + " steps after w ends");
    path.require_horizon(next.offset + 1, "bridge");
    const int t0 = w.end_time();
    // reach[j]: letters at time t0+j from which next[0] at time t0+p is reachable
    std::vector<std::vector<char>> reach(static_cast<std::size_t>(p));
    for (int j = p - 1; j >= 0; --j) {
        const int t = t0 + j;
        reach[j].assign(static_cast<std::size_t>(path.alphabet(t)), 0);
        for (int s = 1; s <= path.alphabet(t); ++s) {
            if (j == p - 1) {
                reach[j][s - 1] = path.allowed(t, s, next.letters[0]);
            } else {
                for (int s2 = 1; s2 <= path.alphabet(t + 1); ++s2)
                    if (path.allowed(t, s, s2) && reach[j + 1][s2 - 1]) {
                        reach[j][s - 1] = 1;
                        break;
                    }
            }
        }
    }
    Word v;
    v.offset = t0;
    int prev = w.last();
    for (int j = 0; j < p; ++j) {
        const int t = t0 + j;
        int pick = 0;
        for (int s = 1; s <= path.alphabet(t); ++s)
            if (path.allowed(t - 1, prev, s) && reach[j][s - 1]) {
                pick = s;
                break;
            }
        if (!pick) fail(ErrorKind::NoConnector, "no connector of length " + std::to_string(p) + " at time " + std::to_string(t0));
        v.letters.push_back(pick);
        prev = pick;
    }
    Word out = w;
    out.letters.insert(out.letters.end(), v.letters.begin(), v.letters.end());
    out.letters.insert(out.letters.end(), next.letters.begin(), next.letters.end());
    return out;
}

}  // namespace imf
