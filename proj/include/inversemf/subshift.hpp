#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "inversemf/env.hpp"

namespace imf {

// Finite word v_0 .. v_{n-1} whose first letter sits at time `offset`.
// Letters are 1-based.
struct Word {
    std::vector<int> letters;
    int offset = 0;

    std::size_t size() const { return letters.size(); }
    bool empty() const { return letters.empty(); }
    int last() const { return letters.back(); }
    int end_time() const { return offset + static_cast<int>(letters.size()); }
    Word child(int s) const;
    Word prefix(std::size_t n) const;
    bool operator==(const Word& o) const { return offset == o.offset && letters == o.letters; }
    bool operator<(const Word& o) const;
};

// "2,1,2@0"; the empty word is "@k".
std::string to_string(const Word& w);
Word parse_word(std::string_view text);

// Letters allowed at time t+1 after letter s at time t, ascending.
std::vector<int> followers(const EnvPath& path, int t, int s);
// Letters allowed at time t given the previous letter (0 = no constraint).
std::vector<int> next_letters(const EnvPath& path, int t, int prev);

bool is_admissible(const EnvPath& path, const Word& w, std::string* why = nullptr);

// Depth-first cursor over the admissible words of length n at `offset`,
// in lexicographic order.
class WordCursor {
public:
    WordCursor(const EnvPath& path, int offset, int n);
    // Advances to the next word; false once exhausted.
    bool next();
    const Word& word() const { return word_; }

private:
    bool fill();
    const EnvPath* path_;
    int n_;
    bool started_ = false;
    bool done_ = false;
    Word word_;
};

WordCursor enumerate_words(const EnvPath& path, int offset, int n);
std::vector<Word> all_words(const EnvPath& path, int offset, int n);
// Number of admissible words of length n, from the admissibility matrix product.
std::uint64_t count_words(const EnvPath& path, int offset, int n);

// Smallest p <= cap with A(s^offset w) ... A(s^{offset+p-1} w) strictly positive.
int mixing_time(const EnvPath& path, int offset, int cap);

// The word w v next, v the lexicographically smallest connector of length p
// making it admissible; next.offset must equal w.end_time() + p.
Word bridge(const EnvPath& path, const Word& w, const Word& next, int p);

}  // namespace imf
