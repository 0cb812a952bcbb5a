#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "inversemf/gibbs.hpp"

namespace imf {

using MassFn = std::function<double(const Word&)>;
MassFn mass_fn(const MeasureTable& t);
MassFn mass_fn(const GibbsFamily& f);

// I^v = [F(m^v), F(M^v)]: the image of the cylinder of v under the
// distribution function of mu, so its length is mu([v]).
struct IntervalRecord {
    Word word;
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    double ell() const { return 2.0 * (hi - lo); }
};

std::vector<IntervalRecord> interval_table(const MeasureTable& t);
// I^v for a single word, from masses of the words to its left
IntervalRecord interval_of(const MassFn& mass, const EnvPath& path, const Word& v);

struct SuffixSets {
    std::vector<Word> S;                           // admissible suffixes of length k, ascending
    std::vector<std::pair<Word, Word>> S_prime;    // (w, next w) for every w except the last
};

SuffixSets suffix_sets(const EnvPath& path, const Word& v, int k);

// Atom of nu at x^{vs} = F(M^{vs}) with weight m^{v s'} - M^{vs}, s' the next
// admissible sibling of s.
struct Atom {
    Word parent;
    int s = 0;
    int s_next = 0;
    double position = 0.0;
    double weight = 0.0;
    double position_err = 0.0;
    int generation() const { return static_cast<int>(parent.size()); }
};

struct AtomList {
    int offset = 0;
    int gen_depth = 0;       // every parent of length < gen_depth is expanded
    double mass_floor = 0.0; // deeper parents are expanded while mu(v) >= mass_floor
    int max_depth = 0;
    std::vector<Atom> atoms;
    double left_mass = 0.0;   // m^min, at 0
    double right_mass = 0.0;  // 1 - M^max, at 1
    double residual = 0.0;    // nu-mass inside the unexpanded intervals
    double max_leaf_length = 0.0;
    double extrema_error = 0.0;
    double total() const;
};

struct AtomOptions {
    int min_depth = 8;
    double mass_floor = INFINITY;
    int max_depth = 64;
    double tol = 1e-15;
};

AtomList atoms(const MeasureTable& t, const EnvPath& path, int gen_depth, double tol = 1e-15);
AtomList atoms_adaptive(const GibbsFamily& fam, int offset, const AtomOptions& opt);
std::string to_csv(const AtomList& a);

struct GapReport {
    std::vector<double> per_letter;  // g(v) for each first letter
    double g_hat = 0.0;              // min over first letters
};

GapReport gap_scan(const EnvPath& path, int offset, int k_max, double tol = 1e-15);

// Largest-weight atom x^{vws} with |ws| <= lookahead inside I^v; ties go to
// the smallest position. Throws NoAtomFound.
Atom designated_atom(const MassFn& mass, const EnvPath& path, const Word& v, int lookahead, double tol = 1e-15);

// nu as a sorted list of point masses, boundary atoms included.
class InverseMeasure {
public:
    explicit InverseMeasure(const AtomList& a);

    std::size_t size() const { return pos_.size(); }
    const std::vector<double>& positions() const { return pos_; }
    const std::vector<double>& weights() const { return w_; }
    // nu([a, b])
    double mass_closed(double a, double b) const;
    double ball(double c, double r) const { return mass_closed(c - r, c + r); }
    double residual() const { return residual_; }
    double max_leaf_length() const { return max_leaf_; }

private:
    std::vector<double> pos_, w_;
    std::vector<long double> prefix_;
    double residual_ = 0.0;
    double max_leaf_ = 0.0;
};

}  // namespace imf
