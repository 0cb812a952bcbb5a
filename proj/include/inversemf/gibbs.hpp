#pragma once

#include <memory>
#include <string>
#include <vector>

#include "inversemf/potential.hpp"

namespace imf {

// Dense table over the words of length `depth` starting at time `offset`,
// indexed in mixed radix by the alphabets at those times (last letter
// fastest, so the order is lexicographic). Entries of inadmissible words
// are zero.
struct FunctionTable {
    int offset = 0;
    int depth = 0;
    std::vector<int> radix;
    std::vector<std::size_t> stride;
    std::vector<double> values;

    static FunctionTable zeros(const EnvPath& path, int offset, int depth);
    std::size_t index(const int* letters, int len) const;  // len <= depth: start of the prefix block
    std::size_t index(const Word& w) const { return index(w.letters.data(), static_cast<int>(w.size())); }
    std::size_t block(int len) const { return len >= depth ? 1 : stride[static_cast<std::size_t>(len) - 1]; }
    void decode(std::size_t idx, int* letters) const;
    double& at(const Word& w) { return values[index(w)]; }
    double at(const Word& w) const { return values[index(w)]; }
};

bool dense_admissible(const EnvPath& path, int t, const int* letters, int len);

// sup of phi(t, w_0, .) over the cylinder U_t^{w_0 .. w_{len-1}}
double phi_bar(const EnvPath& path, int t, const int* letters, int len);

// (L h)(v) = sum over letters s with s v admissible of exp(phi_bar(s v)) h(s v),
// with h at time `offset` (depth m) and the result at time offset+1 (depth m).
// phi_bar is taken over the depth-(m+1) cylinder [s v].
FunctionTable rpf_apply(const EnvPath& path, int offset, const FunctionTable& h);

struct RpfOptions {
    int window = 0;         // depth of the stored tables; 0 picks one automatically
    int chain_depth = 64;   // words up to this length past the offset can be queried
    int lambda_steps = 0;   // normalizers are recorded for at least this many steps
    double residual_bound = 1e-8;
    std::size_t max_table = 1u << 16;
};

// Conformal family of the dual transfer operators: tables mu_t of depth m
// for t in [offset, offset + chain_depth], with
//   lambda_t mu_t([w]) = sum_u exp(phi_bar(t, [w u])) mu_{t+1}([w_1..w_{m-1} u]).
// Longer cylinders follow from the same relation, which keeps masses
// additive across depths.
class GibbsFamily {
public:
    GibbsFamily(const EnvPath& path, int offset, int iters, const RpfOptions& opt);

    const EnvPath& path() const { return *path_; }
    int offset() const { return offset_; }
    int window() const { return m_; }
    int last_time() const { return offset_ + chain_depth_; }
    const FunctionTable& table(int t) const;
    double log_lambda(int t) const;
    const std::vector<double>& log_lambdas() const { return log_lambda_; }
    double residual() const { return residual_; }
    double alignment_defect() const { return alignment_; }
    double duality_defect() const { return duality_; }

    // log of the mass of the prefix block (len <= m) at time t
    double log_block(int t, const int* letters, int len) const;
    // phi_bar(t, letters[0..m]) - log lambda_t
    double step_term(int t, const int* letters) const;
    double log_mass(const Word& w) const;
    double mass(const Word& w) const;
    // min over letters s at time t-1 of the mass at time t of words starting
    // with a follower of s
    double min_follower_mass(int t) const;

private:
    const EnvPath* path_;
    int offset_;
    int m_;
    int chain_depth_;
    std::vector<FunctionTable> tables_;
    std::vector<std::vector<double>> cum_;  // prefix sums of each table
    std::vector<double> log_lambda_;        // index t - offset
    double alignment_ = 0.0;
    double duality_ = 0.0;
    double residual_ = 0.0;
    bool phi_const_ = true;
};

// Masses of all admissible words of one depth, in lexicographic order.
struct MeasureTable {
    int offset = 0;
    int depth = 0;
    std::vector<Word> words;
    std::vector<double> masses;
    double residual = 0.0;

    // sum of the masses of the words extending `prefix` (|prefix| <= depth)
    double mass(const Word& prefix) const;
    double total() const;
};

MeasureTable materialize(const GibbsFamily& fam, int offset, int depth);
// Throws InvalidArgument unless every mass is positive and finite.
void check_positive(const MeasureTable& t);
std::string to_csv(const MeasureTable& t);

struct RpfResult {
    std::vector<double> log_lambdas;
    MeasureTable table;
    double residual = 0.0;
    std::shared_ptr<const GibbsFamily> family;

    // (1/k) sum_{i<k} log lambda_{offset+i}
    double mean_log_lambda(int k) const;
};

RpfResult rpf_measure(const EnvPath& path, int offset, int depth, int iters, const RpfOptions& opt = {});

struct GibbsRow {
    int n = 0;
    double defect = 0.0;     // max_v |log mu(v) - sup S_n Phi(v)| / n
    double allowance = 0.0;  // certified bound on the defect
    double epsilon = 0.0;    // distortion part of the allowance
    double lambda_term = 0.0;
    double follower_term = 0.0;
    double max_mass = 0.0;
    bool within = false;
};

struct GibbsReport {
    std::vector<GibbsRow> rows;
    bool all_within() const;
    bool defect_nonincreasing() const;
};

GibbsReport gibbs_diagnostic(const GibbsFamily& fam, int offset, const std::vector<int>& ns);
std::string to_csv(const GibbsReport& r);

}  // namespace imf
