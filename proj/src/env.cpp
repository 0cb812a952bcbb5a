#include "inversemf/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/rng.hpp"

namespace imf {

using nlohmann::json;

double BranchSpec::ginv_y(double z) const {
    if (map == MapKind::Affine) return z;
    return z / (1.0 + c - c * z);
}

double BranchSpec::psi_y(double y) const {
    double v = std::log(b - a);
    if (map == MapKind::Moebius) v += 2.0 * std::log1p(c * y) - std::log1p(c);
    return v;
}

double BranchSpec::max_contraction() const {
    if (map == MapKind::Affine) return b - a;
    return (b - a) * std::max(1.0 + c, 1.0 / (1.0 + c));
}

const BinMatrix& EnvModel::adm(int k, int k2) const {
    auto it = admissibility.find({k, k2});
    if (it == admissibility.end())
        fail(ErrorKind::Structural, "no admissibility matrix for edge " + std::to_string(k) + "->" + std::to_string(k2));
    return it->second;
}

namespace {

double num(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(ErrorKind::Structural, where + ": missing key '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) fail(ErrorKind::Structural, where + ": '" + key + "' is not a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) fail(ErrorKind::Structural, where + ": '" + key + "' is not finite");
    return x;
}

PotentialProfile parse_profile(const json& j, const std::string& where) {
    PotentialProfile p;
    if (!j.is_object()) fail(ErrorKind::Structural, where + ": phi must be an object");
    std::string kind = j.value("kind", "constant");
    p.value = num(j, "value", where);
    if (kind == "constant") {
        p.kind = ProfileKind::Constant;
    } else if (kind == "lipschitz") {
        p.kind = ProfileKind::Lipschitz;
        p.slope = num(j, "slope", where);
    } else {
        fail(ErrorKind::Structural, where + ": unknown phi kind '" + kind + "'");
    }
    return p;
}

BranchSpec parse_branch(const json& j, const std::string& where) {
    if (!j.is_object()) fail(ErrorKind::Structural, where + ": branch must be an object");
    BranchSpec br;
    br.a = num(j, "a", where);
    br.b = num(j, "b", where);
    if (!(br.a < br.b)) fail(ErrorKind::Structural, where + ": need a < b");
    if (j.contains("map")) {
        const json& m = j.at("map");
        std::string kind = m.is_string() ? m.get<std::string>() : m.value("kind", "affine");
        if (kind == "affine") {
            br.map = MapKind::Affine;
        } else if (kind == "moebius") {
            br.map = MapKind::Moebius;
            br.c = num(m, "c", where);
        } else {
            fail(ErrorKind::Structural, where + ": unknown map kind '" + kind + "'");
        }
    }
    if (!j.contains("phi")) fail(ErrorKind::Structural, where + ": missing 'phi'");
    br.phi = parse_profile(j.at("phi"), where);
    return br;
}

std::pair<int, int> parse_edge_key(const std::string& key) {
    auto pos = key.find("->");
    if (pos == std::string::npos) fail(ErrorKind::Structural, "bad admissibility key '" + key + "'");
    try {
        std::size_t used = 0;
        int a = std::stoi(key.substr(0, pos), &used);
        if (used != pos) throw std::invalid_argument("trailing");
        std::string rest = key.substr(pos + 2);
        int b = std::stoi(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("trailing");
        return {a, b};
    } catch (const std::exception&) {
        fail(ErrorKind::Structural, "bad admissibility key '" + key + "'");
    }
}

void check_structure(const EnvModel& m) {
    const int n = m.num_states();
    if (n == 0) fail(ErrorKind::Structural, "model has no states");
    for (int k = 0; k < n; ++k)
        if (m.states[k].branches.empty())
            fail(ErrorKind::Structural, "state " + std::to_string(k) + " has an empty alphabet");
    if (static_cast<int>(m.transition.size()) != n)
        fail(ErrorKind::Structural, "transition matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    for (int k = 0; k < n; ++k) {
        const auto& row = m.transition[k];
        if (static_cast<int>(row.size()) != n)
            fail(ErrorKind::Structural, "transition row " + std::to_string(k) + " has wrong length");
        double s = 0.0;
        for (double x : row) {
            if (!(x >= 0.0) || !std::isfinite(x))
                fail(ErrorKind::Structural, "transition row " + std::to_string(k) + " has a bad entry");
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-9)
            fail(ErrorKind::Structural, "transition row " + std::to_string(k) + " does not sum to 1");
    }
    for (int k = 0; k < n; ++k) {
        for (int k2 = 0; k2 < n; ++k2) {
            if (!m.has_edge(k, k2)) continue;
            const std::string key = std::to_string(k) + "->" + std::to_string(k2);
            auto it = m.admissibility.find({k, k2});
            if (it == m.admissibility.end()) fail(ErrorKind::Structural, "missing admissibility matrix " + key);
            const BinMatrix& a = it->second;
            const int r = m.states[k].alphabet_size(), c = m.states[k2].alphabet_size();
            if (static_cast<int>(a.size()) != r)
                fail(ErrorKind::Structural, "admissibility " + key + " must have " + std::to_string(r) + " rows");
            std::vector<int> colsum(c, 0);
            for (int i = 0; i < r; ++i) {
                if (static_cast<int>(a[i].size()) != c)
                    fail(ErrorKind::Structural, "admissibility " + key + " must have " + std::to_string(c) + " columns");
                int rs = 0;
                for (int j = 0; j < c; ++j) {
                    rs += a[i][j];
                    colsum[j] += a[i][j];
                }
                if (rs == 0) fail(ErrorKind::Structural, "admissibility " + key + " has an all-zero row " + std::to_string(i + 1));
            }
            for (int j = 0; j < c; ++j)
                if (colsum[j] == 0)
                    fail(ErrorKind::Structural, "admissibility " + key + " has an all-zero column " + std::to_string(j + 1));
        }
    }
}

}  // namespace

EnvModel model_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::Structural, "model must be a JSON object");
    EnvModel m;
    if (!j.contains("format")) fail(ErrorKind::Structural, "missing key 'format'");
    m.format = j.at("format").get<std::string>();
    if (m.format != "inversemf/1") fail(ErrorKind::Structural, "unsupported format '" + m.format + "'");
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_integer()) fail(ErrorKind::Structural, "'seed' must be an integer");
        m.seed = s.is_number_unsigned() ? s.get<std::uint64_t>() : static_cast<std::uint64_t>(s.get<std::int64_t>());
    }
    if (j.contains("derivative_bound")) m.derivative_bound = num(j, "derivative_bound", "model");
    if (!j.contains("states") || !j.at("states").is_array()) fail(ErrorKind::Structural, "missing array 'states'");
    int idx = 0;
    for (const json& js : j.at("states")) {
        EnvState st;
        st.id = js.value("id", idx);
        const std::string where = "state " + std::to_string(idx);
        if (!js.contains("branches") || !js.at("branches").is_array())
            fail(ErrorKind::Structural, where + ": missing array 'branches'");
        int b = 0;
        for (const json& jb : js.at("branches"))
            st.branches.push_back(parse_branch(jb, where + " branch " + std::to_string(++b)));
        if (js.contains("alphabet_size") && js.at("alphabet_size").get<int>() != st.alphabet_size())
            fail(ErrorKind::Structural, where + ": alphabet_size does not match the branch list");
        m.states.push_back(std::move(st));
        ++idx;
    }
    if (!j.contains("transition")) fail(ErrorKind::Structural, "missing key 'transition'");
    try {
        m.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
        fail(ErrorKind::Structural, "'transition' must be a matrix of numbers");
    }
    if (!j.contains("admissibility") || !j.at("admissibility").is_object())
        fail(ErrorKind::Structural, "missing object 'admissibility'");
    for (auto it = j.at("admissibility").begin(); it != j.at("admissibility").end(); ++it) {
        auto edge = parse_edge_key(it.key());
        if (edge.first < 0 || edge.first >= m.num_states() || edge.second < 0 || edge.second >= m.num_states())
            fail(ErrorKind::Structural, "admissibility key '" + it.key() + "' names an unknown state");
        BinMatrix a;
        try {
            for (const json& row : it.value()) {
                std::vector<std::uint8_t> r;
                for (const json& x : row) {
                    int v = x.get<int>();
                    if (v != 0 && v != 1) throw std::invalid_argument("not binary");
                    r.push_back(static_cast<std::uint8_t>(v));
                }
                a.push_back(std::move(r));
            }
        } catch (const std::exception&) {
            fail(ErrorKind::Structural, "admissibility '" + it.key() + "' must be a 0/1 matrix");
        }
        m.admissibility[edge] = std::move(a);
    }
    check_structure(m);
    return m;
}

json model_to_json(const EnvModel& m) {
    json j;
    j["format"] = m.format;
    j["seed"] = m.seed;
    j["derivative_bound"] = m.derivative_bound;
    json states = json::array();
    for (const auto& st : m.states) {
        json js;
        js["id"] = st.id;
        json brs = json::array();
        for (const auto& br : st.branches) {
            json jb;
            jb["a"] = br.a;
            jb["b"] = br.b;
            if (br.map == MapKind::Affine)
                jb["map"] = {{"kind", "affine"}};
            else
                jb["map"] = {{"kind", "moebius"}, {"c", br.c}};
            if (br.phi.kind == ProfileKind::Constant)
                jb["phi"] = {{"kind", "constant"}, {"value", br.phi.value}};
            else
                jb["phi"] = {{"kind", "lipschitz"}, {"value", br.phi.value}, {"slope", br.phi.slope}};
            brs.push_back(jb);
        }
        js["branches"] = brs;
        states.push_back(js);
    }
    j["states"] = states;
    j["transition"] = m.transition;
    json adm = json::object();
    for (const auto& [edge, a] : m.admissibility) {
        json rows = json::array();
        for (const auto& r : a) {
            json row = json::array();
            for (auto v : r) row.push_back(static_cast<int>(v));
            rows.push_back(row);
        }
        adm[std::to_string(edge.first) + "->" + std::to_string(edge.second)] = rows;
    }
    j["admissibility"] = adm;
    return j;
}

EnvModel load_model(const std::string& path) {
    std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Structural, path + ": malformed JSON: " + e.what());
    }
    return model_from_json(j);
}

std::string model_hash(const EnvModel& m) { return hex64(fnv1a64(model_to_json(m).dump())); }

std::vector<double> stationary_distribution(const EnvModel& m) {
    // Solve pi (Q - I) = 0 with sum(pi) = 1 by Gaussian elimination; the last
    // balance equation is replaced by the normalization.
    const int n = m.num_states();
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a[i][j] = m.transition[j][i] - (i == j ? 1.0 : 0.0);
    }
    for (int j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    a[n - 1][n] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        double d = a[col][col];
        if (std::abs(d) < 1e-300) fail(ErrorKind::InvalidModel, "transition matrix has no unique stationary law");
        for (int c = col; c <= n; ++c) a[col][c] /= d;
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0.0) continue;
            double f = a[r][col];
            for (int c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> pi(n);
    for (int i = 0; i < n; ++i) pi[i] = std::max(0.0, a[i][n]);
    double s = 0.0;
    for (double x : pi) s += x;
    for (double& x : pi) x /= s;
    return pi;
}

bool is_primitive(const std::vector<std::vector<double>>& q) {
    const std::size_t n = q.size();
    std::vector<std::vector<char>> base(n, std::vector<char>(n)), cur;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) base[i][j] = q[i][j] > 0.0;
    cur = base;
    // Wielandt: a primitive n x n matrix has a positive power at exponent (n-1)^2 + 1
    const std::size_t limit = (n - 1) * (n - 1) + 1;
    for (std::size_t p = 1; p <= limit; ++p) {
        bool all = true;
        for (std::size_t i = 0; i < n && all; ++i)
            for (std::size_t j = 0; j < n && all; ++j) all = cur[i][j];
        if (all) return true;
        std::vector<std::vector<char>> next(n, std::vector<char>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                if (cur[i][k])
                    for (std::size_t j = 0; j < n; ++j)
                        if (base[k][j]) next[i][j] = 1;
        cur.swap(next);
    }
    return false;
}

bool ValidationReport::ok() const {
    return std::none_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == CheckStatus::Fail; });
}

bool ValidationReport::has_warnings() const {
    return std::any_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == CheckStatus::Warn; });
}

json ValidationReport::to_json() const {
    json j;
    j["ok"] = ok();
    j["c_psi"] = c_psi;
    j["c_phi"] = c_phi;
    j["stationary"] = stationary;
    json cs = json::array();
    for (const auto& c : checks) {
        const char* st = c.status == CheckStatus::Pass ? "pass" : c.status == CheckStatus::Warn ? "warn" : "fail";
        cs.push_back({{"name", c.name}, {"status", st}, {"detail", c.detail}});
    }
    j["checks"] = cs;
    return j;
}

ValidationReport validate_model(const EnvModel& m) {
    check_structure(m);
    ValidationReport rep;
    auto add = [&](const std::string& name, CheckStatus st, const std::string& detail) {
        rep.checks.push_back({name, st, detail});
    };
    const int n = m.num_states();

    bool prim = is_primitive(m.transition);
    add("transition_primitive", prim ? CheckStatus::Pass : CheckStatus::Fail,
        prim ? "Q is irreducible and aperiodic" : "Q is not irreducible and aperiodic");
    if (prim) {
        rep.stationary = stationary_distribution(m);
    } else {
        rep.stationary.assign(n, 1.0 / n);
    }

    int max_l = 0;
    for (const auto& st : m.states) max_l = std::max(max_l, st.alphabet_size());
    add("alphabet_at_least_two", max_l >= 2 ? CheckStatus::Pass : CheckStatus::Fail,
        "largest alphabet has " + std::to_string(max_l) + " letters");

    {
        std::string bad;
        for (int k = 0; k < n && bad.empty(); ++k) {
            const auto& brs = m.states[k].branches;
            for (std::size_t s = 0; s < brs.size(); ++s) {
                if (brs[s].a < 0.0 || brs[s].b > 1.0) bad = "state " + std::to_string(k) + " branch outside [0,1]";
                if (s + 1 < brs.size() && brs[s].b > brs[s + 1].a)
                    bad = "state " + std::to_string(k) + " branches overlap or are out of order";
            }
        }
        add("branch_intervals", bad.empty() ? CheckStatus::Pass : CheckStatus::Fail,
            bad.empty() ? "branch intervals ordered and disjoint" : bad);
    }

    {
        bool ok = true;
        for (const auto& st : m.states)
            for (const auto& br : st.branches)
                if (br.map == MapKind::Moebius && !(std::abs(br.c) < 1.0)) ok = false;
        add("moebius_parameter", ok ? CheckStatus::Pass : CheckStatus::Fail,
            ok ? "all Moebius parameters satisfy |c| < 1" : "Moebius parameter with |c| >= 1");
    }

    double psi_abs = 0.0;
    double c_psi = 0.0, c_phi = 0.0;
    for (int k = 0; k < n; ++k) {
        double mpsi = -INFINITY, mphi = -INFINITY;
        for (const auto& br : m.states[k].branches) {
            for (double y : {0.0, 1.0}) {
                double p = br.psi_y(y);
                if (std::isfinite(p)) psi_abs = std::max(psi_abs, std::abs(p));
                else psi_abs = INFINITY;
                mpsi = std::max(mpsi, p);
                mphi = std::max(mphi, br.phi_y(y));
            }
        }
        c_psi -= rep.stationary[k] * mpsi;
        c_phi -= rep.stationary[k] * mphi;
    }
    rep.c_psi = c_psi;
    rep.c_phi = c_phi;

    add("derivative_bound", psi_abs <= m.derivative_bound ? CheckStatus::Pass : CheckStatus::Fail,
        "max |log T'| = " + fmt_double(psi_abs) + ", bound " + fmt_double(m.derivative_bound));
    add("contraction_in_mean", c_psi > 0.0 ? CheckStatus::Pass : CheckStatus::Fail, "c_psi = " + fmt_double(c_psi));
    add("potential_in_mean", c_phi > 0.0 ? CheckStatus::Pass : CheckStatus::Fail, "c_phi = " + fmt_double(c_phi));

    {
        int tiling = 0;
        for (const auto& st : m.states) {
            double total = 0.0;
            for (const auto& br : st.branches) total += br.width();
            if (total >= 1.0 - 1e-12) ++tiling;
        }
        CheckStatus st = tiling == 0 ? CheckStatus::Pass : tiling == n ? CheckStatus::Fail : CheckStatus::Warn;
        add("zero_lebesgue", st,
            std::to_string(tiling) + " of " + std::to_string(n) + " states have branches of total length 1");
    }
    return rep;
}

void require_valid(const EnvModel& m) {
    ValidationReport rep = validate_model(m);
    if (rep.ok()) return;
    std::string msg = "model failed validation:";
    for (const auto& c : rep.checks)
        if (c.status == CheckStatus::Fail) msg += " " + c.name + " (" + c.detail + ")";
    fail(ErrorKind::InvalidModel, msg);
}

void EnvPath::require_horizon(int k, const char* what) const {
    if (k > horizon())
        fail(ErrorKind::HorizonTooShort, std::string(what) + " needs time " + std::to_string(k) + " but the horizon is " +
                                             std::to_string(horizon()));
}

EnvPath sample_path(std::shared_ptr<const EnvModel> model, int horizon, const std::string& stream_label) {
    if (horizon < 0) fail(ErrorKind::InvalidArgument, "horizon must be non-negative");
    require_valid(*model);
    EnvPath p;
    p.seed = model->seed;
    p.stream_label = stream_label;
    const std::vector<double> pi = stationary_distribution(*model);
    Stream rng(model->seed, stream_label);
    auto draw = [&](const std::vector<double>& w) {
        double u = rng.uniform();
        double acc = 0.0;
        int last = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] <= 0.0) continue;
            last = static_cast<int>(i);
            acc += w[i];
            if (u < acc) return static_cast<int>(i);
        }
        return last;
    };
    p.states.reserve(static_cast<std::size_t>(horizon) + 1);
    int s = draw(pi);
    p.states.push_back(s);
    for (int k = 1; k <= horizon; ++k) {
        s = draw(model->transition[s]);
        p.states.push_back(s);
    }
    p.model = std::move(model);
    return p;
}

EnvPath shift_path(const EnvPath& path, int k) {
    if (k < 0 || k > path.horizon()) fail(ErrorKind::HorizonTooShort, "shift beyond the path horizon");
    EnvPath p = path;
    p.states.erase(p.states.begin(), p.states.begin() + k);
    p.offset += k;
    return p;
}

json path_to_json(const EnvPath& p) {
    json j;
    j["seed"] = p.seed;
    j["stream"] = p.stream_label;
    j["offset"] = p.offset;
    j["horizon"] = p.horizon();
    j["states"] = p.states;
    return j;
}

}  // namespace imf
