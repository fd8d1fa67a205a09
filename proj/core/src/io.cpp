#include "copoly/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

namespace copoly {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Locates the 1-based line of `key` inside `[section]` (root when empty); 0 if not found.
int find_line(std::string_view text, const std::string& section, const std::string& key) {
    std::istringstream in{std::string(text)};
    std::string line, current;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            current = trim(t.substr(1, t.find(']') - 1));
            if (key.empty() && current == section) return n;
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key) return n;
    }
    return 0;
}

/// Strips trailing `# ...` comments (boost's INI reader only handles full-line comments).
std::string strip_comments(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        out << line << '\n';
    }
    return out.str();
}

class Reader {
public:
    Reader(std::string_view text, const pt::ptree& tree) : text_(text), tree_(tree) {}

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
        const std::string field = section.empty() ? key : section + "." + key;
        const int line = find_line(text_, section, key);
        std::string what = "config: " + field + ": " + msg;
        if (line > 0) what += " (line " + std::to_string(line) + ")";
        throw ConfigError(field, line, what);
    }

    const pt::ptree* section(const std::string& name) const {
        if (name.empty()) return &tree_;
        auto it = tree_.find(name);
        return it == tree_.not_found() ? nullptr : &it->second;
    }

    std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
        const pt::ptree* s = section(sec);
        if (!s) return std::nullopt;
        auto it = s->find(key);
        if (it == s->not_found() || (sec.empty() && !it->second.empty())) return std::nullopt;
        return trim(it->second.data());
    }

    template <class T>
    void get(const std::string& sec, const std::string& key, T& out) const {
        auto v = raw(sec, key);
        if (!v) return;
        out = convert<T>(sec, key, *v);
    }

    std::vector<double> list(const std::string& sec, const std::string& key, const std::string& v,
                             std::size_t expected) const {
        std::vector<double> out;
        std::string item;
        std::istringstream in(v);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(convert<double>(sec, key, item));
        }
        if (expected && out.size() != expected)
            fail(sec, key, "expected " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
        return out;
    }

    template <std::size_t K>
    void get_array(const std::string& sec, const std::string& key, std::array<double, K>& out) const {
        auto v = raw(sec, key);
        if (!v) return;
        auto xs = list(sec, key, *v, K);
        std::copy(xs.begin(), xs.end(), out.begin());
    }

    template <class T>
    T convert(const std::string& sec, const std::string& key, const std::string& v) const {
        if constexpr (std::is_same_v<T, std::string>) {
            return v;
        } else if constexpr (std::is_same_v<T, bool>) {
            const std::string l = lower(v);
            if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
            if (l == "false" || l == "0" || l == "no" || l == "off") return false;
            fail(sec, key, "expected a boolean, got '" + v + "'");
        } else {
            T x{};
            std::istringstream in(v);
            in >> x;
            if (in.fail() || !(in >> std::ws).eof()) fail(sec, key, "cannot parse '" + v + "'");
            if constexpr (std::is_floating_point_v<T>)
                if (!std::isfinite(x)) fail(sec, key, "value must be finite");
            return x;
        }
    }

    void reject_unknown(const std::map<std::string, std::set<std::string>>& allowed) const {
        for (const auto& [name, node] : tree_) {
            if (node.empty()) {
                const bool empty_section = node.data().empty() && !name.empty() && allowed.count(name);
                if (!allowed.at("").count(name) && !empty_section) fail("", name, "unknown key");
                continue;
            }
            auto sec = allowed.find(name);
            if (name.empty() || sec == allowed.end()) fail(name, "", "unknown section [" + name + "]");
            for (const auto& [key, child] : node) {
                (void)child;
                if (!sec->second.count(key)) fail(name, key, "unknown key");
            }
        }
    }

private:
    std::string_view text_;
    const pt::ptree& tree_;
};

const std::map<std::string, std::set<std::string>> kAllowed{
    {"", {"experiment", "scheme", "seed"}},
    {"model", {"N", "chi_AB", "chi_AS", "chi_BS", "eps", "gamma", "sigma", "M", "eq_C", "potential"}},
    {"initial", {"kind", "base", "amp", "relax_from", "relax_T"}},
    {"coupling", {"kind", "eps0", "eps1", "E0", "hysteresis", "gamma_m", "B0"}},
    {"grid", {"Nx", "Ny", "Lx", "Ly"}},
    {"time", {"dt", "T", "snapshots"}},
    {"solver", {"dissipation", "refresh_potential"}},
    {"output", {"dir"}},
};

std::string join(const double* v, std::size_t n) {
    std::string s;
    for (std::size_t k = 0; k < n; ++k) s += (k ? ", " : "") + fmt17(v[k]);
    return s;
}

bool same_coupling(const CouplingSpec& a, const CouplingSpec& b) {
    if (a.index() != b.index()) return false;
    if (const auto* e = std::get_if<ElectricSpec>(&a)) {
        const auto& f = std::get<ElectricSpec>(b);
        return e->eps0 == f.eps0 && e->eps1 == f.eps1 && e->E0 == f.E0 && e->hysteresis == f.hysteresis;
    }
    if (const auto* m = std::get_if<MagneticParams>(&a)) {
        const auto& n = std::get<MagneticParams>(b);
        return m->gamma_m == n.gamma_m && m->B0 == n.B0;
    }
    return true;
}

bool same_model(const ModelInputs& a, const ModelInputs& b) {
    return a.N == b.N && a.chi == b.chi && a.eps == b.eps && a.gamma == b.gamma && a.phibar == b.phibar &&
           a.sigma == b.sigma && a.M == b.M && a.eq_C == b.eq_C && a.potential == b.potential;
}

bool same_initial(const InitialCondition& a, const InitialCondition& b) {
    return a.kind == b.kind && a.base == b.base && a.amp == b.amp && a.relax_from == b.relax_from &&
           a.relax_T == b.relax_T;
}

// ---- little-endian binary helpers ----

template <class T>
void put(std::ostream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T take(std::istream& in) {
    unsigned char b[sizeof(T)];
    in.read(reinterpret_cast<char*>(b), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace

ConfigError::ConfigError(std::string field, int line, const std::string& what)
    : std::runtime_error(what), field_(std::move(field)), line_(line) {}

StepperOptions RunConfig::stepper_options() const {
    StepperOptions o;
    o.dissipation_point = dissipation_point;
    o.refresh_potential_in_newton = refresh_potential_in_newton;
    return o;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.experiment == b.experiment && a.spec.name == b.spec.name && same_model(a.spec.model, b.spec.model) &&
           same_coupling(a.spec.coupling, b.spec.coupling) && same_initial(a.spec.initial, b.spec.initial) &&
           a.scheme == b.scheme && a.nx == b.nx && a.ny == b.ny && a.lx == b.lx && a.ly == b.ly && a.dt == b.dt &&
           a.T == b.T && a.seed == b.seed && a.snapshot_times == b.snapshot_times && a.out_dir == b.out_dir &&
           a.dissipation_point == b.dissipation_point &&
           a.refresh_potential_in_newton == b.refresh_potential_in_newton;
}

RunConfig parse_config(std::string_view text) {
    pt::ptree tree;
    try {
        std::istringstream in(strip_comments(text));
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", static_cast<int>(e.line()), "config: " + e.message() + " (line " +
                                                              std::to_string(e.line()) + ")");
    }
    const Reader rd(text, tree);
    rd.reject_unknown(kAllowed);

    RunConfig c;
    const auto name = rd.raw("", "experiment");
    if (!name || name->empty()) rd.fail("", "experiment", "missing required key");
    c.experiment = *name;
    try {
        c.spec = find_experiment(c.experiment);
    } catch (const std::invalid_argument& e) {
        rd.fail("", "experiment", e.what());
    }
    c.nx = c.ny = c.spec.n;
    c.dt = c.spec.dt;
    c.T = c.spec.T;
    c.snapshot_times = c.spec.snapshot_times;

    if (auto s = rd.raw("", "scheme")) {
        try {
            c.scheme = parse_scheme(*s);
        } catch (const std::invalid_argument& e) {
            rd.fail("", "scheme", e.what());
        }
    }
    rd.get("", "seed", c.seed);

    // [model]
    ModelInputs& m = c.spec.model;
    rd.get_array("model", "N", m.N);
    const std::pair<const char*, std::pair<int, int>> chi_keys[] = {
        {"chi_AB", {0, 1}}, {"chi_AS", {0, 2}}, {"chi_BS", {1, 2}}};
    for (const auto& [key, ij] : chi_keys) {
        double v = m.chi(ij.first, ij.second);
        rd.get("model", key, v);
        m.chi(ij.first, ij.second) = m.chi(ij.second, ij.first) = v;
    }
    rd.get("model", "eps", m.eps);
    rd.get("model", "gamma", m.gamma);
    rd.get("model", "sigma", m.sigma);
    rd.get("model", "eq_C", m.eq_C);
    if (auto v = rd.raw("model", "M")) {
        const auto xs = rd.list("model", "M", *v, 9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m.M(i, j) = xs[3 * i + j];
    }
    if (auto v = rd.raw("model", "potential")) {
        const std::string l = lower(*v);
        if (l == "reglog") m.potential = PotentialKind::RegularizedLog;
        else if (l == "none") m.potential = PotentialKind::None;
        else rd.fail("model", "potential", "expected reglog or none, got '" + *v + "'");
    }

    // [initial]
    InitialCondition& ic = c.spec.initial;
    if (auto v = rd.raw("initial", "kind")) {
        try {
            ic.kind = parse_initial_kind(*v);
        } catch (const std::invalid_argument& e) {
            rd.fail("initial", "kind", e.what());
        }
    }
    rd.get_array("initial", "base", ic.base);
    rd.get_array("initial", "amp", ic.amp);
    rd.get("initial", "relax_from", ic.relax_from);
    rd.get("initial", "relax_T", ic.relax_T);

    // [coupling]
    if (auto v = rd.raw("coupling", "kind")) {
        const std::string l = lower(*v);
        if (l == "none") c.spec.coupling = std::monostate{};
        else if (l == "electric" && !std::holds_alternative<ElectricSpec>(c.spec.coupling)) c.spec.coupling = ElectricSpec{};
        else if (l == "magnetic" && !std::holds_alternative<MagneticParams>(c.spec.coupling)) c.spec.coupling = MagneticParams{};
        else if (l != "electric" && l != "magnetic")
            rd.fail("coupling", "kind", "expected none, electric or magnetic, got '" + *v + "'");
    }
    const auto forbid = [&](std::initializer_list<const char*> keys, const char* kind) {
        for (const char* k : keys)
            if (rd.raw("coupling", k)) rd.fail("coupling", k, std::string("not valid for coupling kind ") + kind);
    };
    if (auto* e = std::get_if<ElectricSpec>(&c.spec.coupling)) {
        forbid({"gamma_m", "B0"}, "electric");
        rd.get("coupling", "eps0", e->eps0);
        rd.get("coupling", "eps1", e->eps1);
        rd.get_array("coupling", "E0", e->E0);
        rd.get("coupling", "hysteresis", e->hysteresis);
        if (!(e->eps0 > 0.0)) rd.fail("coupling", "eps0", "must be > 0");
    } else if (auto* mg = std::get_if<MagneticParams>(&c.spec.coupling)) {
        forbid({"eps0", "eps1", "E0", "hysteresis"}, "magnetic");
        rd.get("coupling", "gamma_m", mg->gamma_m);
        rd.get_array("coupling", "B0", mg->B0);
    } else {
        forbid({"eps0", "eps1", "E0", "hysteresis", "gamma_m", "B0"}, "none");
    }

    // [grid], [time], [solver], [output]
    rd.get("grid", "Nx", c.nx);
    rd.get("grid", "Ny", c.ny);
    rd.get("grid", "Lx", c.lx);
    rd.get("grid", "Ly", c.ly);
    rd.get("time", "dt", c.dt);
    rd.get("time", "T", c.T);
    if (auto v = rd.raw("time", "snapshots")) c.snapshot_times = rd.list("time", "snapshots", *v, 0);
    if (auto v = rd.raw("solver", "dissipation")) {
        const std::string l = lower(*v);
        if (l == "predicted") c.dissipation_point = DissipationPoint::Predicted;
        else if (l == "final") c.dissipation_point = DissipationPoint::Final;
        else rd.fail("solver", "dissipation", "expected predicted or final, got '" + *v + "'");
    }
    rd.get("solver", "refresh_potential", c.refresh_potential_in_newton);
    rd.get("output", "dir", c.out_dir);

    // validation
    if (c.nx < 4) rd.fail("grid", "Nx", "must be >= 4");
    if (c.ny < 4) rd.fail("grid", "Ny", "must be >= 4");
    if (!(c.lx > 0.0)) rd.fail("grid", "Lx", "must be > 0");
    if (!(c.ly > 0.0)) rd.fail("grid", "Ly", "must be > 0");
    if (!(c.dt > 0.0)) rd.fail("time", "dt", "must be > 0");
    if (!(c.T >= 0.0)) rd.fail("time", "T", "must be >= 0");
    try {
        step_count(c.T, c.dt);
    } catch (const std::invalid_argument& e) {
        rd.fail("time", "T", e.what());
    }
    for (double s : c.snapshot_times)
        if (s < 0.0) rd.fail("time", "snapshots", "snapshot times must be >= 0");
    {
        const double a = ic.base[0], b = ic.base[1], s = 1.0 - a - b;
        if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0 && s > 0.0 && s < 1.0))
            rd.fail("initial", "base", "mean volume fractions (" + fmt17(a) + ", " + fmt17(b) + ", " + fmt17(s) +
                                           ") are off the simplex interior");
    }
    if (ic.kind == InitialCondition::Kind::Relaxed) {
        if (ic.relax_from.empty() || ic.relax_from == c.experiment)
            rd.fail("initial", "relax_from", "must name a different built-in experiment");
        try {
            find_experiment(ic.relax_from);
        } catch (const std::invalid_argument& e) {
            rd.fail("initial", "relax_from", e.what());
        }
        if (!(ic.relax_T >= 0.0)) rd.fail("initial", "relax_T", "must be >= 0");
    }
    {
        const double sym = (m.M - m.M.transpose()).cwiseAbs().maxCoeff();
        if (sym > 1e-12 * std::max(1.0, m.M.cwiseAbs().maxCoeff())) rd.fail("model", "M", "mobility matrix M is not symmetric");
        Eigen::SelfAdjointEigenSolver<Mat3> es(m.M);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, m.M.cwiseAbs().maxCoeff()))
            rd.fail("model", "M",
                    "mobility matrix M is not positive semidefinite (smallest eigenvalue " +
                        fmt17(es.eigenvalues().minCoeff()) + ")");
    }
    try {
        ModelInputs probe = m;
        probe.phibar = {ic.base[0], ic.base[1], 1.0 - ic.base[0] - ic.base[1]};
        ModelParams::make(probe);
    } catch (const std::invalid_argument& e) {
        rd.fail("model", "", e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "config: cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream o;
    const ModelInputs& m = c.spec.model;
    const InitialCondition& ic = c.spec.initial;
    o << "experiment = " << c.experiment << "\n";
    o << "scheme = " << lower(to_string(c.scheme)) << "\n";
    o << "seed = " << c.seed << "\n\n";
    o << "[model]\n";
    o << "N = " << join(m.N.data(), 3) << "\n";
    o << "chi_AB = " << fmt17(m.chi(0, 1)) << "\nchi_AS = " << fmt17(m.chi(0, 2)) << "\nchi_BS = " << fmt17(m.chi(1, 2))
      << "\n";
    o << "eps = " << fmt17(m.eps) << "\ngamma = " << fmt17(m.gamma) << "\nsigma = " << fmt17(m.sigma)
      << "\neq_C = " << fmt17(m.eq_C) << "\n";
    double Mrow[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Mrow[3 * i + j] = m.M(i, j);
    o << "M = " << join(Mrow, 9) << "\n";
    o << "potential = " << (m.potential == PotentialKind::None ? "none" : "reglog") << "\n\n";
    o << "[initial]\n";
    o << "kind = " << to_string(ic.kind) << "\nbase = " << join(ic.base.data(), 2)
      << "\namp = " << join(ic.amp.data(), 2) << "\n";
    if (!ic.relax_from.empty()) o << "relax_from = " << ic.relax_from << "\n";
    o << "relax_T = " << fmt17(ic.relax_T) << "\n\n";
    o << "[coupling]\n";
    if (const auto* e = std::get_if<ElectricSpec>(&c.spec.coupling)) {
        o << "kind = electric\neps0 = " << fmt17(e->eps0) << "\neps1 = " << fmt17(e->eps1)
          << "\nE0 = " << join(e->E0.data(), 2) << "\nhysteresis = " << (e->hysteresis ? "true" : "false") << "\n";
    } else if (const auto* mg = std::get_if<MagneticParams>(&c.spec.coupling)) {
        o << "kind = magnetic\ngamma_m = " << fmt17(mg->gamma_m) << "\nB0 = " << join(mg->B0.data(), 2) << "\n";
    } else {
        o << "kind = none\n";
    }
    o << "\n[grid]\nNx = " << c.nx << "\nNy = " << c.ny << "\nLx = " << fmt17(c.lx) << "\nLy = " << fmt17(c.ly) << "\n";
    o << "\n[time]\ndt = " << fmt17(c.dt) << "\nT = " << fmt17(c.T) << "\nsnapshots = "
      << join(c.snapshot_times.data(), c.snapshot_times.size()) << "\n";
    o << "\n[solver]\ndissipation = " << (c.dissipation_point == DissipationPoint::Final ? "final" : "predicted")
      << "\nrefresh_potential = " << (c.refresh_potential_in_newton ? "true" : "false") << "\n";
    o << "\n[output]\ndir = " << c.out_dir << "\n";
    return o.str();
}

// ---- energy log ----

std::string energy_log_row(const StepRecord& r) {
    std::ostringstream o;
    o << std::setprecision(17) << r.t << ',' << r.energy << ',' << r.predicted_energy << ',' << r.dissipation << ','
      << r.alpha << ',' << r.beta << ',' << r.newton_iters << ',' << r.krylov_iters << ',' << r.means[0] << ','
      << r.means[1] << ',' << r.means[2];
    return o.str();
}

namespace {
std::string log_header() {
    std::string h;
    for (std::size_t k = 0; k < kEnergyLogColumns.size(); ++k) h += (k ? "," : "") + std::string(kEnergyLogColumns[k]);
    return h;
}
} // namespace

EnergyLogWriter::EnergyLogWriter(const std::filesystem::path& path)
    : path_(path), out_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
    if (!*out_) throw std::runtime_error("cannot open energy log '" + path.string() + "'");
    *out_ << log_header() << '\n';
    out_->flush();
}

EnergyLogWriter::~EnergyLogWriter() = default;

void EnergyLogWriter::write(const StepRecord& r) {
    *out_ << energy_log_row(r) << '\n';
    out_->flush();
    if (!*out_) throw std::runtime_error("write failed on energy log '" + path_.string() + "'");
}

void write_energy_log(const std::vector<StepRecord>& records, const std::filesystem::path& path) {
    EnergyLogWriter w(path);
    for (const auto& r : records) w.write(r);
}

std::vector<StepRecord> read_energy_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open energy log '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != log_header())
        throw std::runtime_error("energy log '" + path.string() + "' has an unexpected header");
    std::vector<StepRecord> out;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        std::string item;
        std::istringstream ls(line);
        while (std::getline(ls, item, ',')) cols.push_back(item);
        if (cols.size() != kEnergyLogColumns.size())
            throw std::runtime_error("energy log '" + path.string() + "' line " + std::to_string(n) +
                                     ": wrong column count");
        StepRecord r;
        try {
            r.t = std::stod(cols[0]);
            r.energy = std::stod(cols[1]);
            r.predicted_energy = std::stod(cols[2]);
            r.dissipation = std::stod(cols[3]);
            r.alpha = std::stod(cols[4]);
            r.beta = std::stod(cols[5]);
            r.newton_iters = std::stoi(cols[6]);
            r.krylov_iters = std::stoi(cols[7]);
            for (int i = 0; i < 3; ++i) r.means[i] = std::stod(cols[8 + i]);
        } catch (const std::exception&) {
            throw std::runtime_error("energy log '" + path.string() + "' line " + std::to_string(n) +
                                     ": unparsable value");
        }
        out.push_back(r);
    }
    return out;
}

// ---- snapshots ----

std::size_t snapshot_bytes(int nx, int ny, int field_count) {
    return kSnapshotHeaderBytes + static_cast<std::size_t>(field_count) * kSnapshotNameBytes +
           static_cast<std::size_t>(field_count) * nx * ny * sizeof(double);
}

void write_snapshot(const PhaseState& state, double t, const std::filesystem::path& path) {
    const Grid2D& g = state.grid();
    std::vector<std::pair<std::string, const ScalarField*>> fields{
        {"phi_A", &state.phi[0]}, {"phi_B", &state.phi[1]}, {"phi_S", &state.phi[2]}};
    if (state.Phi) fields.emplace_back("Phi", &*state.Phi);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open snapshot '" + path.string() + "' for writing");
    out.write(kSnapshotMagic, sizeof kSnapshotMagic);
    put<std::uint32_t>(out, kSnapshotVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(fields.size()));
    put<double>(out, g.hx());
    put<double>(out, g.hy());
    put<double>(out, t);
    for (const auto& [name, f] : fields) {
        (void)f;
        char buf[kSnapshotNameBytes] = {};
        std::memcpy(buf, name.data(), std::min(name.size(), kSnapshotNameBytes));
        out.write(buf, sizeof buf);
    }
    for (const auto& [name, f] : fields) {
        (void)name;
        for (double v : f->values()) put<double>(out, v);
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed on snapshot '" + path.string() + "'");
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot '" + path.string() + "'");
    const auto bad = [&](const std::string& why) {
        return std::runtime_error("snapshot '" + path.string() + "': " + why);
    };
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) throw bad("bad magic");
    const auto version = take<std::uint32_t>(in);
    if (version != kSnapshotVersion) throw bad("unsupported version " + std::to_string(version));
    const auto nx = take<std::uint32_t>(in), ny = take<std::uint32_t>(in), count = take<std::uint32_t>(in);
    const double hx = take<double>(in), hy = take<double>(in), t = take<double>(in);
    if (!in) throw bad("truncated header");
    if (nx < 1 || ny < 1 || (count != 3 && count != 4)) throw bad("inconsistent header");
    std::vector<std::string> names(count);
    for (auto& n : names) {
        char buf[kSnapshotNameBytes];
        in.read(buf, sizeof buf);
        n.assign(buf, strnlen(buf, sizeof buf));
    }
    if (names[0] != "phi_A" || names[1] != "phi_B" || names[2] != "phi_S" || (count == 4 && names[3] != "Phi"))
        throw bad("unexpected field names");
    const Grid2D g(static_cast<int>(nx), static_cast<int>(ny), nx * hx, ny * hy);
    std::vector<ScalarField> fields;
    for (std::uint32_t f = 0; f < count; ++f) {
        std::vector<double> v(static_cast<std::size_t>(nx) * ny);
        for (double& x : v) x = take<double>(in);
        if (!in) throw bad("truncated field block");
        fields.emplace_back(g, std::move(v));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw bad("trailing bytes");
    Snapshot s{PhaseState{FieldTriple{fields[0], fields[1], fields[2]}, std::nullopt, std::nullopt}, t};
    if (count == 4) s.state.Phi = fields[3];
    return s;
}

// ---- refinement report ----

std::string refinement_report_json(const RefinementReport& r) {
    nlohmann::json j;
    j["axis"] = to_string(r.axis);
    j["scheme"] = lower(to_string(r.scheme));
    j["experiment"] = r.experiment;
    j["complete"] = r.complete;
    j["error"] = r.error;
    j["fitted_order"] = num(r.fitted_order);
    j["alpha_order"] = num(r.alpha_order);
    j["observed_orders"] = nlohmann::json::array();
    for (double o : r.observed_orders) j["observed_orders"].push_back(num(o));
    j["levels"] = nlohmann::json::array();
    for (const auto& l : r.levels)
        j["levels"].push_back({{"step", l.step},
                               {"n", l.n},
                               {"dt", l.dt},
                               {"max_abs_alpha", num(l.max_abs_alpha)},
                               {"max_abs_beta", num(l.max_abs_beta)},
                               {"error_A", num(l.error[0])},
                               {"error_B", num(l.error[1])},
                               {"error_S", num(l.error[2])},
                               {"error_total", num(l.error_total)}});
    return j.dump(2);
}

void write_refinement_report(const RefinementReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open refinement report '" + path.string() + "'");
    out << refinement_report_json(r) << '\n';
    if (!out) throw std::runtime_error("write failed on refinement report '" + path.string() + "'");
}

std::string format_refinement_table(const RefinementReport& r) {
    std::ostringstream o;
    o << "refinement: experiment=" << r.experiment << " scheme=" << to_string(r.scheme) << " axis=" << to_string(r.axis)
      << "\n";
    o << std::setw(6) << "level" << std::setw(14) << (r.axis == RefinementAxis::Time ? "dt" : "h") << std::setw(8)
      << "n" << std::setw(14) << "error" << std::setw(10) << "order" << std::setw(14) << "max|alpha|" << "\n";
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
        const auto& l = r.levels[k];
        o << std::setw(6) << k << std::setw(14) << std::setprecision(6) << l.step << std::setw(8) << l.n
          << std::setw(14) << l.error_total << std::setw(10) << std::setprecision(4)
          << (k >= 1 && k - 1 < r.observed_orders.size() ? r.observed_orders[k - 1]
                                                         : std::numeric_limits<double>::quiet_NaN())
          << std::setw(14) << std::setprecision(6) << l.max_abs_alpha << "\n";
    }
    o << "fitted order: " << std::setprecision(4) << r.fitted_order << "   alpha order: " << r.alpha_order << "\n";
    if (!r.complete) o << "INCOMPLETE: " << r.error << "\n";
    return o.str();
}

} // namespace copoly
