#include "nudgeq/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nudgeq/errors.hpp"
#include "nudgeq/fcfs_analysis.hpp"
#include "nudgeq/format.hpp"

namespace nudgeq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> ThresholdSpec::values() const
{
    std::vector<double> out;
    if (count == 1) return {min};
    for (std::size_t k = 0; k < count; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(count - 1);
        out.push_back(log ? min * std::pow(max / min, f) : min + (max - min) * f);
    }
    return out;
}

double ExperimentConfig::resolved_lambda() const { return lambda ? *lambda : *rho / dist.mean(); }

sim::SimConfig ExperimentConfig::sim_config(const sim::Policy& policy) const
{
    sim::SimConfig s;
    s.lambda = resolved_lambda();
    s.dist = dist;
    s.policy = policy;
    s.n_arrivals = n_arrivals;
    s.warmup = warmup;
    s.seed = seed;
    s.replications = replications;
    return s;
}

namespace {

double number_or_inf(const json& v, const char* what)
{
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "inf") return INFINITY;
    throw ConfigError(std::string(what) + " must be a number or \"inf\"");
}

json number_to_json(double v)
{
    if (std::isinf(v)) return "inf";
    return v;
}

template <class T>
T get_as(const json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad or missing value for \"") + key + "\"");
    }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const char* where)
{
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* allowed : keys) known = known || k == allowed;
        if (!known) throw ConfigError(std::string("unknown key \"") + k + "\" in " + where);
    }
}

sim::Policy parse_policy(const json& j, const NudgeParams& p)
{
    std::string name;
    if (j.is_string()) {
        name = j.get<std::string>();
    } else {
        only_keys(j, {"policy", "k", "p"}, "policy");
        name = get_as<std::string>(j, "policy");
    }
    if (name == "fcfs") return sim::Policy::fcfs();
    if (name == "nudge") return sim::Policy::nudge(p);
    if (name == "nudge_budget") return sim::Policy::nudge_budget(p, j.is_object() && j.contains("k") ? get_as<int>(j, "k") : 1);
    if (name == "nudge_prob") return sim::Policy::nudge_prob(p, j.is_object() && j.contains("p") ? get_as<double>(j, "p") : 1.0);
    throw ConfigError("unknown policy \"" + name + "\"");
}

json policy_json(const sim::Policy& p)
{
    switch (p.kind) {
    case sim::PolicyKind::fcfs: return "fcfs";
    case sim::PolicyKind::nudge: return "nudge";
    case sim::PolicyKind::nudge_budget: return {{"policy", "nudge_budget"}, {"k", p.budget}};
    case sim::PolicyKind::nudge_prob: return {{"policy", "nudge_prob"}, {"p", p.prob}};
    }
    return "fcfs";
}

} // namespace

ExperimentConfig parse_config(const json& j)
{
    only_keys(j,
              {"distribution", "lambda", "rho", "params", "policies", "n_arrivals", "seed", "replications", "warmup",
               "thresholds", "out_dir"},
              "config");
    ExperimentConfig c;
    if (!j.contains("distribution")) throw ConfigError("config needs a \"distribution\"");
    try {
        c.dist = JobSizeDistribution::from_json(j.at("distribution"));
    } catch (const DistributionError& e) {
        throw ConfigError(std::string("distribution: ") + e.what());
    }
    if (j.contains("lambda") == j.contains("rho")) throw ConfigError("give exactly one of \"lambda\" and \"rho\"");
    if (j.contains("lambda")) c.lambda = get_as<double>(j, "lambda");
    if (j.contains("rho")) c.rho = get_as<double>(j, "rho");
    const double lam = c.resolved_lambda();
    if (!(lam > 0.0)) throw ConfigError("arrival rate must be positive");
    if (!(lam * c.dist.mean() < 1.0)) {
        throw StabilityError("unstable configuration: rho = " + format_double(lam * c.dist.mean()) + " >= 1");
    }

    const double m = c.dist.mean();
    c.params = {m, m, INFINITY};
    if (j.contains("params")) {
        const json& p = j.at("params");
        only_keys(p, {"x1", "x2", "x3"}, "params");
        if (p.contains("x1")) c.params.x1 = number_or_inf(p.at("x1"), "x1");
        if (p.contains("x2")) c.params.x2 = number_or_inf(p.at("x2"), "x2");
        if (p.contains("x3")) c.params.x3 = number_or_inf(p.at("x3"), "x3");
    }
    try {
        c.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("params: ") + e.what());
    }

    c.policies = {sim::Policy::fcfs(), sim::Policy::nudge(c.params)};
    if (j.contains("policies")) {
        if (!j.at("policies").is_array() || j.at("policies").empty()) {
            throw ConfigError("\"policies\" must be a nonempty array");
        }
        c.policies.clear();
        for (const auto& p : j.at("policies")) c.policies.push_back(parse_policy(p, c.params));
    }
    for (const auto& p : c.policies) p.validate();

    if (j.contains("n_arrivals")) c.n_arrivals = get_as<std::uint64_t>(j, "n_arrivals");
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
    if (j.contains("replications")) c.replications = get_as<std::uint32_t>(j, "replications");
    if (j.contains("warmup")) c.warmup = get_as<std::uint64_t>(j, "warmup");
    if (j.contains("out_dir")) c.out_dir = get_as<std::string>(j, "out_dir");
    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        only_keys(t, {"min", "max", "count", "spacing"}, "thresholds");
        ThresholdSpec ts;
        ts.min = get_as<double>(t, "min");
        ts.max = get_as<double>(t, "max");
        ts.count = get_as<std::size_t>(t, "count");
        const std::string spacing = t.contains("spacing") ? get_as<std::string>(t, "spacing") : "log";
        if (spacing != "log" && spacing != "linear") throw ConfigError("spacing must be \"log\" or \"linear\"");
        ts.log = spacing == "log";
        if (ts.count < 1 || !(ts.min >= 0.0) || (ts.count > 1 && !(ts.max > ts.min)) || (ts.log && !(ts.min > 0.0))) {
            throw ConfigError("thresholds must be strictly increasing (min < max, count >= 1, min > 0 for log)");
        }
        c.thresholds = ts;
    }
    if (c.n_arrivals < 1 || c.replications < 1) throw ConfigError("n_arrivals and replications must be positive");
    if (c.warmup && *c.warmup >= c.n_arrivals) throw ConfigError("warmup must be below n_arrivals");
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c)
{
    json j;
    j["distribution"] = c.dist.spec();
    if (c.lambda) j["lambda"] = *c.lambda;
    if (c.rho) j["rho"] = *c.rho;
    j["params"] = {{"x1", number_to_json(c.params.x1)}, {"x2", number_to_json(c.params.x2)},
                   {"x3", number_to_json(c.params.x3)}};
    j["policies"] = json::array();
    for (const auto& p : c.policies) j["policies"].push_back(policy_json(p));
    j["n_arrivals"] = c.n_arrivals;
    j["seed"] = c.seed;
    j["replications"] = c.replications;
    if (c.warmup) j["warmup"] = *c.warmup;
    if (c.thresholds) {
        j["thresholds"] = {{"min", c.thresholds->min},
                           {"max", c.thresholds->max},
                           {"count", c.thresholds->count},
                           {"spacing", c.thresholds->log ? "log" : "linear"}};
    }
    j["out_dir"] = c.out_dir;
    return j;
}

void Overrides::apply(ExperimentConfig& c) const
{
    if (seed) c.seed = *seed;
    if (arrivals) c.n_arrivals = *arrivals;
    if (replications) c.replications = *replications;
    if (out_dir) c.out_dir = *out_dir;
    if (c.n_arrivals < 1 || c.replications < 1) throw ConfigError("arrivals and replications must be positive");
    if (c.warmup && *c.warmup >= c.n_arrivals) throw ConfigError("warmup must be below n_arrivals");
}

int cmd_check(const ExperimentConfig& c, std::ostream& out, std::ostream& err)
{
    try {
        const double lam = c.resolved_lambda();
        const auto profile = fcfs_tail_profile(lam, c.dist);
        const auto report = check_regime(c.params, profile, c.dist, lam);
        out << "distribution=" << c.dist.label() << '\n'
            << "lambda=" << format_double(lam) << '\n'
            << "rho=" << format_double(lam * c.dist.mean()) << '\n'
            << "x1=" << format_double(c.params.x1) << '\n'
            << "x2=" << format_double(c.params.x2) << '\n'
            << "x3=" << format_double(c.params.x3) << '\n'
            << to_key_value(report);
        return report.asym_condition ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

std::vector<std::size_t> resolve_thresholds(const ExperimentConfig& c, const sim::TailCounter& reference)
{
    if (c.thresholds) return sim::snap_thresholds(reference.grid(), c.thresholds->values());
    return sim::log_thresholds(reference, c.dist.mean(), 200, 1e-5);
}

namespace {

// Files written by one command; removed unless committed.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
    }
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet()
    {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

    template <class F>
    void write(const std::string& name, F&& body)
    {
        const fs::path p = dir_ / name;
        written_.push_back(p);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + p.string());
    }

    void commit() { committed_ = true; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

// Quotes a text field that holds a comma or quote.
std::string csv_field(const std::string& v)
{
    if (v.find_first_of(",\"") == std::string::npos) return v;
    std::string out = "\"";
    for (char ch : v) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

json manifest(const ExperimentConfig& c)
{
    json m;
    m["tool"] = "nudgeq";
    m["version"] = kToolVersion;
    m["config"] = to_json(c);
    m["lambda"] = c.resolved_lambda();
    m["warmup"] = c.sim_config(sim::Policy::fcfs()).resolved_warmup();
    return m;
}

} // namespace

void cmd_run(const ExperimentConfig& c, std::ostream& log)
{
    std::vector<sim::Policy> nudges;
    bool fcfs = false;
    for (const auto& p : c.policies) {
        if (p.nudge_family()) {
            nudges.push_back(p);
        } else {
            fcfs = true;
        }
    }
    // simulate everything before touching the output directory
    std::vector<sim::CoupledOutcome> coupled;
    for (const auto& p : nudges) {
        log << "simulating " << p.label() << " (coupled with fcfs), " << c.n_arrivals << " arrivals x "
            << c.replications << '\n';
        coupled.push_back(sim::coupled_run(c.sim_config(p)));
    }
    std::optional<sim::SimulationOutcome> alone;
    if (fcfs && nudges.empty()) {
        log << "simulating fcfs, " << c.n_arrivals << " arrivals x " << c.replications << '\n';
        alone = sim::run(c.sim_config(sim::Policy::fcfs()));
    }

    OutputSet out(c.out_dir);
    json m = manifest(c);
    m["outputs"] = json::array();
    std::ostringstream summary;
    if (alone) {
        const auto idx = resolve_thresholds(c, alone->tails);
        out.write("tail.csv", [&](std::ostream& os) { sim::write_tail_csv(alone->tails, idx, os); });
        m["outputs"].push_back({{"file", "tail.csv"}, {"policy", "fcfs"}});
        summary << sim::summary_text(*alone);
    }
    for (std::size_t k = 0; k < coupled.size(); ++k) {
        const auto& o = coupled[k];
        const std::string name = coupled.size() == 1 ? "tir.csv" : "tir_" + std::to_string(k + 1) + ".csv";
        const auto idx = resolve_thresholds(c, o.fcfs.tails);
        const auto curve = sim::tir_paired(o.fcfs.tails, o.nudge.tails, o.events, idx);
        out.write(name, [&](std::ostream& os) { sim::write_tir_csv(curve, os); });
        m["outputs"].push_back({{"file", name}, {"policy", o.policy.label()}});
        if (k > 0) summary << '\n';
        summary << sim::summary_text(o);
    }
    out.write("summary.txt", [&](std::ostream& os) { os << summary.str(); });
    out.write("manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
    out.commit();
    log << "wrote " << out.dir().string() << '\n';
}

std::vector<FigureSeries> figure_series(const std::string& name)
{
    using D = JobSizeDistribution;
    const double inf = INFINITY;
    const auto hyper = D::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0});
    if (name == "fig2") {
        const NudgeParams p{1, 1, inf};
        return {{"uniform", "all", D::uniform(0.0, 2.0), 0.8, p},
                {"exponential", "all", D::exponential(1.0), 0.8, p},
                {"hyperexponential", "all", hyper, 0.8, p},
                {"bounded_lomax", "all", D::bounded_lomax(2.0, 4.0, 2.0), 0.8, p}};
    }
    if (name == "fig3") {
        return {{"x1_1_x2_1_x3_inf", "params", hyper, 0.8, {1, 1, inf}},
                {"x1_1_x2_2_x3_inf", "params", hyper, 0.8, {1, 2, inf}},
                {"x1_0.5_x2_0.5_x3_inf", "params", hyper, 0.8, {0.5, 0.5, inf}},
                {"x1_1_x2_2_x3_4", "params", hyper, 0.8, {1, 2, 4}},
                {"x1_0.5_x2_1_x3_4", "params", hyper, 0.8, {0.5, 1, 4}}};
    }
    if (name == "fig4") {
        const NudgeParams hi{1, 1, inf}, lo{0.2, 0.2, inf};
        return {{"mixed_uniform", "high_variance", D::mixed_uniform({0.9, 0.1}, {0.0, 0.0}, {1.0, 11.0}), 0.4, hi},
                {"hyperexponential", "high_variance", hyper, 0.4, hi},
                {"chi_squared", "high_variance", D::chi_squared(1.0), 0.4, hi},
                {"inverse_gaussian", "high_variance", D::inverse_gaussian(1.0, 0.5), 0.4, hi},
                {"triangle", "low_variance", D::triangle(0.0, 0.0, 3.0), 0.4, lo},
                {"uniform", "low_variance", D::uniform(0.0, 2.0), 0.4, lo},
                {"erlang", "low_variance", D::erlang(3, 3.0), 0.4, lo},
                {"beta", "low_variance", D::scaled_beta(2.0, 2.0, 2.0), 0.4, lo}};
    }
    throw ConfigError("unknown figure \"" + name + "\" (expected fig2, fig3 or fig4)");
}

void cmd_figure(const std::string& name, const Overrides& o, std::ostream& log)
{
    const auto series = figure_series(name);
    ExperimentConfig base;
    base.out_dir = name;
    o.apply(base);

    std::vector<sim::TirCurve> curves;
    std::vector<double> asym;
    for (const auto& s : series) {
        ExperimentConfig c = base;
        c.dist = s.dist;
        c.rho = s.rho;
        c.params = s.params;
        c.policies = {sim::Policy::nudge(s.params)};
        log << name << ": " << s.id << " (" << s.dist.label() << ")\n";
        const auto out = sim::coupled_run(c.sim_config(c.policies.front()));
        curves.push_back(sim::tir_paired(out.fcfs.tails, out.nudge.tails, out.events,
                                         resolve_thresholds(c, out.fcfs.tails)));
        const double lam = c.resolved_lambda();
        double a = std::numeric_limits<double>::quiet_NaN();
        try {
            a = asym_tir(s.params, s.dist, lam, theta_star(lam, s.dist));
        } catch (const std::exception&) {
            // no exponential tail: leave NA
        }
        asym.push_back(a);
    }

    OutputSet out(base.out_dir);
    out.write("index.csv", [&](std::ostream& os) {
        os << "series,group,distribution,rho,x1,x2,x3,asym_tir,file\n";
        for (std::size_t k = 0; k < series.size(); ++k) {
            const auto& s = series[k];
            os << s.id << ',' << s.group << ',' << csv_field(s.dist.label()) << ',' << format_double(s.rho) << ','
               << format_double(s.params.x1) << ',' << format_double(s.params.x2) << ','
               << format_double(s.params.x3) << ',' << format_double(asym[k]) << ',' << name << '_' << s.id
               << ".csv\n";
        }
    });
    for (std::size_t k = 0; k < series.size(); ++k) {
        out.write(name + "_" + series[k].id + ".csv", [&](std::ostream& os) { sim::write_tir_csv(curves[k], os); });
    }
    json m;
    m["tool"] = "nudgeq";
    m["version"] = kToolVersion;
    m["figure"] = name;
    m["n_arrivals"] = base.n_arrivals;
    m["seed"] = base.seed;
    m["replications"] = base.replications;
    out.write("manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
    out.commit();
    log << "wrote " << out.dir().string() << '\n';
}

std::vector<Table1Row> table1_rows()
{
    using D = JobSizeDistribution;
    const std::vector<bool> two{true, true, false, false, false};
    return {{"exponential", D::exponential(1.0), {0.5, 1, 2, 4, 8}, two},
            {"hyperexponential", D::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0}), {0.5, 1, 2, 4, 8},
             {true, true, true, true, true}},
            {"bounded_lomax", D::bounded_lomax(2.0, 4.0, 2.0), {0.5, 1, 1.5, 2, 3}, two},
            {"uniform", D::uniform(0.0, 2.0), {0.1, 0.2, 0.5, 0.75, 1}, two},
            {"beta", D::scaled_beta(2.0, 2.0, 2.0), {0.1, 0.2, 0.3, 0.4, 0.5}, two}};
}

bool stochastic_verdict(const sim::TirCurve& c)
{
    std::optional<std::size_t> last;
    for (std::size_t k = 0; k < c.tir.size(); ++k) {
        if (!c.defined[k] || c.n_tail_a[k] < sim::kLowConfidenceCount || c.n_tail_b[k] < sim::kLowConfidenceCount) {
            continue;
        }
        if (c.ci_high[k] < 0.0) return false;
        last = k;
    }
    return last && c.tir[*last] > 0.0;
}

Table1Cell table1_cell(const Table1Row& row, std::size_t k, std::uint64_t n_arrivals, std::uint64_t seed,
                       std::uint32_t replications, kernels::ExecutionMode mode)
{
    const double lam = 0.4 / row.dist.mean();
    const NudgeParams p{row.x1[k], row.x1[k], INFINITY};
    Table1Cell cell;
    cell.distribution = row.name;
    cell.x1 = p.x1;
    cell.asym_tir = asym_tir(p, row.dist, lam, theta_star(lam, row.dist));
    cell.analytic_improves = cell.asym_tir > 0.0;

    ExperimentConfig c;
    c.dist = row.dist;
    c.rho = 0.4;
    c.params = p;
    c.n_arrivals = n_arrivals;
    c.seed = seed;
    c.replications = replications;
    const auto out = sim::coupled_run(c.sim_config(sim::Policy::nudge(p)), mode);
    const auto curve =
        sim::tir_paired(out.fcfs.tails, out.nudge.tails, out.events, resolve_thresholds(c, out.fcfs.tails));
    cell.simulated_improves = stochastic_verdict(curve);
    for (std::size_t j = 0; j < curve.tir.size(); ++j) {
        if (!curve.defined[j] || curve.n_tail_a[j] < sim::kLowConfidenceCount ||
            curve.n_tail_b[j] < sim::kLowConfidenceCount) {
            continue;
        }
        ++cell.n_thresholds;
        cell.tir_largest = curve.tir[j];
        cell.ci_low_largest = curve.ci_low[j];
        cell.ci_high_largest = curve.ci_high[j];
    }
    return cell;
}

void cmd_table1(const Overrides& o, std::ostream& log)
{
    ExperimentConfig base;
    base.out_dir = "table1";
    o.apply(base);
    std::vector<Table1Cell> cells;
    for (const auto& row : table1_rows()) {
        for (std::size_t k = 0; k < row.x1.size(); ++k) {
            log << "table1: " << row.name << " x1=" << format_double(row.x1[k]) << '\n';
            cells.push_back(table1_cell(row, k, base.n_arrivals, base.seed, base.replications));
        }
    }
    OutputSet out(base.out_dir);
    out.write("table1.csv", [&](std::ostream& os) {
        os << "distribution,x1,asym_tir,analytic,simulated,agree,n_thresholds,tir_largest,ci_low_largest,"
              "ci_high_largest\n";
        for (const auto& c : cells) {
            os << c.distribution << ',' << format_double(c.x1) << ',' << format_double(c.asym_tir) << ','
               << (c.analytic_improves ? '+' : '-') << ',' << (c.simulated_improves ? '+' : '-') << ','
               << (c.agree() ? "yes" : "no") << ',' << c.n_thresholds << ',' << format_double(c.tir_largest) << ','
               << format_double(c.ci_low_largest) << ',' << format_double(c.ci_high_largest) << '\n';
        }
    });
    json m;
    m["tool"] = "nudgeq";
    m["version"] = kToolVersion;
    m["table"] = "table1";
    m["rho"] = 0.4;
    m["n_arrivals"] = base.n_arrivals;
    m["seed"] = base.seed;
    m["replications"] = base.replications;
    out.write("manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
    out.commit();
    log << "wrote " << out.dir().string() << '\n';
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == name) return k;
    }
    throw std::out_of_range("no CSV column " + name);
}

double CsvTable::number(std::size_t row, const std::string& name) const
{
    const std::string& v = rows.at(row).at(column(name));
    if (v == "NA") return std::numeric_limits<double>::quiet_NaN();
    if (v == "inf") return INFINITY;
    if (v == "-inf") return -INFINITY;
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("not a number: " + v);
    return d;
}

CsvTable read_csv(std::istream& in)
{
    auto split = [](const std::string& line) {
        std::vector<std::string> out(1);
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quoted) {
                if (ch != '"') {
                    out.back() += ch;
                } else if (i + 1 < line.size() && line[i + 1] == '"') {
                    out.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                out.emplace_back();
            } else {
                out.back() += ch;
            }
        }
        return out;
    };
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw std::invalid_argument("ragged CSV row: " + line);
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_csv(in);
}

} // namespace nudgeq::cli
