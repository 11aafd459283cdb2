#include "robustgen/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include "robustgen/errors.hpp"
#include "robustgen/prng.hpp"

namespace robustgen {

void ExperimentConfig::validate() const {
    if (epsilon_grid.empty()) throw InvalidConfigError("experiment: epsilon grid is empty");
    if (kind != ExperimentKind::dimension_sweep && lambda_grid.empty())
        throw InvalidConfigError("experiment: lambda grid is empty");
    if (runs < 1) throw InvalidConfigError("experiment: runs must be >= 1");
    if (n_train == 0) throw InvalidConfigError("experiment: n_train must be positive");
    if (kind == ExperimentKind::lambda_sweep_net && hidden.empty())
        throw InvalidConfigError("experiment: net sweep needs hidden layer widths");
    for (double e : epsilon_grid)
        if (e < 0.0) throw InvalidConfigError("experiment: epsilon must be >= 0");
    for (double l : lambda_grid)
        if (l < 0.0) throw InvalidConfigError("experiment: lambda must be >= 0");
}

namespace {

std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& origin, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(origin, line, "bad number '" + std::string(s) + "'");
    return v;
}

struct SampleStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample std (n-1); zero for a single value
};

SampleStats stats(const std::vector<double>& v) {
    SampleStats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double m2 = 0.0;
        for (double x : v) m2 += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(m2 / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

std::vector<CellAggregate> compute_aggregates(const std::vector<ExperimentRow>& rows) {
    std::map<std::pair<double, double>, std::vector<const ExperimentRow*>> cells;
    for (const auto& r : rows) cells[{r.epsilon, r.param}].push_back(&r);

    std::vector<CellAggregate> out;
    for (const auto& [key, cell_rows] : cells) {
        CellAggregate agg;
        agg.epsilon = key.first;
        agg.param = key.second;
        agg.runs = cell_rows.size();
        std::vector<double> col;
        col.reserve(cell_rows.size());
        const auto fill = [&](auto member, double& mean, double& stddev) {
            col.clear();
            for (const auto* r : cell_rows) col.push_back(r->*member);
            const SampleStats s = stats(col);
            mean = s.mean;
            stddev = s.stddev;
        };
        fill(&ExperimentRow::nat_train, agg.mean_nat_train, agg.std_nat_train);
        fill(&ExperimentRow::nat_test, agg.mean_nat_test, agg.std_nat_test);
        fill(&ExperimentRow::adv_train, agg.mean_adv_train, agg.std_adv_train);
        fill(&ExperimentRow::adv_test, agg.mean_adv_test, agg.std_adv_test);
        fill(&ExperimentRow::gap, agg.mean_gap, agg.std_gap);
        out.push_back(agg);
    }
    return out;
}

namespace {

struct CellData {
    double epsilon = 0.0;
    double param = 0.0;
    double lambda = 0.0;
    const Dataset* pool = nullptr;
    const Dataset* test = nullptr;
};

struct Job {
    std::size_t cell = 0;
    std::size_t run = 0;
};

Dataset build_pool(const ExperimentConfig& cfg) {
    if (cfg.data.synthetic) {
        const auto& s = cfg.data.synth;
        return synth_gaussian(s.d, s.num_classes, s.n_per_class, s.mean_scale, s.noise_sigma,
                              s.seed);
    }
    return load_idx(cfg.data.idx.train_images, cfg.data.idx.train_labels);
}

Dataset build_test(const ExperimentConfig& cfg) {
    if (cfg.data.synthetic) {
        const auto& s = cfg.data.synth;
        const std::size_t per_class = (cfg.n_test + s.num_classes - 1) / s.num_classes;
        return synth_gaussian(s.d, s.num_classes, per_class, s.mean_scale, s.noise_sigma,
                              derive_seed(s.seed, 0x7E57));
    }
    Dataset test = load_idx(cfg.data.idx.test_images, cfg.data.idx.test_labels);
    if (cfg.n_test > 0 && cfg.n_test < test.size())
        test = subsample(test, cfg.n_test, derive_seed(cfg.base_seed, 0x7E57));
    return test;
}

ExperimentRow run_linear_cell(const ExperimentConfig& cfg, const CellData& cell, std::size_t run,
                              std::uint64_t sub_seed, std::uint64_t train_seed) {
    const Dataset train_set = subsample(*cell.pool, cfg.n_train, sub_seed);
    TrainConfig tc = cfg.train;
    tc.epsilon = cell.epsilon;
    tc.lambda = cell.lambda;
    tc.seed = train_seed;
    const LinearModel model = train_linear(train_set, tc).model;

    const LinearMetrics on_train = eval_linear(model, train_set, cell.epsilon);
    const LinearMetrics on_test = eval_linear(model, *cell.test, cell.epsilon);
    ExperimentRow row{cell.epsilon, cell.param, run,
                      on_train.natural_error, on_test.natural_error,
                      on_train.adversarial_error, on_test.adversarial_error, 0.0};
    row.gap = row.adv_test - row.adv_train;
    return row;
}

ExperimentRow run_net_cell(const ExperimentConfig& cfg, const CellData& cell, std::size_t run,
                           std::uint64_t sub_seed, std::uint64_t train_seed) {
    const Dataset train_set = subsample(*cell.pool, cfg.n_train, sub_seed);
    TrainConfig tc = cfg.train;
    tc.epsilon = cell.epsilon;
    tc.lambda = cell.lambda;
    tc.seed = train_seed;
    AttackConfig attack;
    attack.epsilon = cell.epsilon;
    attack.steps = cfg.attack_steps;
    attack.step_size = cfg.attack_step_size;
    attack.restarts = cfg.attack_restarts;
    const MlpModel model = train_net(train_set, cfg.hidden, attack, cell.lambda, tc).model;

    const MlpMetrics on_train = eval_net(model, train_set, attack, 1.0);
    const MlpMetrics on_test = eval_net(model, *cell.test, attack, 1.0);
    ExperimentRow row{cell.epsilon, cell.param, run,
                      on_train.natural_error, on_test.natural_error,
                      on_train.adversarial_error, on_test.adversarial_error, 0.0};
    row.gap = row.adv_test - row.adv_train;
    return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    const Dataset pool = build_pool(cfg);
    const Dataset test = build_test(cfg);

    // The dimension sweep trains on the downsampled / original / upsampled
    // variants of the same pool at lambda = 0.
    std::vector<Dataset> variant_pools, variant_tests;
    std::vector<CellData> cells;
    if (cfg.kind == ExperimentKind::dimension_sweep) {
        const auto side = static_cast<std::size_t>(std::lround(std::sqrt(double(pool.d))));
        if (side * side != pool.d || side % 2 != 0)
            throw InvalidConfigError("dimension sweep needs square images with an even side");
        variant_pools.push_back(resample_resolution(pool, ResampleDirection::down, side));
        variant_tests.push_back(resample_resolution(test, ResampleDirection::down, side));
        variant_pools.push_back(pool);
        variant_tests.push_back(test);
        variant_pools.push_back(resample_resolution(pool, ResampleDirection::up, side));
        variant_tests.push_back(resample_resolution(test, ResampleDirection::up, side));
        for (double eps : cfg.epsilon_grid)
            for (std::size_t v = 0; v < 3; ++v)
                cells.push_back(CellData{eps, static_cast<double>(variant_pools[v].d), 0.0,
                                         &variant_pools[v], &variant_tests[v]});
    } else {
        for (double eps : cfg.epsilon_grid)
            for (double lambda : cfg.lambda_grid)
                cells.push_back(CellData{eps, lambda, lambda, &pool, &test});
    }

    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (std::size_t r = 0; r < cfg.runs; ++r) jobs.push_back(Job{c, r});

    ExperimentReport report;
    std::mutex report_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];
            const CellData& cell = cells[job.cell];
            // Seeds depend only on the (cell, run) coordinates, never on
            // scheduling, so concurrent execution stays reproducible.
            const std::uint64_t tag = job.cell * cfg.runs + job.run;
            const std::uint64_t sub_seed = derive_seed(cfg.base_seed, 2 * tag);
            const std::uint64_t train_seed = derive_seed(cfg.base_seed, 2 * tag + 1);
            try {
                const ExperimentRow row =
                    cfg.kind == ExperimentKind::lambda_sweep_net
                        ? run_net_cell(cfg, cell, job.run, sub_seed, train_seed)
                        : run_linear_cell(cfg, cell, job.run, sub_seed, train_seed);
                std::lock_guard<std::mutex> lock(report_mutex);
                report.rows.push_back(row);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(report_mutex);
                report.errors.push_back(CellError{cell.epsilon, cell.param, job.run, e.what()});
            }
        }
    };

    std::size_t n_workers = cfg.workers > 0 ? cfg.workers : std::thread::hardware_concurrency();
    n_workers = std::clamp<std::size_t>(n_workers, 1, std::min<std::size_t>(jobs.size(), 16));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    const auto row_key = [](const ExperimentRow& r) { return std::tie(r.epsilon, r.param, r.run); };
    std::sort(report.rows.begin(), report.rows.end(),
              [&](const ExperimentRow& a, const ExperimentRow& b) { return row_key(a) < row_key(b); });
    std::sort(report.errors.begin(), report.errors.end(), [](const CellError& a, const CellError& b) {
        return std::tie(a.epsilon, a.param, a.run) < std::tie(b.epsilon, b.param, b.run);
    });
    report.aggregates = compute_aggregates(report.rows);
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCsvHeader = "epsilon,param,run,nat_train,nat_test,adv_train,adv_test,gap";
}

std::string report_to_csv(const ExperimentReport& report) {
    std::string out(kCsvHeader);
    out.push_back('\n');
    for (const auto& r : report.rows) {
        out += fmt(r.epsilon);
        out.push_back(',');
        out += fmt(r.param);
        out.push_back(',');
        out += std::to_string(r.run);
        out.push_back(',');
        out += fmt(r.nat_train);
        out.push_back(',');
        out += fmt(r.nat_test);
        out.push_back(',');
        out += fmt(r.adv_train);
        out.push_back(',');
        out += fmt(r.adv_test);
        out.push_back(',');
        out += fmt(r.gap);
        out.push_back('\n');
    }
    return out;
}

ExperimentReport report_from_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    ExperimentReport report;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kCsvHeader) throw ParseError(origin, line_no, "unexpected CSV header");
            continue;
        }
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != 8) throw ParseError(origin, line_no, "expected 8 CSV fields");
        ExperimentRow r;
        r.epsilon = parse_double(fields[0], origin, line_no);
        r.param = parse_double(fields[1], origin, line_no);
        r.run = static_cast<std::size_t>(parse_double(fields[2], origin, line_no));
        r.nat_train = parse_double(fields[3], origin, line_no);
        r.nat_test = parse_double(fields[4], origin, line_no);
        r.adv_train = parse_double(fields[5], origin, line_no);
        r.adv_test = parse_double(fields[6], origin, line_no);
        r.gap = parse_double(fields[7], origin, line_no);
        report.rows.push_back(r);
    }
    report.aggregates = compute_aggregates(report.rows);
    return report;
}

std::string report_to_json(const ExperimentReport& report) {
    using nlohmann::json;
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back(json{{"epsilon", r.epsilon},
                            {"param", r.param},
                            {"run", r.run},
                            {"nat_train", r.nat_train},
                            {"nat_test", r.nat_test},
                            {"adv_train", r.adv_train},
                            {"adv_test", r.adv_test},
                            {"gap", r.gap}});
    }
    json aggs = json::array();
    for (const auto& a : report.aggregates) {
        aggs.push_back(json{{"epsilon", a.epsilon},
                            {"param", a.param},
                            {"runs", a.runs},
                            {"mean_nat_train", a.mean_nat_train},
                            {"std_nat_train", a.std_nat_train},
                            {"mean_nat_test", a.mean_nat_test},
                            {"std_nat_test", a.std_nat_test},
                            {"mean_adv_train", a.mean_adv_train},
                            {"std_adv_train", a.std_adv_train},
                            {"mean_adv_test", a.mean_adv_test},
                            {"std_adv_test", a.std_adv_test},
                            {"mean_gap", a.mean_gap},
                            {"std_gap", a.std_gap}});
    }
    json errs = json::array();
    for (const auto& e : report.errors)
        errs.push_back(json{
            {"epsilon", e.epsilon}, {"param", e.param}, {"run", e.run}, {"message", e.message}});
    return json{{"rows", rows}, {"aggregates", aggs}, {"errors", errs}}.dump(2);
}

ExperimentReport report_from_json(const std::string& text, const std::string& origin) {
    using nlohmann::json;
    const json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ParseError(origin, 0, "invalid JSON");
    ExperimentReport report;
    for (const auto& r : j.at("rows")) {
        report.rows.push_back(ExperimentRow{r.at("epsilon").get<double>(),
                                            r.at("param").get<double>(),
                                            r.at("run").get<std::size_t>(),
                                            r.at("nat_train").get<double>(),
                                            r.at("nat_test").get<double>(),
                                            r.at("adv_train").get<double>(),
                                            r.at("adv_test").get<double>(),
                                            r.at("gap").get<double>()});
    }
    for (const auto& e : j.value("errors", json::array())) {
        report.errors.push_back(CellError{e.at("epsilon").get<double>(),
                                          e.at("param").get<double>(),
                                          e.at("run").get<std::size_t>(),
                                          e.at("message").get<std::string>()});
    }
    report.aggregates = compute_aggregates(report.rows);
    return report;
}

void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    out << (format == ReportFormat::csv ? report_to_csv(report) : report_to_json(report));
    if (!out) throw ParseError(path, 0, "write failed");
}

// ---------------------------------------------------------------------------
// Config parsing (flat TOML-like grammar)
// ---------------------------------------------------------------------------

namespace {

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

ConfigValue parse_value(std::string_view raw, const std::string& origin, std::size_t line) {
    raw = trim(raw);
    if (raw.empty()) throw ParseError(origin, line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            throw ParseError(origin, line, "unterminated string");
        return std::string(raw.substr(1, raw.size() - 2));
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.front() == '[') {
        if (raw.back() != ']') throw ParseError(origin, line, "unterminated array");
        std::vector<double> values;
        std::string_view body = raw.substr(1, raw.size() - 2);
        while (true) {
            const auto comma = body.find(',');
            const std::string_view item = trim(body.substr(0, comma));
            if (!item.empty()) values.push_back(parse_double(item, origin, line));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        return values;
    }
    return parse_double(raw, origin, line);
}

class ConfigDoc {
public:
    ConfigDoc(const std::string& text, std::string origin) : origin_(std::move(origin)) {
        std::istringstream in(text);
        std::string line;
        std::string section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string_view s = trim(line);
            if (s.empty() || s.front() == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']') throw ParseError(origin_, line_no, "unterminated section");
                section = std::string(trim(s.substr(1, s.size() - 2)));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(origin_, line_no, "expected key = value");
            // Strip a trailing comment outside of quotes.
            std::string_view value_part = s.substr(eq + 1);
            bool in_string = false;
            for (std::size_t i = 0; i < value_part.size(); ++i) {
                if (value_part[i] == '"') in_string = !in_string;
                if (value_part[i] == '#' && !in_string) {
                    value_part = value_part.substr(0, i);
                    break;
                }
            }
            const std::string key = section + "." + std::string(trim(s.substr(0, eq)));
            values_[key] = parse_value(value_part, origin_, line_no);
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return require_type<T>(it->first, it->second);
    }

    template <typename T>
    T require(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ParseError(origin_, 0, "missing required key '" + key + "'");
        return require_type<T>(key, it->second);
    }

private:
    template <typename T>
    T require_type(const std::string& key, const ConfigValue& v) const {
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::size_t> ||
                      std::is_same_v<T, std::uint64_t>) {
            if (!std::holds_alternative<double>(v))
                throw ParseError(origin_, 0, "key '" + key + "' must be a number");
            return static_cast<T>(std::get<double>(v));
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!std::holds_alternative<bool>(v))
                throw ParseError(origin_, 0, "key '" + key + "' must be a boolean");
            return std::get<bool>(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!std::holds_alternative<std::string>(v))
                throw ParseError(origin_, 0, "key '" + key + "' must be a string");
            return std::get<std::string>(v);
        } else {
            if (!std::holds_alternative<std::vector<double>>(v))
                throw ParseError(origin_, 0, "key '" + key + "' must be an array");
            return std::get<std::vector<double>>(v);
        }
    }

    std::string origin_;
    std::map<std::string, ConfigValue> values_;
};

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
    const ConfigDoc doc(text, origin);
    ExperimentConfig cfg;

    const std::string kind = doc.require<std::string>("experiment.kind");
    if (kind == "lambda_sweep_linear") cfg.kind = ExperimentKind::lambda_sweep_linear;
    else if (kind == "dimension_sweep") cfg.kind = ExperimentKind::dimension_sweep;
    else if (kind == "lambda_sweep_net") cfg.kind = ExperimentKind::lambda_sweep_net;
    else throw ParseError(origin, 0, "unknown experiment kind '" + kind + "'");

    cfg.runs = doc.get<std::size_t>("experiment.runs", 1);
    cfg.n_train = doc.get<std::size_t>("experiment.n_train", 1000);
    cfg.n_test = doc.get<std::size_t>("experiment.n_test", 2000);
    cfg.base_seed = doc.get<std::uint64_t>("experiment.seed", 0);
    cfg.workers = doc.get<std::size_t>("experiment.workers", 0);

    cfg.data.synthetic = doc.get<bool>("data.synth", true);
    if (cfg.data.synthetic) {
        cfg.data.synth.d = doc.get<std::size_t>("data.d", cfg.data.synth.d);
        cfg.data.synth.num_classes = doc.get<std::size_t>("data.classes", cfg.data.synth.num_classes);
        cfg.data.synth.n_per_class =
            doc.get<std::size_t>("data.n_per_class", cfg.data.synth.n_per_class);
        cfg.data.synth.mean_scale = doc.get<double>("data.mean_scale", cfg.data.synth.mean_scale);
        cfg.data.synth.noise_sigma = doc.get<double>("data.noise_sigma", cfg.data.synth.noise_sigma);
        cfg.data.synth.seed = doc.get<std::uint64_t>("data.seed", cfg.data.synth.seed);
    } else {
        cfg.data.idx.train_images = doc.require<std::string>("data.train_images");
        cfg.data.idx.train_labels = doc.require<std::string>("data.train_labels");
        cfg.data.idx.test_images = doc.require<std::string>("data.test_images");
        cfg.data.idx.test_labels = doc.require<std::string>("data.test_labels");
    }

    cfg.epsilon_grid = doc.require<std::vector<double>>("grid.epsilon");
    if (doc.has("grid.lambda")) cfg.lambda_grid = doc.require<std::vector<double>>("grid.lambda");

    cfg.train.lr = doc.get<double>("train.lr", cfg.train.lr);
    cfg.train.epochs = doc.get<std::size_t>("train.epochs", cfg.train.epochs);
    cfg.train.batch = doc.get<std::size_t>("train.batch", cfg.train.batch);

    if (doc.has("net.hidden")) {
        for (double h : doc.require<std::vector<double>>("net.hidden"))
            cfg.hidden.push_back(static_cast<std::size_t>(h));
    }
    cfg.attack_steps = doc.get<std::size_t>("net.attack_steps", cfg.attack_steps);
    cfg.attack_step_size = doc.get<double>("net.attack_step_size", cfg.attack_step_size);
    cfg.attack_restarts = doc.get<std::size_t>("net.attack_restarts", cfg.attack_restarts);

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path);
}

}  // namespace robustgen
