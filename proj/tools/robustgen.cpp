#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "robustgen/bounds.hpp"
#include "robustgen/data.hpp"
#include "robustgen/errors.hpp"
#include "robustgen/experiment.hpp"
#include "robustgen/linear.hpp"
#include "robustgen/mlp.hpp"
#include "robustgen/model_io.hpp"
#include "robustgen/rademacher.hpp"
#include "robustgen/sdp.hpp"

namespace {

using namespace robustgen;
using nlohmann::json;

struct DataFlags {
    std::string train_images, train_labels;
    bool synth = false;
    std::size_t synth_d = 64;
    std::size_t synth_k = 3;
    std::size_t synth_n_per_class = 1000;
    double synth_mean_scale = 1.0;
    double synth_noise = 1.0;
    std::uint64_t synth_seed = 1;

    Dataset load() const {
        if (synth)
            return synth_gaussian(synth_d, synth_k, synth_n_per_class, synth_mean_scale,
                                  synth_noise, synth_seed);
        if (train_images.empty() || train_labels.empty())
            throw InvalidConfigError("provide --train-images/--train-labels or --synth");
        return load_idx(train_images, train_labels);
    }
};

void add_data_flags(CLI::App* cmd, DataFlags& flags) {
    cmd->add_option("--train-images", flags.train_images, "IDX image file");
    cmd->add_option("--train-labels", flags.train_labels, "IDX label file");
    cmd->add_flag("--synth", flags.synth, "use the synthetic Gaussian generator");
    cmd->add_option("--synth-d", flags.synth_d, "synthetic feature dimension");
    cmd->add_option("--synth-k", flags.synth_k, "synthetic class count");
    cmd->add_option("--synth-n-per-class", flags.synth_n_per_class, "samples per class");
    cmd->add_option("--synth-mean-scale", flags.synth_mean_scale, "class mean scale");
    cmd->add_option("--synth-noise", flags.synth_noise, "noise sigma");
    cmd->add_option("--synth-seed", flags.synth_seed, "generator seed");
}

NormExponent parse_exponent(const std::string& p) {
    if (p == "inf") return NormExponent::infinity();
    return NormExponent::finite(std::stod(p));
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(out_path, 0, "cannot open file for writing");
    out << text << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"adversarial robustness bounds and experiments"};
    app.require_subcommand(1);

    // ---- train-linear ----
    auto* train_linear_cmd = app.add_subcommand("train-linear", "adversarially train a linear model");
    DataFlags tl_data;
    add_data_flags(train_linear_cmd, tl_data);
    TrainConfig tl_cfg;
    std::string tl_p = "2";
    double tl_w_bound = 1.0;
    bool tl_enforce = false;
    std::string tl_out;
    train_linear_cmd->add_option("--epsilon", tl_cfg.epsilon, "l_inf budget");
    train_linear_cmd->add_option("--lambda", tl_cfg.lambda, "l1 regularization");
    train_linear_cmd->add_option("--lr", tl_cfg.lr, "learning rate");
    train_linear_cmd->add_option("--epochs", tl_cfg.epochs, "epochs");
    train_linear_cmd->add_option("--batch", tl_cfg.batch, "batch size");
    train_linear_cmd->add_option("--seed", tl_cfg.seed, "seed");
    train_linear_cmd->add_option("--p", tl_p, "row norm exponent (number or 'inf')");
    train_linear_cmd->add_option("--w-bound", tl_w_bound, "row norm bound");
    train_linear_cmd->add_flag("--enforce", tl_enforce, "project rows onto the lp ball");
    train_linear_cmd->add_option("--out", tl_out, "output model path")->required();

    // ---- train-net ----
    auto* train_net_cmd = app.add_subcommand("train-net", "PGD-adversarially train a ReLU net");
    DataFlags tn_data;
    add_data_flags(train_net_cmd, tn_data);
    TrainConfig tn_cfg;
    double tn_lambda = 0.0;
    std::vector<std::size_t> tn_arch;
    AttackConfig tn_attack;
    std::vector<double> tn_clamp;
    std::string tn_out;
    train_net_cmd->add_option("--arch", tn_arch, "layer dims, input..output (e.g. 784,256,10)")
        ->delimiter(',')
        ->required();
    train_net_cmd->add_option("--epsilon", tn_attack.epsilon, "l_inf budget");
    train_net_cmd->add_option("--lambda", tn_lambda, "l1 regularization");
    train_net_cmd->add_option("--lr", tn_cfg.lr, "learning rate");
    train_net_cmd->add_option("--epochs", tn_cfg.epochs, "epochs");
    train_net_cmd->add_option("--batch", tn_cfg.batch, "batch size");
    train_net_cmd->add_option("--seed", tn_cfg.seed, "seed");
    train_net_cmd->add_option("--attack-steps", tn_attack.steps, "PGD steps");
    train_net_cmd->add_option("--attack-step-size", tn_attack.step_size, "PGD step size");
    train_net_cmd->add_option("--attack-restarts", tn_attack.restarts, "PGD restarts");
    train_net_cmd->add_option("--clamp", tn_clamp, "domain clamp lo,hi")->delimiter(',')->expected(2);
    train_net_cmd->add_option("--out", tn_out, "output model path")->required();

    // ---- sdp-eval ----
    auto* sdp_cmd = app.add_subcommand("sdp-eval", "surrogate adversarial losses via the SDP bound");
    DataFlags sdp_data;
    add_data_flags(sdp_cmd, sdp_data);
    std::string sdp_model_path, sdp_out;
    double sdp_epsilon = 0.1, sdp_gamma = 1.0;
    sdp_cmd->add_option("--model", sdp_model_path, "mlp model JSON")->required();
    sdp_cmd->add_option("--epsilon", sdp_epsilon, "l_inf budget");
    sdp_cmd->add_option("--gamma", sdp_gamma, "margin scale");
    sdp_cmd->add_option("--out", sdp_out, "output path (default stdout)");

    // ---- rademacher ----
    auto* rad_cmd = app.add_subcommand("rademacher", "empirical Rademacher complexity estimates");
    DataFlags rad_data;
    add_data_flags(rad_cmd, rad_data);
    std::string rad_p = "2", rad_mode = "natural", rad_out;
    double rad_w = 1.0, rad_eps = 0.1;
    std::size_t rad_samples = 10000;
    bool rad_exact = false;
    std::uint64_t rad_seed = 0x5D7EAD;
    rad_cmd->add_option("--p", rad_p, "norm exponent (number or 'inf')");
    rad_cmd->add_option("--w-bound", rad_w, "weight norm bound W");
    rad_cmd->add_option("--epsilon", rad_eps, "l_inf budget");
    rad_cmd->add_option("--mode", rad_mode, "natural | adversarial");
    rad_cmd->add_flag("--exact", rad_exact, "enumerate all sign vectors (n <= 20)");
    rad_cmd->add_option("--mc-samples", rad_samples, "Monte Carlo sample count");
    rad_cmd->add_option("--mc-seed", rad_seed, "Monte Carlo seed");
    rad_cmd->add_option("--out", rad_out, "output path (default stdout)");

    // ---- bound ----
    auto* bound_cmd = app.add_subcommand("bound", "generalization-bound certificates");
    DataFlags bound_data;
    add_data_flags(bound_cmd, bound_data);
    std::string bound_model_path, bound_kind = "auto", bound_mode = "adversarial", bound_out;
    double bound_gamma = 1.0, bound_eps = 0.1, bound_delta = 0.05, bound_c = 1.0;
    std::size_t bound_samples = 2000;
    bound_cmd->add_option("--model", bound_model_path, "model JSON (linear or mlp)")->required();
    bound_cmd->add_option("--kind", bound_kind, "margin | sdp | nn | auto");
    bound_cmd->add_option("--mode", bound_mode, "natural | adversarial (margin kind)");
    bound_cmd->add_option("--gamma", bound_gamma, "margin scale");
    bound_cmd->add_option("--epsilon", bound_eps, "l_inf budget");
    bound_cmd->add_option("--delta", bound_delta, "confidence level");
    bound_cmd->add_option("--c-param", bound_c, "universal constant for the nn lower curve");
    bound_cmd->add_option("--mc-samples", bound_samples, "Monte Carlo samples for margin bounds");
    bound_cmd->add_option("--out", bound_out, "output path (default stdout)");

    // ---- experiment ----
    auto* exp_cmd = app.add_subcommand("experiment", "run a configured sweep");
    std::string exp_config, exp_out = "report.csv", exp_format = "csv";
    exp_cmd->add_option("--config", exp_config, "experiment config file")->required();
    exp_cmd->add_option("--out", exp_out, "report output path");
    exp_cmd->add_option("--format", exp_format, "csv | json");

    CLI11_PARSE(app, argc, argv);

    if (train_linear_cmd->parsed()) {
        const Dataset ds = tl_data.load();
        NormConstraint constraint{parse_exponent(tl_p), tl_w_bound, tl_enforce};
        const auto result = train_linear(ds, tl_cfg, constraint);
        save_linear_model(result.model, tl_out);
        const auto metrics = eval_linear(result.model, ds, tl_cfg.epsilon);
        std::fprintf(stderr, "final objective %.6f, train error nat %.4f adv %.4f -> %s\n",
                     result.loss_trace.back(), metrics.natural_error, metrics.adversarial_error,
                     tl_out.c_str());
        return 0;
    }

    if (train_net_cmd->parsed()) {
        const Dataset ds = tn_data.load();
        if (tn_arch.size() < 2) throw InvalidConfigError("--arch needs at least input,output");
        if (tn_arch.front() != ds.d)
            throw InvalidConfigError("--arch input dim does not match the dataset");
        if (tn_arch.back() != ds.num_classes)
            throw InvalidConfigError("--arch output dim does not match the class count");
        if (!tn_clamp.empty()) tn_attack.clamp_domain = std::make_pair(tn_clamp[0], tn_clamp[1]);
        const std::vector<std::size_t> hidden(tn_arch.begin() + 1, tn_arch.end() - 1);
        const auto result = train_net(ds, hidden, tn_attack, tn_lambda, tn_cfg);
        save_mlp_model(result.model, tn_out);
        std::fprintf(stderr, "final nat loss %.6f, adv objective %.6f -> %s\n",
                     result.natural_loss_trace.back(), result.adversarial_loss_trace.back(),
                     tn_out.c_str());
        return 0;
    }

    if (sdp_cmd->parsed()) {
        const Dataset ds = sdp_data.load();
        const MlpModel model = load_mlp_model(sdp_model_path);
        const SurrogateEvaluator eval(model);
        json solves = json::array();
        const std::size_t k = model.output_dim();
        for (std::size_t c = 0; c < k; ++c) {
            for (int zi = 0; zi < 2; ++zi) {
                const SdpResult& r = eval.solves()[2 * c + zi];
                solves.push_back(json{{"class", c + 1},
                                      {"z", zi == 0 ? 1 : -1},
                                      {"primal", r.primal_value},
                                      {"dual", r.dual_value},
                                      {"gap", r.gap},
                                      {"iterations", r.iterations},
                                      {"converged", r.converged}});
            }
        }
        json losses = json::array();
        for (std::size_t i = 0; i < ds.size(); ++i)
            losses.push_back(eval.loss(ds.example(i), ds.labels[i], sdp_epsilon, sdp_gamma));
        const auto risk = surrogate_risk(eval, ds, sdp_epsilon, sdp_gamma);
        write_output(json{{"s_star", eval.s_star()},
                          {"epsilon", sdp_epsilon},
                          {"gamma", sdp_gamma},
                          {"solves", solves},
                          {"surrogate_losses", losses},
                          {"ramp_mean", risk.ramp_mean},
                          {"indicator_mean", risk.indicator_mean}}
                         .dump(2),
                     sdp_out);
        return 0;
    }

    if (rad_cmd->parsed()) {
        const Dataset ds = rad_data.load();
        const Matrix x = dataset_columns(ds);
        const NormExponent p = parse_exponent(rad_p);
        const SampleSpec spec =
            rad_exact ? SampleSpec::exact() : SampleSpec::monte_carlo(rad_samples, rad_seed);
        RademacherEstimate est;
        if (rad_mode == "natural") {
            est = rademacher_linear(x, nullptr, p, rad_w, 0.0, RademacherMode::natural, spec);
        } else if (rad_mode == "adversarial") {
            if (ds.num_classes != 2)
                throw InvalidConfigError("adversarial mode needs a binary dataset (K = 2)");
            std::vector<int> pm(ds.size());
            for (std::size_t i = 0; i < ds.size(); ++i) pm[i] = ds.labels[i] == 1 ? 1 : -1;
            est = rademacher_linear(x, &pm, p, rad_w, rad_eps, RademacherMode::adversarial, spec);
        } else {
            throw InvalidConfigError("--mode must be natural or adversarial");
        }
        write_output(rademacher_to_json(est), rad_out);
        return 0;
    }

    if (bound_cmd->parsed()) {
        const Dataset ds = bound_data.load();
        std::ifstream probe(bound_model_path);
        if (!probe) throw ParseError(bound_model_path, 0, "cannot open file");
        std::string text((std::istreambuf_iterator<char>(probe)), std::istreambuf_iterator<char>());
        const bool is_linear = text.find("robustgen-linear") != std::string::npos;

        std::string kind = bound_kind;
        if (kind == "auto") kind = is_linear ? "margin" : "sdp";
        if (kind == "margin") {
            const LinearModel model = linear_model_from_json(text, bound_model_path);
            const auto mode = bound_mode == "natural" ? RademacherMode::natural
                                                      : RademacherMode::adversarial;
            const auto cert = margin_bound_multiclass(model, ds, bound_gamma, bound_eps,
                                                      bound_delta, mode,
                                                      SampleSpec::monte_carlo(bound_samples));
            write_output(certificate_to_json(cert), bound_out);
        } else if (kind == "sdp") {
            const MlpModel model = mlp_model_from_json(text, bound_model_path);
            const auto cert = sdp_margin_bound(model, ds, bound_gamma, bound_eps, bound_delta);
            write_output(certificate_to_json(cert), bound_out);
        } else if (kind == "nn") {
            const MlpModel model = mlp_model_from_json(text, bound_model_path);
            const auto rec = nn_bounds(model, dataset_columns(ds), bound_eps, std::nullopt, bound_c);
            write_output(json{{"natural_upper", rec.natural_upper},
                              {"adversarial_lower", rec.adversarial_lower},
                              {"c_param", rec.c_param},
                              {"spectral_product", rec.spectral_product},
                              {"spectral", rec.spectral},
                              {"transpose_21", rec.transpose_21},
                              {"x_fro", rec.x_fro},
                              {"d_max", rec.d_max}}
                             .dump(2),
                         bound_out);
        } else {
            throw InvalidConfigError("--kind must be margin, sdp, nn or auto");
        }
        return 0;
    }

    if (exp_cmd->parsed()) {
        const ExperimentConfig cfg = load_experiment_config(exp_config);
        const ExperimentReport report = run_experiment(cfg);
        const ReportFormat format = exp_format == "json" ? ReportFormat::json : ReportFormat::csv;
        emit_report(report, exp_out, format);
        for (const auto& e : report.errors)
            std::fprintf(stderr, "cell (eps=%g, param=%g, run=%zu) failed: %s\n", e.epsilon, e.param,
                         e.run, e.message.c_str());
        std::fprintf(stderr, "%zu rows -> %s\n", report.rows.size(), exp_out.c_str());
        return report.ok() ? 0 : 1;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
