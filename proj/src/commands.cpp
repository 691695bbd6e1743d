#include "edenet/commands.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <ostream>

#include "edenet/config.hpp"
#include "edenet/errors.hpp"
#include "edenet/grad_check.hpp"
#include "edenet/gpr_sim.hpp"
#include "edenet/network.hpp"
#include "edenet/retrieval.hpp"
#include "edenet/rng.hpp"
#include "edenet/serialize.hpp"
#include "edenet/tensor.hpp"
#include "edenet/training.hpp"

namespace edenet {

namespace {

constexpr double kGradTol = 1e-3;

// shortest round-trip decimal, stable across runs
std::string fmt(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void cmd_simulate(const std::string& config_path, const std::string& map_path,
                  const std::string& queries_path, std::ostream& out) {
    auto cfg = ExperimentConfig::load(config_path);
    auto data = make_dataset(cfg.seed, cfg.n_locations, cfg.sim, cfg.map_epsilon,
                             cfg.query_epsilon, cfg.query_noise);
    write_gsf(data.map, map_path);
    write_gsf(data.queries, queries_path);
    out << "map_frames,query_frames,depth_bins,channels\n"
        << data.map.S << "," << data.queries.S << "," << data.map.D << "," << data.map.C << "\n";
}

void cmd_train(const std::string& config_path, const std::string& map_path,
               const std::string& queries_path, const std::string& ckpt_path, std::ostream& out) {
    auto cfg = ExperimentConfig::load(config_path);
    auto map = read_gsf(map_path);
    auto queries = read_gsf(queries_path);
    auto res = train(map, queries, cfg.train, cfg.net);
    save_checkpoint(res.net, res.steps, ckpt_path);
    out << "epoch,step,loss,val_recall@1\n";
    for (const auto& e : res.log)
        out << e.epoch << "," << e.step << "," << fmt(e.loss) << "," << fmt(e.val_recall1)
            << "\n";
}

void cmd_encode(const std::string& ckpt_path, const std::string& input_path,
                const std::string& output_path, std::ostream& out) {
    auto ckpt = load_checkpoint(ckpt_path);
    auto seq = read_gsf(input_path);
    auto descs = ckpt.net.encode_sequence(seq, ckpt.net.cfg.window);
    save_descriptors(descs, output_path);
    out << "descriptors,dim\n" << descs.size() << "," << descs[0].values.size() << "\n";
}

void cmd_index(const std::string& input_path, const std::string& output_path, std::ostream& out) {
    auto descs = load_descriptors(input_path);
    auto idx = build_index(descs);  // validates dims and norms before anything persists
    save_descriptors(descs, output_path);
    out << "entries,dim\n" << idx.size() << "," << idx.dim() << "\n";
}

void cmd_query(const std::string& index_path, const std::string& queries_path, int topk,
               std::ostream& out) {
    auto idx = build_index(load_descriptors(index_path));
    auto qs = load_descriptors(queries_path);
    out << "query_frame,rank,match_frame,distance,utm_x,utm_y\n";
    for (const auto& q : qs) {
        auto res = query(idx, q, topk);
        for (std::size_t r = 0; r < res.frame_ids.size(); ++r)
            out << q.frame_id << "," << r + 1 << "," << res.frame_ids[r] << ","
                << fmt(res.distances[r]) << "," << fmt(res.poses[r][0]) << ","
                << fmt(res.poses[r][1]) << "\n";
    }
}

void cmd_eval(const std::string& config_path, const std::string& index_path,
              const std::string& queries_path, std::ostream& out) {
    auto cfg = config_path.empty() ? ExperimentConfig::defaults()
                                   : ExperimentConfig::load(config_path);
    auto idx = build_index(load_descriptors(index_path));
    auto qs = load_descriptors(queries_path);
    const int maxk = std::min(cfg.k_values.back(), idx.size());
    std::vector<MatchResult> results;
    std::vector<std::array<double, 2>> poses;
    results.reserve(qs.size());
    for (const auto& q : qs) {
        results.push_back(query(idx, q, maxk));
        poses.push_back(q.pose);
    }
    std::string header, values;
    for (std::size_t i = 0; i < cfg.k_values.size(); ++i) {
        if (i) {
            header += ",";
            values += ",";
        }
        header += "recall@" + std::to_string(cfg.k_values[i]);
        values += fmt(recall_at_k(results, poses, cfg.k_values[i], cfg.dist_thresh));
    }
    out << header << "\n" << values << "\n";
}

NetConfig gradcheck_tiny_config() {
    NetConfig cfg;
    EdeBlockConfig b;
    b.K = 5;
    b.k = 4;
    b.shift_channels = 4;
    b.pool_window = 2;
    b.pool_stride = 2;
    cfg.scales = {b};
    cfg.descriptor_dim = 16;
    cfg.reduction = 2;
    cfg.input_channels = 1;
    cfg.depth_bins = 16;
    cfg.window = 8;
    return cfg;
}

bool cmd_gradcheck(const std::string& config_path, const std::string& corrupt_group,
                   std::ostream& out) {
    NetConfig ncfg =
        config_path.empty() ? gradcheck_tiny_config() : ExperimentConfig::load(config_path).net;
    // fixture seed chosen away from relu/maxpool kinks (finite differences
    // cannot cross an activation flip)
    EdeNet net(ncfg, 1);
    Rng rng(157);
    auto rand_tensor = [&](std::vector<int> shape) {
        long long n = 1;
        for (int d : shape) n *= d;
        std::vector<double> data((std::size_t)n);
        for (auto& v : data) v = rng.uniform(-1.0, 1.0);
        return Tensor::make(std::move(shape), std::move(data));
    };
    auto X = rand_tensor({ncfg.input_channels, ncfg.depth_bins, ncfg.window});
    auto probe = rand_tensor({ncfg.descriptor_dim});

    std::vector<std::string> names;
    std::vector<TensorPtr> params;
    for (const auto& [n, p] : net.named_params()) {
        names.push_back(n);
        params.push_back(p);
    }
    if (!corrupt_group.empty() &&
        std::find(names.begin(), names.end(), corrupt_group) == names.end())
        throw UsageError("gradcheck: unknown parameter group " + corrupt_group);

    auto f = [&]() { return sum_all(mul(net.forward_window(X, L2NormMode::Train), probe)); };
    auto report = grad_check_detailed(f, names, params, 1e-3, corrupt_group);

    out << "group,max_rel_error\n";
    for (std::size_t i = 0; i < report.names.size(); ++i)
        out << report.names[i] << "," << fmt(report.max_rel_error[i]) << "\n";
    out << "overall," << fmt(report.overall) << "\n";
    if (report.overall >= kGradTol)
        std::cerr << "gradcheck: max relative error " << report.overall << " exceeds " << kGradTol
                  << "\n";
    return report.overall < kGradTol;
}

void cmd_bench(const std::string& ckpt_path, int entries, int trials, std::ostream& out) {
    if (entries < 1) throw UsageError("bench: index needs at least one entry");
    if (trials < 1) throw UsageError("bench: trials must be >= 1");
    EdeNet net = ckpt_path.empty() ? EdeNet(NetConfig::full_scale(), 1)
                                   : load_checkpoint(ckpt_path).net;
    const auto& cfg = net.cfg;
    Rng rng(1);

    std::vector<double> data((std::size_t)cfg.input_channels * cfg.depth_bins * cfg.window);
    for (auto& v : data) v = rng.uniform(-1.0, 1.0);
    auto X = Tensor::make({cfg.input_channels, cfg.depth_bins, cfg.window}, data);

    auto stats = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= (double)xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(var / (double)xs.size()));
    };

    NoGradGuard ng;
    net.forward_window(X, L2NormMode::Train);  // warm-up, untimed
    std::vector<double> encode_ms;
    for (int t = 0; t < trials; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        net.forward_window(X, L2NormMode::Train);
        encode_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count());
    }

    std::vector<Descriptor> ds((std::size_t)entries);
    for (int i = 0; i < entries; ++i) {
        auto& d = ds[(std::size_t)i];
        d.values.resize((std::size_t)cfg.descriptor_dim);
        double norm = 0.0;
        for (auto& v : d.values) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : d.values) v /= norm;
        d.pose = {i * 0.1, 0.0};
        d.frame_id = i;
    }
    auto idx = build_index(ds);
    Descriptor probe = ds[(std::size_t)rng.uniform_int(entries)];
    const int topk = std::min(10, entries);
    query(idx, probe, topk);  // warm-up
    std::vector<double> query_ms;
    for (int t = 0; t < trials; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        query(idx, probe, topk);
        query_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count());
    }

    const auto [em, es] = stats(encode_ms);
    const auto [qm, qs] = stats(query_ms);
    out << "metric,mean_ms,std_ms\n";
    out << "encode," << fmt(em) << "," << fmt(es) << "\n";
    out << "query," << fmt(qm) << "," << fmt(qs) << "\n";
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out) {
    CLI::App app{"GPR place recognition: simulate, train, encode, retrieve"};
    app.require_subcommand(1);

    std::string config_path, map_path, queries_path, ckpt_path, input_path, output_path;
    std::string index_path, corrupt_group;
    int topk = 5, entries = 10000, trials = 10;

    auto* sim = app.add_subcommand("simulate", "render a synthetic map/query dataset");
    sim->add_option("--config", config_path, "experiment JSON")->required();
    sim->add_option("--map", map_path, "output map GSF")->required();
    sim->add_option("--queries", queries_path, "output query GSF")->required();

    auto* trn = app.add_subcommand("train", "train a network on a map/query pair");
    trn->add_option("--config", config_path, "experiment JSON")->required();
    trn->add_option("--map", map_path, "map GSF")->required();
    trn->add_option("--queries", queries_path, "query GSF")->required();
    trn->add_option("--checkpoint", ckpt_path, "output checkpoint NTC")->required();

    auto* enc = app.add_subcommand("encode", "encode a sequence into descriptors");
    enc->add_option("--checkpoint", ckpt_path, "checkpoint NTC")->required();
    enc->add_option("--input", input_path, "input GSF")->required();
    enc->add_option("--output", output_path, "output descriptor NTC")->required();

    auto* ind = app.add_subcommand("index", "validate descriptors into an index file");
    ind->add_option("--input", input_path, "descriptor NTC")->required();
    ind->add_option("--output", output_path, "output index NTC")->required();

    auto* qry = app.add_subcommand("query", "rank index entries for each query descriptor");
    qry->add_option("--index", index_path, "index NTC")->required();
    qry->add_option("--queries", queries_path, "query descriptor NTC")->required();
    qry->add_option("--topk", topk, "matches per query");

    auto* evl = app.add_subcommand("eval", "recall@k over an index/query pair");
    evl->add_option("--config", config_path, "experiment JSON (defaults apply if omitted)");
    evl->add_option("--index", index_path, "index NTC")->required();
    evl->add_option("--queries", queries_path, "query descriptor NTC")->required();

    auto* gck = app.add_subcommand("gradcheck", "finite-difference audit of every gradient");
    gck->add_option("--config", config_path, "experiment JSON (tiny fixture if omitted)");
    gck->add_option("--corrupt-group", corrupt_group,
                    "perturb this group's gradient (negative control)");

    auto* bch = app.add_subcommand("bench", "encode and query latency");
    bch->add_option("--checkpoint", ckpt_path, "checkpoint NTC (full-scale net if omitted)");
    bch->add_option("--entries", entries, "index size");
    bch->add_option("--trials", trials, "timing repetitions");

    std::vector<const char*> argv;
    argv.push_back("edenet");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse((int)argv.size(), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(sim)) cmd_simulate(config_path, map_path, queries_path, out);
        else if (app.got_subcommand(trn))
            cmd_train(config_path, map_path, queries_path, ckpt_path, out);
        else if (app.got_subcommand(enc)) cmd_encode(ckpt_path, input_path, output_path, out);
        else if (app.got_subcommand(ind)) cmd_index(input_path, output_path, out);
        else if (app.got_subcommand(qry)) cmd_query(index_path, queries_path, topk, out);
        else if (app.got_subcommand(evl)) cmd_eval(config_path, index_path, queries_path, out);
        else if (app.got_subcommand(gck)) {
            if (!cmd_gradcheck(config_path, corrupt_group, out)) return 4;
        } else if (app.got_subcommand(bch)) {
            cmd_bench(ckpt_path, entries, trials, out);
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "edenet: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "edenet: internal error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace edenet
