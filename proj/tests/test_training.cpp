#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "edenet/errors.hpp"
#include "edenet/gpr_sim.hpp"
#include "edenet/grad_check.hpp"
#include "edenet/network.hpp"
#include "edenet/rng.hpp"
#include "edenet/tensor.hpp"
#include "edenet/training.hpp"
#include "oracles.hpp"

using namespace edenet;

namespace {

std::vector<double> unit_vec(Rng& rng, int dim) {
    std::vector<double> v((std::size_t)dim);
    double norm = 0.0;
    for (auto& a : v) {
        a = rng.normal();
        norm += a * a;
    }
    norm = std::sqrt(norm);
    for (auto& a : v) a /= norm;
    return v;
}

// planar unit vector at chord distance d from (1, 0): |(1,0) - (cos a, sin a)| = 2 sin(a/2)
std::vector<double> at_chord(double d) {
    const double a = 2.0 * std::asin(d / 2.0);
    return {std::cos(a), std::sin(a)};
}

TensorPtr embed(const std::vector<double>& v, bool rg = false) {
    return Tensor::make({(int)v.size()}, std::vector<double>(v), rg);
}

NetConfig train_tiny_config(int depth_bins, int channels, int window) {
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
    cfg.input_channels = channels;
    cfg.depth_bins = depth_bins;
    cfg.window = window;
    return cfg;
}

SimConfig train_sim_config() {
    SimConfig cfg;
    cfg.depth_bins = 32;
    cfg.channels = 2;
    cfg.dx = 0.5;
    cfg.time_bin = 0.4;
    return cfg;
}

bool params_equal(const EdeNet& a, const EdeNet& b) {
    auto pa = a.named_params();
    auto pb = b.named_params();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].first != pb[i].first) return false;
        if (pa[i].second->data != pb[i].second->data) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("mine_positive") {
    Rng rng(193);

    SUBCASE("single candidate") {
        CHECK(mine_positive({1.0, 0.0}, {{0.0, 1.0}}) == 0);
    }

    SUBCASE("identical candidate wins with distance zero") {
        std::vector<double> q = unit_vec(rng, 6);
        std::vector<std::vector<double>> cands = {unit_vec(rng, 6), q, unit_vec(rng, 6)};
        CHECK(mine_positive(q, cands) == 1);
    }

    SUBCASE("ties break to the lowest index") {
        std::vector<double> q = {1.0, 0.0};
        std::vector<double> c = {0.0, 1.0};
        CHECK(mine_positive(q, {c, c, c}) == 0);
    }

    SUBCASE("matches the exhaustive-scan oracle") {
        for (int trial = 0; trial < 20; ++trial) {
            const int dim = 3 + rng.uniform_int(6);
            std::vector<double> q = unit_vec(rng, dim);
            std::vector<std::vector<double>> cands;
            for (int i = 0; i < 10; ++i) cands.push_back(unit_vec(rng, dim));
            int best = 0;
            for (int i = 1; i < 10; ++i)
                if (oracle::euclidean(cands[(std::size_t)i], q) <
                    oracle::euclidean(cands[(std::size_t)best], q))
                    best = i;
            CHECK(mine_positive(q, cands) == best);
        }
    }

    SUBCASE("empty candidate set") {
        CHECK_THROWS_AS(mine_positive({1.0, 0.0}, {}), MiningError);
    }
}

TEST_CASE("triplet_loss values") {
    SUBCASE("hand case 0.3 + 0.5 - 0.2") {
        auto q = embed({1.0, 0.0});
        auto p = embed(at_chord(0.5));
        auto n = embed(at_chord(0.2));
        auto loss = triplet_loss(q, p, {n}, 0.3);
        CHECK(loss->data[0] == doctest::Approx(0.6).epsilon(1e-12));
    }

    SUBCASE("zero exactly when every negative clears the margin") {
        auto q = embed({1.0, 0.0});
        auto p = embed({1.0, 0.0});  // d(q,p) = 0
        auto n1 = embed(at_chord(0.3));
        auto n2 = embed(at_chord(0.9));
        CHECK(triplet_loss(q, p, {n1, n2}, 0.3)->data[0] == 0.0);
        // one negative inside the margin makes it positive
        auto n3 = embed(at_chord(0.29));
        CHECK(triplet_loss(q, p, {n1, n3}, 0.3)->data[0] > 0.0);
    }

    SUBCASE("batch of 5 negatives matches the scalar oracle") {
        Rng rng(197);
        for (int trial = 0; trial < 20; ++trial) {
            const int dim = 3 + rng.uniform_int(6);
            auto qv = unit_vec(rng, dim);
            auto pv = unit_vec(rng, dim);
            std::vector<std::vector<double>> nv;
            std::vector<TensorPtr> negs;
            for (int i = 0; i < 5; ++i) {
                nv.push_back(unit_vec(rng, dim));
                negs.push_back(embed(nv.back()));
            }
            const double want = oracle::triplet_loss(qv, pv, nv, 0.3);
            const double got = triplet_loss(embed(qv), embed(pv), negs, 0.3)->data[0];
            CHECK(std::fabs(got - want) <= 1e-6 * std::max(1.0, std::fabs(want)));
        }
    }

    SUBCASE("dimension mismatch and empty negatives") {
        auto q = embed({1.0, 0.0});
        CHECK_THROWS_AS(triplet_loss(q, embed({1.0, 0.0, 0.0}), {q}, 0.3), DimensionError);
        CHECK_THROWS_AS(triplet_loss(q, q, {embed({1.0, 0.0, 0.0})}, 0.3), DimensionError);
        CHECK_THROWS_AS(triplet_loss(q, q, {}, 0.3), UsageError);
        CHECK_THROWS_AS(triplet_loss(q, q, {q}, 0.0), DomainError);
    }
}

TEST_CASE("triplet_loss gradients through embeddings") {
    Rng rng(199);
    // active hinges well away from the kink
    auto q = embed(unit_vec(rng, 5), true);
    auto p = embed(unit_vec(rng, 5), true);
    std::vector<TensorPtr> negs = {embed(unit_vec(rng, 5), true),
                                   embed(unit_vec(rng, 5), true)};
    std::vector<TensorPtr> params = {q, p, negs[0], negs[1]};
    auto f = [&]() { return triplet_loss(q, p, negs, 2.5); };  // large margin keeps hinges active
    const double base = f()->data[0];
    REQUIRE(base > 0.1);
    auto report = grad_check(f, params, 1e-4);
    CHECK(report < 1e-3);
}

TEST_CASE("triplet_loss gradients through the network") {
    // fixture seed chosen away from relu/maxpool kinks (finite differences
    // cannot cross an activation flip)
    auto cfg = train_tiny_config(16, 1, 8);
    cfg.descriptor_dim = 8;
    EdeNet net(cfg, 1);
    Rng rng(211);
    auto make_window = [&]() {
        std::vector<double> v((std::size_t)cfg.input_channels * cfg.depth_bins * cfg.window);
        for (auto& a : v) a = rng.uniform(-1.0, 1.0);
        return Tensor::make({cfg.input_channels, cfg.depth_bins, cfg.window}, std::move(v));
    };
    auto Wq = make_window();
    auto Wp = make_window();
    auto Wn = make_window();

    auto named = net.named_params();
    std::vector<std::string> names;
    std::vector<TensorPtr> params;
    for (const auto& [n, pr] : named) {
        names.push_back(n);
        params.push_back(pr);
    }
    auto f = [&]() {
        auto fq = net.forward_window(Wq, L2NormMode::Train);
        auto fp = net.forward_window(Wp, L2NormMode::Train);
        auto fn = net.forward_window(Wn, L2NormMode::Train);
        return triplet_loss(fq, fp, {fn}, 2.0);  // margin keeps the hinge active
    };
    REQUIRE(f()->data[0] > 0.1);
    auto report = grad_check_detailed(f, names, params, 1e-4);
    for (std::size_t i = 0; i < names.size(); ++i) {
        INFO(names[i]);
        CHECK(report.max_rel_error[i] < 1e-3);
    }
}

TEST_CASE("adam_step") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        auto p = Tensor::make({3}, {1.0, -2.0, 3.0}, true);
        AdamOptimizer opt({p}, 0.1);
        opt.zero_grad();
        CHECK(opt.step());
        CHECK(p->data == std::vector<double>{1.0, -2.0, 3.0});
    }

    SUBCASE("first step magnitude is the learning rate") {
        auto p = Tensor::make({2}, {0.5, -0.5}, true);
        AdamOptimizer opt({p}, 1e-3);
        p->grad = {3.7, -0.002};
        CHECK(opt.step());
        CHECK(std::fabs(std::fabs(p->data[0] - 0.5) - 1e-3) < 1e-8);
        CHECK(std::fabs(std::fabs(p->data[1] + 0.5) - 1e-3) < 1e-8);
        CHECK(p->data[0] < 0.5);   // moved against the gradient
        CHECK(p->data[1] > -0.5);
    }

    SUBCASE("quadratic bowl decreases monotonically after warmup") {
        auto p = Tensor::make({2}, {5.0, -4.0}, true);
        AdamOptimizer opt({p}, 0.01);
        auto loss_of = [&]() {
            return (p->data[0] - 1.0) * (p->data[0] - 1.0) +
                   (p->data[1] - 2.0) * (p->data[1] - 2.0);
        };
        std::vector<double> losses;
        for (int t = 0; t < 100; ++t) {
            p->grad = {2.0 * (p->data[0] - 1.0), 2.0 * (p->data[1] - 2.0)};
            CHECK(opt.step());
            losses.push_back(loss_of());
        }
        for (std::size_t t = 10; t < losses.size(); ++t) CHECK(losses[t] < losses[t - 1]);
        CHECK(losses.back() < losses.front());
    }

    SUBCASE("non-finite gradient aborts the step and zeroes gradients") {
        auto p = Tensor::make({2}, {1.0, 2.0}, true);
        AdamOptimizer opt({p}, 0.1);
        p->grad = {std::nan(""), 1.0};
        CHECK_FALSE(opt.step());
        CHECK(p->data == std::vector<double>{1.0, 2.0});
        CHECK(p->grad == std::vector<double>{0.0, 0.0});
        // a later clean step still works
        p->grad = {1.0, 1.0};
        CHECK(opt.step());
        CHECK(p->data[0] < 1.0);
    }
}

TEST_CASE("train on a synthetic dataset") {
    auto scfg = train_sim_config();
    auto data = make_dataset(2024, 50, scfg, 4.0, 5.0, 0.3);
    auto ncfg = train_tiny_config(scfg.depth_bins, scfg.channels, 8);

    SUBCASE("zero epochs returns the initialization") {
        TrainConfig tcfg;
        tcfg.epochs = 0;
        tcfg.seed = 7;
        auto res = train(data.map, data.queries, tcfg, ncfg);
        CHECK(res.steps == 0);
        CHECK(res.log.empty());
        EdeNet init(ncfg, 7);
        CHECK(params_equal(res.net, init));
    }

    SUBCASE("deterministic under seed") {
        TrainConfig tcfg;
        tcfg.epochs = 1;
        tcfg.max_steps = 8;
        tcfg.num_negatives = 3;
        tcfg.seed = 11;
        auto a = train(data.map, data.queries, tcfg, ncfg);
        auto b = train(data.map, data.queries, tcfg, ncfg);
        CHECK(a.steps == b.steps);
        CHECK(a.steps > 0);
        CHECK(params_equal(a.net, b.net));
        REQUIRE(a.log.size() == b.log.size());
        for (std::size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].loss == b.log[i].loss);
            CHECK(a.log[i].val_recall1 == b.log[i].val_recall1);
        }
    }

    SUBCASE("parameters stay f32-representable after updates") {
        TrainConfig tcfg;
        tcfg.epochs = 1;
        tcfg.max_steps = 4;
        tcfg.num_negatives = 2;
        tcfg.seed = 13;
        auto res = train(data.map, data.queries, tcfg, ncfg);
        REQUIRE(res.steps > 0);
        for (const auto& [name, p] : res.net.named_params())
            for (double v : p->data) CHECK(v == (double)(float)v);
    }

    SUBCASE("loss drops by half over 200 steps") {
        TrainConfig tcfg;
        tcfg.epochs = 100;  // max_steps is the binding limit
        tcfg.max_steps = 200;
        tcfg.num_negatives = 4;
        tcfg.learning_rate = 1e-3;
        tcfg.seed = 5;
        auto res = train(data.map, data.queries, tcfg, ncfg);
        CHECK(res.steps == 200);
        REQUIRE(res.log.size() >= 2);
        const double first = res.log.front().loss;
        const double last = res.log.back().loss;
        CHECK(last <= 0.5 * first);
        // per-epoch validation recall is logged and within range
        for (const auto& e : res.log) {
            CHECK(e.val_recall1 >= 0.0);
            CHECK(e.val_recall1 <= 1.0);
        }
    }

    SUBCASE("no negatives in range skips every query") {
        // 1 m long trajectory: every window centre within 3 m of every other
        SimConfig close_cfg = scfg;
        close_cfg.dx = 0.02;
        auto close = make_dataset(31, 40, close_cfg, 4.0, 4.0, 0.0);
        TrainConfig tcfg;
        tcfg.epochs = 1;
        tcfg.seed = 3;
        auto res = train(close.map, close.queries, tcfg, ncfg);
        CHECK(res.steps == 0);
        CHECK(!res.warnings.empty());
        CHECK(params_equal(res.net, EdeNet(ncfg, 3)));
    }

    SUBCASE("no positives in range skips every query") {
        auto far = data;
        for (auto& pose : far.queries.poses) pose[0] += 1000.0;
        TrainConfig tcfg;
        tcfg.epochs = 1;
        tcfg.seed = 3;
        auto res = train(far.map, far.queries, tcfg, ncfg);
        CHECK(res.steps == 0);
        CHECK(!res.warnings.empty());
    }

    SUBCASE("config and dimension validation") {
        TrainConfig bad;
        bad.margin = 0.0;
        CHECK_THROWS_AS(train(data.map, data.queries, bad, ncfg), ConfigError);
        TrainConfig tcfg;
        GprSequence short_seq = data.queries;
        short_seq.S = 4;
        short_seq.frames.resize((std::size_t)4 * short_seq.D * short_seq.C);
        short_seq.poses.resize(4);
        CHECK_THROWS_AS(train(data.map, short_seq, tcfg, ncfg), UsageError);
        auto wrong = ncfg;
        wrong.depth_bins = 64;
        CHECK_THROWS_AS(train(data.map, data.queries, tcfg, wrong), DimensionError);
    }
}
