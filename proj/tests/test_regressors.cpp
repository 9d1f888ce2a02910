#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "uqt/dataset.hpp"
#include "uqt/error.hpp"
#include "uqt/metrics.hpp"
#include "uqt/model_io.hpp"
#include "uqt/quantile.hpp"
#include "uqt/regressors.hpp"
#include "uqt/synthetic.hpp"

using namespace uqt;

namespace {

std::vector<double> linear_target(const Matrix& X, std::uint64_t seed, double noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise);
    std::vector<double> y(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        double v = 0.0;
        for (std::size_t c = 0; c < X.cols(); ++c) v += static_cast<double>(c + 1) * X(r, c);
        y[r] = v + g(rng);
    }
    return y;
}

double stddev(const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST_SUITE("tree") {
    TEST_CASE("two separable points give two leaves") {
        Matrix X(2, 1, std::vector<double>{0, 1});
        const std::vector<double> y{0, 10};
        const auto t = fit_tree(X, y, TreeConfig{}, 1);
        CHECK(t.leaf_count() == 2);
        CHECK(t.predict(X.row(0)) == 0.0);
        CHECK(t.predict(X.row(1)) == 10.0);
        CHECK(t.nodes()[0].threshold == 0.5);
    }

    TEST_CASE("constant target gives a single leaf") {
        const auto X = testutil::random_matrix(30, 3, 4);
        const std::vector<double> y(30, 7.25);
        const auto t = fit_tree(X, y, TreeConfig{}, 1);
        CHECK(t.leaf_count() == 1);
        CHECK(t.predict(X.row(5)) == 7.25);
    }

    TEST_CASE("leaf values are the mean of routed targets (depth 2)") {
        const auto X = testutil::random_matrix(50, 3, 9);
        const auto y = linear_target(X, 9, 0.3);
        TreeConfig cfg;
        cfg.max_depth = 2;
        const auto t = fit_tree(X, y, cfg, 5);
        CHECK(t.depth() <= 2);
        std::map<int, std::pair<double, int>> routed;
        for (std::size_t r = 0; r < 50; ++r) {
            auto& acc = routed[t.leaf_index(X.row(r))];
            acc.first += y[r];
            acc.second++;
        }
        CHECK(routed.size() == t.leaf_count());
        for (const auto& [leaf, acc] : routed) {
            const auto& node = t.nodes()[static_cast<std::size_t>(leaf)];
            CHECK(node.is_leaf());
            CHECK(node.n_samples == acc.second);
            CHECK(node.value == doctest::Approx(acc.first / acc.second).epsilon(1e-12));
        }
    }

    TEST_CASE("unlimited depth reaches zero training error on distinct features") {
        const auto X = testutil::random_matrix(200, 2, 21);
        const auto y = linear_target(X, 21, 1.0);
        for (auto mode : {SplitMode::best, SplitMode::random_threshold}) {
            TreeConfig cfg;
            cfg.split_mode = mode;
            const auto t = fit_tree(X, y, cfg, 3);
            for (std::size_t r = 0; r < 200; ++r) REQUIRE(t.predict(X.row(r)) == y[r]);
        }
    }

    TEST_CASE("min_samples_leaf is honoured") {
        const auto X = testutil::random_matrix(100, 2, 2);
        const auto y = linear_target(X, 2, 0.1);
        TreeConfig cfg;
        cfg.min_samples_leaf = 7;
        const auto t = fit_tree(X, y, cfg, 1);
        for (const auto& n : t.nodes())
            if (n.is_leaf()) CHECK(n.n_samples >= 7);
    }

    TEST_CASE("determinism and errors") {
        const auto X = testutil::random_matrix(80, 4, 6);
        const auto y = linear_target(X, 6, 0.5);
        TreeConfig cfg;
        cfg.split_mode = SplitMode::random_threshold;
        cfg.feature_fraction = 0.5;
        const auto a = fit_tree(X, y, cfg, 77);
        const auto b = fit_tree(X, y, cfg, 77);
        REQUIRE(a.nodes().size() == b.nodes().size());
        for (std::size_t i = 0; i < a.nodes().size(); ++i) {
            CHECK(a.nodes()[i].threshold == b.nodes()[i].threshold);
            CHECK(a.nodes()[i].value == b.nodes()[i].value);
        }
        CHECK_THROWS_AS(fit_tree(Matrix(0, 2), std::vector<double>{}, TreeConfig{}, 1), FitError);
        cfg.min_samples_leaf = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_SUITE("ensembles") {
    TEST_CASE("hand-built forest of constant trees") {
        EnsembleModel m;
        m.kind = EnsembleKind::random_forest;
        m.feature_count = 2;
        for (double v : {1.0, 2.0, 3.0}) m.estimators.push_back(RegressionTree::constant(v, 2));
        const std::vector<double> x{0.3, -4.0};
        CHECK(m.predict_row(x) == 2.0);
        CHECK(m.predict_per_estimator(x) == std::vector<double>{1.0, 2.0, 3.0});
        CHECK_THROWS_AS(m.predict(Matrix(1, 3)), ShapeError);
    }

    TEST_CASE("single-tree forest without bootstrap equals the tree") {
        const auto X = testutil::random_matrix(120, 3, 8);
        const auto y = linear_target(X, 8, 0.2);
        ForestConfig cfg;
        cfg.n_estimators = 1;
        cfg.bootstrap = false;
        const auto forest = fit_random_forest(X, y, cfg, 12);
        const auto& tree = forest.estimators.front();
        const auto Xt = testutil::random_matrix(40, 3, 99);
        for (std::size_t r = 0; r < Xt.rows(); ++r) CHECK(forest.predict_row(Xt.row(r)) == tree.predict(Xt.row(r)));

        const auto et = fit_extra_trees(X, y, cfg, 12);
        CHECK(et.size() == 1);
        for (std::size_t r = 0; r < Xt.rows(); ++r) CHECK(et.predict_row(Xt.row(r)) == et.estimators[0].predict(Xt.row(r)));
    }

    TEST_CASE("forest prediction is exactly the mean of per-estimator predictions") {
        const auto X = testutil::random_matrix(300, 4, 31);
        const auto y = linear_target(X, 31, 0.5);
        ForestConfig cfg;
        cfg.n_estimators = 25;
        const auto m = fit_random_forest(X, y, cfg, 3);
        CHECK(m.size() == 25);
        const auto Xt = testutil::random_matrix(50, 4, 32);
        for (std::size_t r = 0; r < Xt.rows(); ++r) {
            const auto per = m.predict_per_estimator(Xt.row(r));
            CHECK(per.size() == 25);
            const double mean = std::accumulate(per.begin(), per.end(), 0.0) / 25.0;
            CHECK(std::abs(mean - m.predict_row(Xt.row(r))) <= 1e-12 * std::max(1.0, std::abs(mean)));
        }
    }

    TEST_CASE("fitting is deterministic and independent of thread count") {
        const auto X = testutil::random_matrix(400, 3, 41);
        const auto y = linear_target(X, 41, 0.5);
        ForestConfig cfg;
        cfg.n_estimators = 12;
        const auto a = fit_random_forest(X, y, cfg, 5);
        cfg.n_threads = 4;
        const auto b = fit_random_forest(X, y, cfg, 5);
        const auto c = fit_extra_trees(X, y, cfg, 5);
        cfg.n_threads = 1;
        const auto d = fit_extra_trees(X, y, cfg, 5);
        CHECK(to_json(a) == to_json(b));
        CHECK(to_json(c) == to_json(d));
        cfg.n_estimators = 0;
        CHECK_THROWS_AS(fit_random_forest(X, y, cfg, 5), ConfigError);
        CHECK_THROWS_AS(fit_extra_trees(X, y, cfg, 5), ConfigError);
    }

    TEST_CASE("extra trees spread more per estimator than a random forest") {
        const auto cal = default_calendar(2019, 2019);
        const auto s = generate_synthetic(SyntheticConfig{}, 60, 5, cal);
        DatasetConfig dc;
        dc.use_meteo = true;
        dc.use_calendar = true;
        const auto ds = build_windows(s, cal, dc);
        const auto sp = stratified_monthly_split(ds);
        const auto Xtr = ds.X.select_rows(sp.train);
        const auto ytr = select(ds.y, sp.train);
        ForestConfig cfg;
        cfg.n_estimators = 20;
        const auto rf = fit_random_forest(Xtr, ytr, cfg, 1);
        const auto et = fit_extra_trees(Xtr, ytr, cfg, 1);
        double rf_spread = 0.0, et_spread = 0.0;
        for (auto i : sp.test) {
            rf_spread += stddev(rf.predict_per_estimator(ds.X.row(i)));
            et_spread += stddev(et.predict_per_estimator(ds.X.row(i)));
        }
        CHECK(et_spread > rf_spread);
    }

    TEST_CASE("synthetic year: forest R2 at least 0.85; AdaBoost within 0.1 of it") {
        const auto cal = default_calendar(2019, 2020);
        const auto s = generate_synthetic(SyntheticConfig{}, 365, 17, cal);
        DatasetConfig dc;
        dc.use_meteo = true;
        dc.use_calendar = true;
        const auto ds = build_windows(s, cal, dc);
        const auto sp = stratified_monthly_split(ds);
        const auto Xtr = ds.X.select_rows(sp.train);
        const auto ytr = select(ds.y, sp.train);
        const auto Xte = ds.X.select_rows(sp.test);
        const auto yte = select(ds.y, sp.test);
        ForestConfig cfg;
        cfg.n_estimators = 30;
        const auto rf = fit_random_forest(Xtr, ytr, cfg, 2);
        const auto r2_rf = r_squared(yte, rf.predict(Xte));
        REQUIRE(r2_rf);
        CHECK(*r2_rf >= 0.85);
        const auto abr = fit_adaboost_r2(Xtr, ytr, AdaBoostConfig{}, 2);
        const auto r2_abr = r_squared(yte, abr.predict(Xte));
        REQUIRE(r2_abr);
        CHECK(std::abs(*r2_abr - *r2_rf) <= 0.1);
    }
}

TEST_SUITE("gradient boosting") {
    TEST_CASE("zero stages is the train mean") {
        const auto X = testutil::random_matrix(20, 2, 1);
        std::vector<double> y(20);
        std::iota(y.begin(), y.end(), 1.0);
        BoostingConfig cfg;
        cfg.n_estimators = 0;
        const auto m = fit_gradient_boosting(X, y, cfg, 1);
        CHECK(m.size() == 0);
        CHECK(m.predict_row(X.row(3)) == doctest::Approx(10.5));
    }

    TEST_CASE("pinball init is the type-1 tau quantile") {
        const auto X = testutil::random_matrix(10, 1, 1);
        const std::vector<double> y{5, 1, 9, 3, 7, 2, 8, 4, 10, 6};
        BoostingConfig cfg;
        cfg.n_estimators = 0;
        cfg.loss = LossSpec::pinball(0.9);
        CHECK(fit_gradient_boosting(X, y, cfg, 1).init == 9.0);
        cfg.loss = LossSpec::pinball(0.25);
        CHECK(fit_gradient_boosting(X, y, cfg, 1).init == 3.0);
    }

    TEST_CASE("property: training loss is non-increasing over stages") {
        const auto X = testutil::random_matrix(300, 3, 13);
        const auto y = linear_target(X, 13, 0.7);
        for (const auto& loss : {LossSpec::squared(), LossSpec::pinball(0.1), LossSpec::pinball(0.5), LossSpec::pinball(0.9)}) {
            BoostingConfig cfg;
            cfg.n_estimators = 40;
            cfg.loss = loss;
            const auto m = fit_gradient_boosting(X, y, cfg, 7);
            REQUIRE(m.train_loss.size() == 41);
            for (std::size_t i = 1; i < m.train_loss.size(); ++i) CHECK(m.train_loss[i] <= m.train_loss[i - 1] + 1e-9);
            CHECK(m.train_loss.back() < m.train_loss.front());
        }
    }

    TEST_CASE("tau 0.5 tracks per-slot empirical medians") {
        // Ten discrete slots, symmetric (Laplace) noise with scale 4.
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> slot(0, 9);
        std::exponential_distribution<double> ex(0.25);
        std::bernoulli_distribution sign(0.5);
        Matrix X(3000, 1);
        std::vector<double> y(3000);
        std::map<int, std::vector<double>> by_slot;
        for (std::size_t i = 0; i < 3000; ++i) {
            const int k = slot(rng);
            X(i, 0) = k;
            y[i] = 10.0 * k + (sign(rng) ? 1.0 : -1.0) * ex(rng);
            by_slot[k].push_back(y[i]);
        }
        BoostingConfig cfg;
        cfg.loss = LossSpec::pinball(0.5);
        const auto m = fit_gradient_boosting(X, y, cfg, 1);
        for (auto& [k, values] : by_slot) {
            const double median = quantile_type1(values, 0.5);
            const std::vector<double> x{static_cast<double>(k)};
            CHECK(std::abs(m.predict_row(x) - median) < 1.0);
        }
    }

    TEST_CASE("tau 0.9 leaves about 90% of held-out targets below") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.0, 10.0);
        std::normal_distribution<double> g(0.0, 1.0);
        auto make = [&](std::size_t n, Matrix& X, std::vector<double>& y) {
            X = Matrix(n, 1);
            y.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                X(i, 0) = u(rng);
                y[i] = 3.0 * X(i, 0) + (0.5 + 0.3 * X(i, 0)) * g(rng);
            }
        };
        Matrix Xtr, Xte;
        std::vector<double> ytr, yte;
        make(4000, Xtr, ytr);
        make(2000, Xte, yte);
        BoostingConfig cfg;
        cfg.loss = LossSpec::pinball(0.9);
        const auto m = fit_gradient_boosting(Xtr, ytr, cfg, 4);
        const auto pred = m.predict(Xte);
        std::size_t below = 0;
        for (std::size_t i = 0; i < yte.size(); ++i) below += yte[i] <= pred[i] ? 1 : 0;
        const double frac = static_cast<double>(below) / static_cast<double>(yte.size());
        CHECK(frac >= 0.87);
        CHECK(frac <= 0.93);
    }

    TEST_CASE("invalid tau is a config error") {
        const auto X = testutil::random_matrix(10, 1, 1);
        const std::vector<double> y(10, 1.0);
        BoostingConfig cfg;
        for (double tau : {0.0, 1.0, -0.2, 1.5}) {
            cfg.loss = LossSpec::pinball(tau);
            CHECK_THROWS_AS(fit_gradient_boosting(X, y, cfg, 1), ConfigError);
        }
    }
}

TEST_SUITE("adaboost") {
    TEST_CASE("single round predicts the single tree") {
        const auto X = testutil::random_matrix(100, 2, 17);
        const auto y = linear_target(X, 17, 0.3);
        AdaBoostConfig cfg;
        cfg.n_estimators = 1;
        const auto m = fit_adaboost_r2(X, y, cfg, 4);
        REQUIRE(m.size() == 1);
        for (std::size_t r = 0; r < 20; ++r) CHECK(m.predict_row(X.row(r)) == m.estimators[0].predict(X.row(r)));
    }

    TEST_CASE("perfectly fittable data stops after the first round") {
        Matrix X(60, 1);
        std::vector<double> y(60);
        for (std::size_t i = 0; i < 60; ++i) {
            X(i, 0) = i < 30 ? 0.0 : 1.0;
            y[i] = 10.0 * X(i, 0);
        }
        const auto m = fit_adaboost_r2(X, y, AdaBoostConfig{}, 1);
        CHECK(m.size() == 1);
        CHECK(m.predict_row(X.row(5)) == 0.0);
        CHECK(m.predict_row(X.row(55)) == 10.0);
    }

    TEST_CASE("weights are positive and prediction is the weighted median") {
        const auto X = testutil::random_matrix(300, 3, 23);
        const auto y = linear_target(X, 23, 1.0);
        AdaBoostConfig cfg;
        cfg.n_estimators = 30;
        const auto m = fit_adaboost_r2(X, y, cfg, 9);
        REQUIRE(m.size() >= 2);
        REQUIRE(m.weights.size() == m.size());
        for (double w : m.weights) CHECK(w > 0.0);
        const auto Xt = testutil::random_matrix(30, 3, 24);
        for (std::size_t r = 0; r < Xt.rows(); ++r) {
            const auto per = m.predict_per_estimator(Xt.row(r));
            // Brute force: smallest prediction whose cumulative weight reaches half.
            std::vector<std::size_t> order(per.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return per[a] < per[b]; });
            const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
            double cum = 0.0, expected = per[order.back()];
            for (auto i : order) {
                cum += m.weights[i];
                if (cum >= 0.5 * total * (1.0 - 1e-12)) {
                    expected = per[i];
                    break;
                }
            }
            CHECK(m.predict_row(Xt.row(r)) == expected);
        }
    }
}

TEST_SUITE("pinball loss") {
    TEST_CASE("formula") {
        CHECK(pinball_loss(0.9, 10, 8) == doctest::Approx(1.8));
        CHECK(pinball_loss(0.9, 8, 10) == doctest::Approx(0.2));
        for (double tau : {0.05, 0.5, 0.95}) CHECK(pinball_loss(tau, 3.3, 3.3) == 0.0);
    }

    TEST_CASE("property: convex and minimised over constants by the type-1 quantile") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(0.0, 3.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> y(17);
            for (auto& v : y) v = g(rng);
            const double tau = 0.05 + 0.9 * (trial / 49.0);
            auto total = [&](double c) {
                double s = 0.0;
                for (double v : y) s += pinball_loss(tau, v, c);
                return s;
            };
            const double q = quantile_type1(y, tau);
            // Brute-force scan of the candidate set (the sample points) plus a fine grid.
            double best = total(q);
            for (double v : y) CHECK(total(v) >= best - 1e-9);
            for (double c = -12.0; c <= 12.0; c += 0.01) CHECK(total(c) >= best - 1e-9);
            // Midpoint convexity.
            for (double a = -6.0; a <= 6.0; a += 1.5)
                for (double b = a + 0.5; b <= 6.0; b += 1.5) CHECK(total(0.5 * (a + b)) <= 0.5 * (total(a) + total(b)) + 1e-9);
        }
    }
}

TEST_SUITE("model dumps") {
    TEST_CASE("ensemble and AdaBoost dumps reload to identical predictions") {
        const auto X = testutil::random_matrix(200, 3, 50);
        const auto y = linear_target(X, 50, 0.4);
        ForestConfig fc;
        fc.n_estimators = 5;
        BoostingConfig bc;
        bc.n_estimators = 10;
        bc.loss = LossSpec::pinball(0.8);
        AdaBoostConfig ac;
        ac.n_estimators = 10;
        const std::vector<EnsembleModel> models{fit_random_forest(X, y, fc, 1), fit_extra_trees(X, y, fc, 1),
                                                fit_gradient_boosting(X, y, bc, 1), fit_adaboost_r2(X, y, ac, 1)};
        const auto path = std::filesystem::temp_directory_path() / "uqt_dump_test.json";
        for (const auto& m : models) {
            save_model(m, path);
            const auto back = load_ensemble(path);
            CHECK(back.kind == m.kind);
            CHECK(back.size() == m.size());
            for (std::size_t r = 0; r < X.rows(); ++r) REQUIRE(back.predict_row(X.row(r)) == m.predict_row(X.row(r)));
        }
        std::filesystem::remove(path);
        CHECK_THROWS_AS(load_ensemble(path), ModelError);
        auto bad = to_json(models[0]);
        bad["format"] = "something-else";
        CHECK_THROWS_AS(ensemble_from_json(bad), ModelError);
    }
}
