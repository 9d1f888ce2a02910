#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "uqt/error.hpp"
#include "uqt/metrics.hpp"
#include "uqt/model_io.hpp"
#include "uqt/neural.hpp"

using namespace uqt;

namespace {

struct LinearData {
    Matrix X;
    std::vector<double> y;
};

LinearData linear_data(std::size_t n, double noise_sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    LinearData d{Matrix(n, 1), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        d.X(i, 0) = g(rng);
        d.y[i] = 2.0 * d.X(i, 0) + noise_sd * g(rng);
    }
    return d;
}

}  // namespace

TEST_SUITE("mlp") {
    TEST_CASE("architecture follows the config; log-variance head starts at zero") {
        MLPConfig cfg;
        cfg.hidden_sizes = {7, 4};
        cfg.head = OutputHead::gaussian;
        const auto m = init_mlp(3, cfg);
        REQUIRE(m.layers.size() == 3);
        CHECK(m.layers[0].inputs == 3);
        CHECK(m.layers[0].outputs == 7);
        CHECK(m.layers[1].outputs == 4);
        CHECK(m.layers[2].outputs == 2);
        CHECK(m.parameter_count() == (3 * 7 + 7) + (7 * 4 + 4) + (4 * 2 + 2));
        const std::vector<double> x{0.5, -1.0, 2.0};
        CHECK(m.forward(x).log_var == 0.0);
        CHECK(m.n_features() == 3);
    }

    TEST_CASE("parameters round-trip through the flat vector") {
        MLPConfig cfg;
        cfg.hidden_sizes = {5};
        auto m = init_mlp(2, cfg);
        auto p = m.parameters();
        for (auto& v : p) v *= 0.5;
        m.set_parameters(p);
        CHECK(m.parameters() == p);
        CHECK_THROWS_AS(m.set_parameters(std::vector<double>(3)), ShapeError);
    }

    TEST_CASE("linear data without noise: R2 at least 0.99 after 20 epochs") {
        // 200 points at batch size 4 gives 1000 Adam steps; at the default
        // batch size the run is too short to converge for every init.
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto train = linear_data(200, 0.0, seed);
            const auto test = linear_data(200, 0.0, seed + 100);
            MLPConfig cfg;
            cfg.seed = seed;
            cfg.batch_size = 4;
            const auto m = fit_mlp(train.X, train.y, cfg);
            const auto r2 = r_squared(test.y, m.predict(test.X));
            REQUIRE(r2);
            CHECK(*r2 >= 0.99);
            CHECK(m.loss_trace.size() == 20);
        }
    }

    TEST_CASE("same seed gives identical parameters") {
        const auto d = linear_data(100, 0.3, 5);
        MLPConfig cfg;
        cfg.epochs = 3;
        cfg.seed = 11;
        CHECK(fit_mlp(d.X, d.y, cfg).parameters() == fit_mlp(d.X, d.y, cfg).parameters());
        cfg.seed = 12;
        CHECK(fit_mlp(d.X, d.y, cfg).parameters() != fit_mlp(d.X, d.y, MLPConfig{}).parameters());
    }

    TEST_CASE("gaussian head recovers a constant noise level") {
        const auto train = linear_data(3000, 1.0, 7);
        const auto test = linear_data(500, 1.0, 8);
        MLPConfig cfg;
        cfg.head = OutputHead::gaussian;
        cfg.dropout = 0.0;
        cfg.seed = 1;
        const auto m = fit_mlp(train.X, train.y, cfg);
        double mean_sigma = 0.0;
        for (std::size_t r = 0; r < test.X.rows(); ++r) {
            const auto out = m.forward(test.X.row(r));
            const double sigma = std::exp(0.5 * out.log_var);
            CHECK(sigma > 0.0);
            mean_sigma += sigma / static_cast<double>(test.X.rows());
        }
        CHECK(mean_sigma >= 0.7);
        CHECK(mean_sigma <= 1.3);
    }

    TEST_CASE("property: training loss is non-increasing on average") {
        for (auto head : {OutputHead::scalar, OutputHead::gaussian}) {
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                std::mt19937_64 rng(21 + seed);
                std::normal_distribution<double> g(0.0, 1.0);
                Matrix X(1000, 3);
                std::vector<double> y(1000);
                for (std::size_t i = 0; i < 1000; ++i) {
                    for (std::size_t c = 0; c < 3; ++c) X(i, c) = g(rng);
                    y[i] = std::sin(2.0 * X(i, 0)) + X(i, 1) * X(i, 2) + 0.1 * g(rng);
                }
                MLPConfig cfg;
                cfg.head = head;
                cfg.dropout = head == OutputHead::scalar ? 0.2 : 0.0;
                cfg.seed = seed;
                const auto m = fit_mlp(X, y, cfg);
                REQUIRE(m.loss_trace.size() == 20);
                int increases = 0;
                for (std::size_t e = 1; e < m.loss_trace.size(); ++e) increases += m.loss_trace[e] > m.loss_trace[e - 1] ? 1 : 0;
                CHECK(increases <= 2);
                CHECK(m.loss_trace.back() < m.loss_trace.front());
                CHECK(m.loss_trace.back() == doctest::Approx(mlp_loss(m, X, y)).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("divergence is reported as a training error") {
        const auto d = linear_data(50, 0.0, 1);
        auto y = d.y;
        y[3] = 1e300;
        MLPConfig cfg;
        cfg.epochs = 2;
        CHECK_THROWS_AS(fit_mlp(d.X, y, cfg), TrainingError);
    }

    TEST_CASE("config validation") {
        MLPConfig cfg;
        cfg.epochs = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = MLPConfig{};
        cfg.dropout = 1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = MLPConfig{};
        cfg.hidden_sizes = {0};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }

    TEST_CASE("loss trace CSV and model dump") {
        const auto d = linear_data(100, 0.2, 2);
        MLPConfig cfg;
        cfg.epochs = 4;
        cfg.head = OutputHead::gaussian;
        const auto m = fit_mlp(d.X, d.y, cfg);
        const auto dir = std::filesystem::temp_directory_path() / "uqt_mlp_io";
        std::filesystem::create_directories(dir);
        write_loss_trace(m, dir / "trace.csv");
        std::ifstream in(dir / "trace.csv");
        std::string line;
        std::getline(in, line);
        CHECK(line == "epoch,loss");
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 4);

        save_model(m, dir / "mlp.json");
        const auto back = load_mlp(dir / "mlp.json");
        CHECK(back.parameters() == m.parameters());
        CHECK(back.config.head == OutputHead::gaussian);
        for (std::size_t r = 0; r < 10; ++r) {
            CHECK(back.forward(d.X.row(r)).mean == m.forward(d.X.row(r)).mean);
            CHECK(back.forward(d.X.row(r)).log_var == m.forward(d.X.row(r)).log_var);
        }
        std::filesystem::remove_all(dir);
    }
}

TEST_SUITE("gradient check") {
    TEST_CASE("MSE head on a random 8-sample batch") {
        MLPConfig cfg;
        cfg.hidden_sizes = {6, 5};
        cfg.seed = 9;
        const auto m = init_mlp(4, cfg);
        const auto X = testutil::random_matrix(8, 4, 31);
        const auto y = testutil::random_matrix(8, 1, 32).column(0);
        CHECK(gradient_check(m, X, y) < 1e-4);
    }

    TEST_CASE("Gaussian NLL head on a random 8-sample batch") {
        MLPConfig cfg;
        cfg.hidden_sizes = {6, 5};
        cfg.head = OutputHead::gaussian;
        cfg.seed = 10;
        auto m = init_mlp(4, cfg);
        // Move the log-variance head off its zero init so both outputs matter.
        auto p = m.parameters();
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g(0.0, 0.1);
        for (auto& v : p) v += g(rng);
        m.set_parameters(p);
        const auto X = testutil::random_matrix(8, 4, 33);
        const auto y = testutil::random_matrix(8, 1, 34).column(0);
        CHECK(gradient_check(m, X, y) < 1e-4);
    }

    TEST_CASE("stationary point: zero network, zero targets") {
        MLPConfig cfg;
        cfg.hidden_sizes = {3};
        auto m = init_mlp(2, cfg);
        m.set_parameters(std::vector<double>(m.parameter_count(), 0.0));
        const auto X = testutil::random_matrix(8, 2, 3);
        const std::vector<double> y(8, 0.0);
        const auto grad = mlp_gradient(m, X, y);
        CHECK(grad.back() == 0.0);  // output bias
        for (double g : grad) CHECK(g == 0.0);
    }
}

TEST_SUITE("mc dropout") {
    TEST_CASE("sample mean agrees with the deterministic pass") {
        const auto d = linear_data(400, 0.3, 12);
        MLPConfig cfg;
        cfg.seed = 2;
        const auto m = fit_mlp(d.X, d.y, cfg);
        const int passes = 100;
        int outside = 0;
        for (std::size_t r = 0; r < 20; ++r) {
            const auto s = mc_dropout_samples(m, d.X.row(r), passes, 100 + r);
            const double mean = std::accumulate(s.begin(), s.end(), 0.0) / passes;
            double var = 0.0;
            for (double v : s) var += (v - mean) * (v - mean);
            const double se = std::sqrt(var / (passes - 1)) / std::sqrt(static_cast<double>(passes));
            outside += std::abs(mean - m.predict_row(d.X.row(r))) > 3.0 * se ? 1 : 0;
        }
        // Each query misses the 3-SE band with probability ~0.3%.
        CHECK(outside <= 1);
    }

    TEST_CASE("seeded sampling is reproducible; zero dropout is rejected") {
        const auto d = linear_data(100, 0.3, 1);
        MLPConfig cfg;
        cfg.epochs = 2;
        const auto m = fit_mlp(d.X, d.y, cfg);
        CHECK(mc_dropout_samples(m, d.X.row(0), 50, 9) == mc_dropout_samples(m, d.X.row(0), 50, 9));
        CHECK(mc_dropout_samples(m, d.X.row(0), 50, 9) != mc_dropout_samples(m, d.X.row(0), 50, 10));
        const auto batch = mc_dropout_samples(m, d.X, 30, 4);
        CHECK(batch.rows() == d.X.rows());
        CHECK(batch.cols() == 30);

        cfg.dropout = 0.0;
        const auto det = fit_mlp(d.X, d.y, cfg);
        CHECK_THROWS_AS(mc_dropout_samples(det, d.X.row(0), 50, 9), ConfigError);
    }
}
