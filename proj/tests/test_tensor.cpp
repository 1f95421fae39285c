#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "common/error.hpp"
#include "tensor/checkpoint.hpp"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"
#include "tensor/parameters.hpp"
#include "test_util.hpp"

using namespace cajscc;
using nn::Tensor;
using testing::random_tensor;

namespace {

constexpr int kTrials = 100;
constexpr double kTol = 1e-4;

// Scalar loss with a distinct weight per output coordinate.
Tensor weighted_loss(const Tensor& y, const Tensor& target) { return nn::mse_loss(y, target); }

double check_op(Rng& rng, std::vector<Tensor> inputs, const std::function<Tensor()>& op) {
    const Tensor target = random_tensor(op().shape(), rng, false);
    return nn::finite_difference_check([&] { return weighted_loss(op(), target); }, inputs).max_rel_error;
}

std::size_t dim_between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

}  // namespace

TEST_CASE("fully_connected forward values") {
    Tensor x({2}, {1.0, 2.0}), w({2, 2}, {1, 0, 0, 1}), b({2}, {0.0, 0.0});
    auto y = nn::fully_connected(x, w, b);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    Tensor x2({2}, {1.0, 1.0}), w2({1, 2}, {1.0, 1.0}), b2({1}, std::vector<double>{-2.0});
    CHECK(nn::fully_connected(x2, w2, b2).item() == 0.0);
    CHECK_THROWS_AS(nn::fully_connected(Tensor({3}), w2, b2), DimensionError);
}

TEST_CASE("conv2d forward values and geometry errors") {
    Rng rng(1);
    Tensor x = random_tensor({1, 2, 4, 4}, rng, false);
    Tensor w({2, 2, 1, 1}, {1, 0, 0, 1}), b({2});
    auto y = nn::conv2d(x, w, b, {1, 0, 0});
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);

    Tensor ones3 = Tensor::full({1, 1, 3, 3}, 1.0);
    CHECK(nn::conv2d(ones3, Tensor::full({1, 1, 3, 3}, 1.0), Tensor({1}), {1, 0, 0}).item() == 9.0);

    CHECK_THROWS_AS(nn::conv_output_size(2, 5, {1, 0, 0}), ConfigError);
    CHECK(nn::conv_output_size(32, 3, {2, 1, 0}) == 16);
    CHECK(nn::conv_transpose_output_size(16, 3, {2, 1, 1}) == 32);
}

TEST_CASE("conv_transpose2d is the input-adjoint of conv2d") {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const nn::ConvGeometry g{2, 1, 1};
        Tensor x = random_tensor({1, 3, 6, 6}, rng, false);
        Tensor w = random_tensor({4, 3, 3, 3}, rng, false);
        Tensor y = nn::conv2d(x, w, Tensor({4}), g);
        Tensor u = random_tensor(y.shape(), rng, false);
        Tensor v = nn::conv_transpose2d(u, w, Tensor({3}), g);
        CHECK(v.shape() == x.shape());
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) lhs += y[i] * u[i];
        for (std::size_t i = 0; i < x.numel(); ++i) rhs += x[i] * v[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("batch_norm statistics") {
    Tensor g = Tensor::full({1}, 1.0), b({1});
    nn::BatchNormState s(1);
    Tensor constant = Tensor::full({4, 1, 2, 2}, 3.0);
    const Tensor normed = nn::batch_norm(constant, g, b, s, nn::Mode::Train);
    for (double v : normed.data()) CHECK(v == 0.0);

    nn::BatchNormState s2(1);
    Tensor pair({2, 1}, {0.0, 2.0});
    auto y = nn::batch_norm(pair, g, b, s2, nn::Mode::Train);
    CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-4));

    Rng rng(3);
    nn::BatchNormState s3(3);
    Tensor x = random_tensor({5, 3, 4, 4}, rng, false, -2.0, 7.0);
    auto z = nn::batch_norm(x, Tensor::full({3}, 1.0), Tensor({3}), s3, nn::Mode::Train);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t n = 0; n < 5; ++n)
            for (std::size_t i = 0; i < 16; ++i) mean += z[(n * 3 + c) * 16 + i];
        mean /= 80.0;
        for (std::size_t n = 0; n < 5; ++n)
            for (std::size_t i = 0; i < 16; ++i) var += std::pow(z[(n * 3 + c) * 16 + i] - mean, 2);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(var / 80.0 == doctest::Approx(1.0).epsilon(1e-3));
    }

    nn::BatchNormState fresh(1);
    CHECK_THROWS(nn::batch_norm(pair, g, b, fresh, nn::Mode::Eval));
    fresh.seed_identity();
    CHECK_NOTHROW(nn::batch_norm(pair, g, b, fresh, nn::Mode::Eval));
}

TEST_CASE("prelu branches and slope gradient") {
    Tensor x({2}, {3.0, -2.0}), a = Tensor::full({1}, 0.25, true);
    auto y = nn::prelu(x, a);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -0.5);

    Tensor xn({1}, std::vector<double>{-2.0}), slope = Tensor::full({1}, 0.25, true);
    nn::Tape tape;
    {
        nn::Tape::Scope scope(tape);
        Tensor out = nn::sum(nn::prelu(xn, slope));
        tape.backward(out);
    }
    CHECK(slope.grad()[0] == -2.0);
    const auto r = nn::finite_difference_check([&] { return nn::sum(nn::prelu(xn, slope)); },
                                               std::vector<Tensor>{slope});
    CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("average pooling") {
    Tensor x({1, 2, 2, 2}, {1, 1, 1, 1, 3, 3, 3, 3});
    auto c = nn::avg_pool_channelwise(x);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 3.0);
    const Tensor pooled = nn::avg_pool_spatial(x);
    for (double v : pooled.data()) CHECK(v == 2.0);

    Rng rng(4);
    Tensor r = random_tensor({1, 5, 3, 7}, rng, false);
    auto ac = nn::avg_pool_channelwise(r);
    const double global = std::accumulate(r.data().begin(), r.data().end(), 0.0) / r.numel();
    const double of_means = std::accumulate(ac.data().begin(), ac.data().end(), 0.0) / ac.numel();
    CHECK(std::abs(global - of_means) < 1e-12);
}

TEST_CASE("broadcast masks") {
    Rng rng(5);
    Tensor f = random_tensor({1, 3, 2, 2}, rng, false);
    auto same = nn::elementwise_mul_broadcast(f, Tensor::full({1, 3}, 1.0));
    for (std::size_t i = 0; i < f.numel(); ++i) CHECK(same[i] == f[i]);

    Tensor ab({1, 2, 1, 1}, {1.5, -4.0});
    auto y = nn::elementwise_mul_broadcast(ab, Tensor({1, 2}, {2.0, 0.0}));
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 0.0);

    CHECK_THROWS_AS(nn::elementwise_mul_broadcast(f, Tensor({1, 4})), DimensionError);

    Tensor feat = random_tensor({2, 3, 2, 2}, rng), mask = random_tensor({2, 3}, rng, false);
    nn::Tape tape;
    {
        nn::Tape::Scope scope(tape);
        Tensor s = nn::sum(nn::elementwise_mul_broadcast(feat, mask));
        tape.backward(s);
    }
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 4; ++i) CHECK(feat.grad()[(n * 3 + c) * 4 + i] == mask[n * 3 + c]);
}

TEST_CASE("concat shapes") {
    Tensor a({2, 1}, {1, 2}), b({2, 2}, {3, 4, 5, 6});
    auto c = nn::concat(a, b, 1);
    CHECK(c.shape() == nn::Shape{2, 3});
    CHECK(c[3] == 2.0);
    CHECK(c[5] == 6.0);
    CHECK_THROWS_AS(nn::concat(a, Tensor({3, 2}), 1), DimensionError);
}

TEST_CASE("finite-difference checker on a quadratic") {
    Tensor x({2}, {1.0, 2.0}, true);
    nn::Tape tape;
    {
        nn::Tape::Scope scope(tape);
        Tensor l = nn::mse_loss(x, Tensor({2}));
        tape.backward(l);
    }
    CHECK(x.grad()[0] == doctest::Approx(1.0));
    CHECK(x.grad()[1] == doctest::Approx(2.0));
    // sum(x^2) = 2 * mse(x, 0) for two elements.
    const auto r = nn::finite_difference_check([&] { return nn::scale(nn::mse_loss(x, Tensor({2})), 2.0); },
                                               std::vector<Tensor>{x});
    CHECK(r.max_rel_error < 1e-8);
    CHECK_THROWS_AS(nn::finite_difference_check([&] { return Tensor::scalar(std::nan("")); }, std::vector<Tensor>{x}),
                    NumericError);
}

TEST_CASE("finite difference checker flags kinks inside the stencil") {
    Tensor x({1}, std::vector<double>{2e-7}), slope = Tensor::full({1}, 0.25);
    auto fn = [&] { return nn::sum(nn::prelu(x, slope)); };
    const auto plain = nn::finite_difference_check(fn, std::vector<Tensor>{x});
    CHECK(plain.max_rel_error > 0.1);
    CHECK(plain.skipped == 0);
    nn::GradCheckOptions opt;
    opt.kink_tol = 1e-4;
    const auto guarded = nn::finite_difference_check(fn, std::vector<Tensor>{x}, opt);
    CHECK(guarded.skipped == 1);
    CHECK(guarded.checked == 0);

    Rng rng(12);
    Tensor y = random_tensor({3, 4}, rng);
    const auto smooth = nn::finite_difference_check([&] { return nn::sum(nn::sigmoid(y)); }, std::vector<Tensor>{y}, opt);
    CHECK(smooth.skipped == 0);
    CHECK(smooth.checked == 12);
    CHECK(smooth.max_rel_error < 1e-8);
}

TEST_CASE("gradients match finite differences over random trials") {
    Rng rng(6);
    double worst = 0.0;
    for (int t = 0; t < kTrials; ++t) {
        const std::size_t n = dim_between(rng, 1, 3), cin = dim_between(rng, 1, 3), cout = dim_between(rng, 1, 3);
        const std::size_t hw = dim_between(rng, 3, 6), stride = dim_between(rng, 1, 2);
        {
            Tensor x = random_tensor({n, cin}, rng), w = random_tensor({cout, cin}, rng), b = random_tensor({cout}, rng);
            worst = std::max(worst, check_op(rng, {x, w, b}, [&] { return nn::fully_connected(x, w, b); }));
        }
        {
            Tensor x = random_tensor({n, cin, hw, hw}, rng), w = random_tensor({cout, cin, 3, 3}, rng),
                   b = random_tensor({cout}, rng);
            const nn::ConvGeometry g{stride, 1, 0};
            worst = std::max(worst, check_op(rng, {x, w, b}, [&] { return nn::conv2d(x, w, b, g); }));
        }
        {
            Tensor x = random_tensor({n, cin, hw, hw}, rng), w = random_tensor({cin, cout, 3, 3}, rng),
                   b = random_tensor({cout}, rng);
            const nn::ConvGeometry g{stride, 1, stride - 1};
            worst = std::max(worst, check_op(rng, {x, w, b}, [&] { return nn::conv_transpose2d(x, w, b, g); }));
        }
        {
            Tensor x = random_tensor({n + 1, cin, 2, 2}, rng), g = random_tensor({cin}, rng, true, 0.5, 1.5),
                   b = random_tensor({cin}, rng);
            nn::BatchNormState s(cin);
            worst = std::max(worst, check_op(rng, {x, g, b}, [&] { return nn::batch_norm(x, g, b, s, nn::Mode::Train); }));
        }
        {
            Tensor x = random_tensor({n, 5}, rng), a = random_tensor({1}, rng);
            worst = std::max(worst, check_op(rng, {x, a}, [&] { return nn::prelu(x, a); }));
            worst = std::max(worst, check_op(rng, {x}, [&] { return nn::sigmoid(nn::scale(x, 3.0)); }));
        }
        {
            Tensor x = random_tensor({n, cin, hw, hw}, rng);
            worst = std::max(worst, check_op(rng, {x}, [&] { return nn::avg_pool_channelwise(x); }));
            worst = std::max(worst, check_op(rng, {x}, [&] { return nn::avg_pool_spatial(x); }));
            Tensor cm = random_tensor({n, cin}, rng), sm = random_tensor({n, hw, hw}, rng);
            worst = std::max(worst, check_op(rng, {x, cm}, [&] { return nn::elementwise_mul_broadcast(x, cm); }));
            worst = std::max(worst, check_op(rng, {x, sm}, [&] { return nn::elementwise_mul_broadcast(x, sm); }));
        }
        {
            Tensor a = random_tensor({n, cin}, rng), b = random_tensor({n, cout}, rng), c = random_tensor({n, cin}, rng);
            worst = std::max(worst, check_op(rng, {a, b}, [&] { return nn::concat(a, b, 1); }));
            worst = std::max(worst, check_op(rng, {a, c}, [&] { return nn::add(a, c); }));
            worst = std::max(worst, check_op(rng, {a}, [&] { return nn::reshape(nn::scale(a, -0.7), {cin, n}); }));
            worst = std::max(worst, check_op(rng, {a}, [&] { return nn::sum(a); }));
            worst = std::max(worst, check_op(rng, {a, c}, [&] { return nn::mse_loss(a, c); }));
        }
    }
    CHECK(worst < kTol);
}

TEST_CASE("adam step") {
    nn::ParameterSet ps;
    Tensor p = ps.add("p", Tensor::full({1}, 0.5));
    p.ensure_grad();
    nn::adam_step(ps, {});
    CHECK(p[0] == 0.5);
    CHECK(ps.step() == 1);

    nn::ParameterSet one;
    Tensor q = one.add("q", Tensor::full({1}, 0.0));
    q.ensure_grad()[0] = 1.0;
    nn::AdamOptions opt;
    opt.lr = 0.001;
    nn::adam_step(one, opt);
    // m_hat = 1, v_hat = 1: update = lr / (1 + eps).
    CHECK(q[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));

    nn::ParameterSet missing;
    missing.add("layer.weight", Tensor({2}));
    try {
        nn::adam_step(missing, {});
        FAIL("expected a training error");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("layer.weight") != std::string::npos);
    }
}

TEST_CASE("adam is deterministic over ten steps") {
    auto run = [] {
        Rng rng(9);
        nn::ParameterSet ps;
        Tensor w = ps.add("w", random_tensor({3, 4}, rng, false));
        Tensor x = random_tensor({4}, rng, false), y = random_tensor({3}, rng, false);
        for (int s = 0; s < 10; ++s) {
            ps.zero_grad();
            nn::Tape tape;
            nn::Tape::Scope scope(tape);
            Tensor l = nn::mse_loss(nn::fully_connected(x, w, Tensor({3})), y);
            tape.backward(l);
            nn::adam_step(ps, {});
        }
        return std::vector<double>(w.data().begin(), w.data().end());
    };
    CHECK(run() == run());
}

TEST_CASE("parameter names are unique") {
    nn::ParameterSet ps;
    ps.add("a", Tensor({1}));
    CHECK_THROWS_AS(ps.add("a", Tensor({1})), ConfigError);
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "cajscc_test_ckpt.bin").string();
    Rng rng(10);
    nn::ParameterSet a;
    a.add("w", random_tensor({3, 2}, rng, false));
    a.add("b", random_tensor({3}, rng, false));
    a.add_buffer("bn.mean", random_tensor({2}, rng, false));
    for (auto& e : a.entries()) e.value.ensure_grad()[0] = 0.3;
    nn::adam_step(a, {});
    nn::save_checkpoint(path, a, 42);

    nn::ParameterSet b;
    b.add("w", Tensor({3, 2}));
    b.add("b", Tensor({3}));
    b.add_buffer("bn.mean", Tensor({2}));
    nn::load_checkpoint(path, b, 42);
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const auto& x = a.entries()[i];
        const auto& y = b.entries()[i];
        for (std::size_t k = 0; k < x.value.numel(); ++k) {
            CHECK(y.value[k] == static_cast<double>(static_cast<float>(x.value[k])));
            CHECK(y.first_moment[k] == static_cast<double>(static_cast<float>(x.first_moment[k])));
        }
    }
    CHECK(b.buffers()[0].value[1] == static_cast<double>(static_cast<float>(a.buffers()[0].value[1])));
    CHECK(b.step() == 1);

    CHECK_THROWS_AS(nn::load_checkpoint(path, b, 43), ConfigError);

    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 3);
    CHECK_THROWS_AS(nn::read_checkpoint_file(path), FormatError);
    {
        std::ofstream bad(path, std::ios::binary);
        bad << "XXXX";
    }
    CHECK_THROWS_AS(nn::read_checkpoint_file(path), FormatError);
    fs::remove(path);
}

TEST_CASE("checkpoint byte layout") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "cajscc_test_layout.bin").string();
    nn::CheckpointFile f;
    f.parameters.push_back({"ab", {2}, {1.0f, -2.0f}});
    nn::write_checkpoint_file(path, f);
    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    const std::vector<unsigned char> expect = {'C', 'A', 'J', 'S', 1, 0, 0, 0, 1, 0, 0, 0,  // header
                                               2, 0, 'a', 'b', 1, 2, 0, 0, 0,               // record head
                                               0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0,  // 1.0f, -2.0f
                                               0, 0, 0, 0};                                 // empty Adam section
    CHECK(bytes == expect);
    fs::remove(path);
}
