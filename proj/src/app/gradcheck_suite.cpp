#include "app/gradcheck_suite.hpp"

#include "common/rng.hpp"
#include "model/cajscc_model.hpp"
#include "phy/grid_ops.hpp"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"
#include "train/link.hpp"

namespace cajscc::app {

namespace {

using nn::Tensor;

Tensor random_tensor(nn::Shape shape, Rng& rng, bool grad = true, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape), grad);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

struct Suite {
    Rng rng;
    nn::GradCheckOptions options;
    std::vector<GradCheckResult> results;

    // Loss is the MSE of the op output against a fixed random target, which
    // keeps every output coordinate in play with a distinct weight.
    void check(const std::string& name, std::vector<Tensor> inputs, const std::function<Tensor()>& op) {
        const Tensor probe = op();
        const Tensor target = random_tensor(probe.shape(), rng, false);
        const auto report =
            nn::finite_difference_check([&] { return nn::mse_loss(op(), target); }, inputs, options);
        results.push_back({name, report.max_rel_error, report.checked, report.skipped});
    }
};

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, double eps) {
    Suite s{Rng(seed, "gradcheck"), {}, {}};
    s.options.eps = eps;
    s.options.seed = seed;
    s.options.kink_tol = 1e-4;
    auto& rng = s.rng;

    {
        Tensor x = random_tensor({3, 5}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({4}, rng);
        s.check("fully_connected", {x, w, b}, [=] { return nn::fully_connected(x, w, b); });
    }
    {
        Tensor x = random_tensor({2, 3, 6, 6}, rng), w = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4}, rng);
        s.check("conv2d", {x, w, b}, [=] { return nn::conv2d(x, w, b, {2, 1, 0}); });
    }
    {
        Tensor x = random_tensor({2, 3, 3, 3}, rng), w = random_tensor({3, 4, 3, 3}, rng), b = random_tensor({4}, rng);
        s.check("conv_transpose2d", {x, w, b}, [=] { return nn::conv_transpose2d(x, w, b, {2, 1, 1}); });
    }
    {
        Tensor x = random_tensor({4, 3, 2, 2}, rng), g = random_tensor({3}, rng, true, 0.5, 1.5),
               b = random_tensor({3}, rng);
        auto state = std::make_shared<nn::BatchNormState>(3);
        s.check("batch_norm", {x, g, b}, [=] { return nn::batch_norm(x, g, b, *state, nn::Mode::Train); });
    }
    {
        Tensor x = random_tensor({2, 7}, rng), a = Tensor::full({1}, 0.25, true);
        s.check("prelu", {x, a}, [=] { return nn::prelu(x, a); });
    }
    {
        Tensor x = random_tensor({2, 6}, rng, true, -3.0, 3.0);
        s.check("sigmoid", {x}, [=] { return nn::sigmoid(x); });
    }
    {
        Tensor x = random_tensor({2, 3, 4, 4}, rng);
        s.check("avg_pool_channelwise", {x}, [=] { return nn::avg_pool_channelwise(x); });
        s.check("avg_pool_spatial", {x}, [=] { return nn::avg_pool_spatial(x); });
    }
    {
        Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 4}, rng);
        s.check("concat", {a, b}, [=] { return nn::concat(a, b, 1); });
    }
    {
        Tensor x = random_tensor({2, 3, 4, 4}, rng), cm = random_tensor({2, 3}, rng), sm = random_tensor({2, 4, 4}, rng);
        s.check("channel_mask", {x, cm}, [=] { return nn::elementwise_mul_broadcast(x, cm); });
        s.check("spatial_mask", {x, sm}, [=] { return nn::elementwise_mul_broadcast(x, sm); });
    }
    {
        Tensor a = random_tensor({2, 6}, rng), b = random_tensor({2, 6}, rng);
        s.check("reshape", {a}, [=] { return nn::reshape(a, {3, 4}); });
        s.check("add", {a, b}, [=] { return nn::add(a, b); });
        s.check("scale", {a}, [=] { return nn::scale(a, -1.7); });
        s.check("sum", {a}, [=] { return nn::sum(a); });
        s.check("mse_loss", {a, b}, [=] { return nn::mse_loss(a, b); });
    }
    {
        const std::size_t l_f = 8;
        Tensor g = random_tensor({2, 2, 3, l_f}, rng);
        std::vector<std::vector<phy::cplx>> coeffs(2);
        std::vector<std::vector<std::size_t>> index(2);
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t k = 0; k < l_f; ++k) coeffs[b].push_back(rng.complex_normal(1.0));
            index[b] = csi::sort_subcarriers(coeffs[b]).forward;
        }
        s.check("power_normalize", {g}, [=] { return phy::power_normalize(g, 1.0); });
        s.check("scale_subcarriers", {g}, [=] { return phy::scale_subcarriers(g, coeffs); });
        s.check("gather_subcarriers", {g}, [=] { return phy::gather_subcarriers(g, index); });
    }
    {
        model::ModelConfig cfg;
        cfg.channels = 1;
        cfg.height = 8;
        cfg.width = 8;
        cfg.l_f = 16;
        cfg.n_s = 2;
        cfg.widths = {4, 4, 4, 4};
        cfg.strides = {2, 1, 1, 1, 1};
        auto model = std::make_shared<model::CajsccModel>(cfg, derive_seed(seed, "init"));
        phy::OfdmConfig ofdm;
        ofdm.l_f = 16;
        ofdm.n_s = 2;
        ofdm.cp_len = 4;
        ofdm.l_t = 4;
        std::vector<train::LinkDraw> draws;
        for (std::size_t b = 0; b < 2; ++b) {
            Rng channel_rng(seed, "channel", b), noise_rng(seed, "noise", b);
            draws.push_back(train::draw_link(ofdm, csi::EstimatorKind::Mmse, 10.0, channel_rng, noise_rng));
        }
        const Tensor images = random_tensor({2, 1, 8, 8}, rng, false, 0.0, 1.0);
        auto chain = [=] { return nn::mse_loss(train::run_link(*model, images, draws, nn::Mode::Train).reconstruction, images); };
        nn::GradCheckOptions opt = s.options;
        opt.max_coords_per_input = 8;
        const auto report = nn::finite_difference_check(chain, model->params().tensors(), opt);
        s.results.push_back({"link_chain", report.max_rel_error, report.checked, report.skipped});
    }
    return s.results;
}

}  // namespace cajscc::app
