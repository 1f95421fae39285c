#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "common/error.hpp"
#include "model/cajscc_model.hpp"
#include "phy/grid_ops.hpp"
#include "tensor/checkpoint.hpp"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"
#include "test_util.hpp"
#include "train/link.hpp"
#include "train/metrics.hpp"

using namespace cajscc;
using model::CajsccModel;
using model::Variant;
using nn::Tensor;
using phy::cplx;
using testing::random_tensor;

namespace {

csi::CsiVector random_csi(std::size_t l_f, double mu, Rng& rng, csi::SubcarrierPermutation& perm) {
    std::vector<cplx> h(l_f);
    for (auto& v : h) v = rng.complex_normal(1.0);
    perm = csi::sort_subcarriers(h);
    return csi::build_csi_vector(h, mu);
}

std::vector<cplx> grid_values(const phy::ComplexGrid& g) { return {g.values().begin(), g.values().end()}; }

}  // namespace

TEST_CASE("FL stage shapes") {
    nn::ParameterSet ps;
    Rng rng(1);
    model::FlBlock down(ps, "d", model::FlKind::Down, 3, 16, 3, {2, 1, 0}, 1);
    auto y = down.forward(random_tensor({2, 3, 32, 32}, rng, false), nn::Mode::Train);
    CHECK(y.shape() == nn::Shape{2, 16, 16, 16});
    model::FlBlock up(ps, "u", model::FlKind::Up, 16, 3, 3, {2, 1, 1}, 1);
    CHECK(up.forward(y, nn::Mode::Train).shape() == nn::Shape{2, 3, 32, 32});
}

TEST_CASE("default architecture") {
    model::ModelConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    const auto stages = cfg.encoder_stages();
    REQUIRE(stages.size() == 5);
    CHECK(stages[0].height == 16);
    CHECK(stages[4].channels == 16);
    CHECK(stages[4].height * stages[4].width == 64);
    CHECK(cfg.bandwidth_ratio() == doctest::Approx(1.0 / 6.0));
    CHECK(model::n_s_for_ratio(3, 32, 32, 64, 1, 6) == 8);
    CHECK(model::n_s_for_ratio(3, 32, 32, 64, 1, 12) == 4);
    CHECK_THROWS_AS(model::n_s_for_ratio(3, 32, 32, 64, 1, 7), ConfigError);

    model::ModelConfig half = cfg;
    half.n_s = 4;
    CHECK(half.bandwidth_ratio() == doctest::Approx(1.0 / 12.0));

    model::ModelConfig bad = cfg;
    bad.strides = {2, 1, 1, 1, 1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("CIFAR-size encode and decode shapes") {
    model::ModelConfig cfg;
    cfg.widths = {8, 8, 8, 8};
    CajsccModel m(cfg, 1);
    Rng rng(2);
    csi::SubcarrierPermutation perm;
    const auto c = random_csi(64, 10.0, rng, perm);
    const auto grid = m.encode(random_tensor({3, 32, 32}, rng, false, 0.0, 1.0), c, perm);
    CHECK(grid.rows() == 8);
    CHECK(grid.cols() == 64);
    const auto img = m.decode(grid, c, perm);
    CHECK(img.shape() == nn::Shape{3, 32, 32});
}

TEST_CASE("attention input sizes") {
    nn::ParameterSet ps;
    model::ClModule cl(ps, "cl", 64, 8, 8, 65, true, 1);
    CHECK(cl.channel_input_size() == 129);
    CHECK(cl.spatial_input_size() == 129);
}

TEST_CASE("attention with forced unit masks is the identity") {
    nn::ParameterSet ps;
    model::ClModule cl(ps, "cl", 4, 3, 3, 17, true, 2);
    cl.force_identity_masks();
    Rng rng(3);
    Tensor f = random_tensor({2, 4, 3, 3}, rng, false), c = random_tensor({2, 17}, rng, false);
    for (const Tensor& y : {cl.channel_attention(f, c), cl.spatial_attention(f, c), cl.forward(f, c)}) {
        for (std::size_t i = 0; i < f.numel(); ++i) CHECK(y[i] == f[i]);
    }
    CHECK_THROWS_AS(cl.forward(f, random_tensor({2, 16}, rng, false)), DimensionError);
}

TEST_CASE("spatial attention on a constant input") {
    nn::ParameterSet ps;
    model::ClModule cl(ps, "cl", 3, 2, 2, 5, true, 4);
    Tensor f = Tensor::full({1, 3, 2, 2}, 0.7);
    Rng rng(4);
    Tensor c = random_tensor({1, 5}, rng, false);
    const Tensor y = cl.spatial_attention(f, c);
    for (std::size_t ch = 1; ch < 3; ++ch)
        for (std::size_t p = 0; p < 4; ++p) CHECK(y[ch * 4 + p] == y[p]);
}

TEST_CASE("attention module gradients") {
    nn::ParameterSet ps;
    model::ClModule cl(ps, "cl", 3, 3, 3, 5, true, 5);
    Rng rng(6);
    Tensor f = random_tensor({2, 3, 3, 3}, rng), c = random_tensor({2, 5}, rng, false);
    const Tensor target = random_tensor({2, 3, 3, 3}, rng, false);
    std::vector<Tensor> inputs = ps.tensors();
    inputs.push_back(f);
    const auto r = nn::finite_difference_check([&] { return nn::mse_loss(cl.forward(f, c), target); }, inputs);
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("encoder output meets the power constraint") {
    CajsccModel m(testing::tiny_model(), 3);
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        csi::SubcarrierPermutation perm;
        const auto c = random_csi(16, rng.uniform(0.0, 20.0), rng, perm);
        const auto g = m.encode(random_tensor({1, 8, 8}, rng, false, 0.0, 1.0), c, perm);
        CHECK(std::abs(g.mean_power() - 1.0) < 1e-9);
    }
}

TEST_CASE("decoder output range and noiseless smoke run") {
    CajsccModel m(testing::tiny_model(), 4);
    Rng rng(8);
    csi::SubcarrierPermutation perm;
    const auto c = random_csi(16, 20.0, rng, perm);
    const Tensor x = random_tensor({1, 8, 8}, rng, false, 0.0, 1.0);
    const auto y = m.decode(m.encode(x, c, perm), c, perm);
    CHECK(y.shape() == x.shape());
    for (double v : y.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const double p = train::psnr(x.data(), y.data());
    CHECK(std::isfinite(p));
    CHECK(p > 0.0);
}

TEST_CASE("subcarrier mapping follows the permutation") {
    CajsccModel m(testing::tiny_model(), 5);
    Rng rng(9);
    csi::SubcarrierPermutation perm;
    const auto c = random_csi(16, 10.0, rng, perm);
    const Tensor x = random_tensor({1, 8, 8}, rng, false, 0.0, 1.0);
    const auto physical = m.encode(x, c, perm);
    const std::vector<csi::CsiVector> sorted{csi::permute(c, perm)};
    const Tensor slots = m.encode_batch(nn::reshape(x, {1, 1, 8, 8}), model::csi_features(sorted), nn::Mode::Eval);
    const auto slot_grid = phy::tensor_to_grid(slots, 0);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t k = 0; k < 16; ++k) CHECK(physical(s, perm.forward[k]) == slot_grid(s, k));
}

TEST_CASE("variants") {
    CajsccModel dual(testing::tiny_model(8, Variant::Dual), 6);
    CajsccModel ch(testing::tiny_model(8, Variant::ChannelOnly), 6);
    CajsccModel none(testing::tiny_model(8, Variant::None), 6);
    CHECK(ch.parameter_count() < dual.parameter_count());
    CHECK(none.parameter_count() < ch.parameter_count());

    Rng rng(10);
    const Tensor x = random_tensor({1, 8, 8}, rng, false, 0.0, 1.0);
    csi::SubcarrierPermutation p1, p2;
    const auto c1 = random_csi(16, 3.0, rng, p1);
    const auto c2 = random_csi(16, 17.0, rng, p2);
    const auto id = csi::SubcarrierPermutation::identity(16);
    CHECK(grid_values(none.encode(x, c1, id)) == grid_values(none.encode(x, c2, id)));
    CHECK(testing::max_abs_diff(grid_values(dual.encode(x, c1, id)), grid_values(dual.encode(x, c2, id))) > 1e-6);
}

TEST_CASE("unit masks make the dual model equal to the none variant") {
    CajsccModel dual(testing::tiny_model(8, Variant::Dual), 7);
    CajsccModel none(testing::tiny_model(8, Variant::None), 7);
    dual.force_identity_masks();
    Rng rng(11);
    for (int t = 0; t < 5; ++t) {
        csi::SubcarrierPermutation perm;
        const auto c = random_csi(16, 10.0, rng, perm);
        const Tensor x = random_tensor({1, 8, 8}, rng, false, 0.0, 1.0);
        const auto gd = dual.encode(x, c, perm);
        const auto gn = none.encode(x, c, perm);
        CHECK(testing::max_abs_diff(grid_values(gd), grid_values(gn)) < 1e-6);
        const auto yd = dual.decode(gd, c, perm);
        const auto yn = none.decode(gd, c, perm);
        for (std::size_t i = 0; i < yd.numel(); ++i) CHECK(std::abs(yd[i] - yn[i]) < 1e-6);
    }
}

TEST_CASE("every parameter receives a gradient through the link") {
    CajsccModel m(testing::tiny_model(), 8);
    const auto ofdm = testing::tiny_ofdm();
    Rng rng(12);
    std::vector<train::LinkDraw> draws;
    for (std::size_t b = 0; b < 3; ++b) {
        Rng cr(1, "c", b), nr(1, "n", b);
        draws.push_back(train::draw_link(ofdm, csi::EstimatorKind::Mmse, 10.0, cr, nr));
    }
    const Tensor x = random_tensor({3, 1, 8, 8}, rng, false, 0.0, 1.0);
    nn::Tape tape;
    {
        nn::Tape::Scope scope(tape);
        Tensor l = nn::mse_loss(train::run_link(m, x, draws, nn::Mode::Train).reconstruction, x);
        tape.backward(l);
    }
    for (const auto& e : m.params().entries()) {
        INFO(e.name);
        CHECK(e.value.has_grad());
    }
}

TEST_CASE("checkpoints refuse a different architecture") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "cajscc_test_model.ckpt").string();
    CajsccModel dual(testing::tiny_model(8, Variant::Dual), 9);
    nn::save_checkpoint(path, dual.params(), dual.config().arch_hash());
    CajsccModel again(testing::tiny_model(8, Variant::Dual), 10);
    nn::load_checkpoint(path, again.params(), again.config().arch_hash());
    CHECK(again.params().entries()[0].value[0] == static_cast<double>(static_cast<float>(dual.params().entries()[0].value[0])));
    CajsccModel ch(testing::tiny_model(8, Variant::ChannelOnly), 9);
    CHECK_THROWS_AS(nn::load_checkpoint(path, ch.params(), ch.config().arch_hash()), ConfigError);
    fs::remove(path);
}

TEST_CASE("variant names") {
    CHECK(model::parse_variant("channel-only") == Variant::ChannelOnly);
    CHECK(model::to_string(Variant::None) == "none");
    CHECK_THROWS_AS(model::parse_variant("spatial"), ConfigError);
}
