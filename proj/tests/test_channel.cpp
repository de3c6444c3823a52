// SPDX-License-Identifier: Apache-2.0
//
// sbfdsim - link-level simulator for sub-band full-duplex cell-free
// massive MIMO joint communication and sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "sbfdsim/channel.hpp"

using namespace sbfdsim;
using Catch::Approx;

namespace
{

// One single-antenna AP at the origin so array gains are exactly one.
ScenarioConfig scalar_cfg()
{
    ScenarioConfig cfg;
    AccessPoint ap;
    ap.id = 0;
    ap.n_antennas = 1;
    cfg.aps.push_back(ap);
    Target tgt;
    tgt.id = 0;
    tgt.x = 150.0;
    tgt.y = 0.0;
    tgt.vx = -30.0;
    tgt.vy = 0.0;
    cfg.targets.push_back(tgt);
    cfg.residual_si_inr_db = -std::numeric_limits<double>::infinity();
    cfg.cli_mode = CliMode::off;
    cfg.noise_enabled = false;
    cfg.model_order = 1;
    return cfg;
}

ResourceGrid ones_grid(int n_sc, int n_sym, int base_sc)
{
    ResourceGrid g;
    g.base_sc = base_sc;
    g.data = Eigen::MatrixXcd::Ones(n_sc, n_sym);
    return g;
}

}  // namespace

TEST_CASE("echo geometry maps to delay and Doppler")
{
    ScenarioConfig cfg = scalar_cfg();
    auto rng = make_stream(cfg.seed, 0, 0, Stream::echo_phase);
    const BeamWeights beam = conjugate_beamformer(1, {0.0});

    EchoParams e = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng);
    CHECK(e.delay_s == Approx(1.00069e-6).epsilon(1e-4));
    CHECK(e.delay_s == Approx(300.0 / kSpeedOfLight));
    // Approaching at 30 m/s shifts the carrier up by 2 v fc / c.
    CHECK(e.doppler_hz == Approx(1400.97).epsilon(1e-4));
    const double phase_step_sc = -kTwoPi * cfg.scs_hz * e.delay_s;
    CHECK(phase_step_sc == Approx(-0.18863).margin(5e-5));
    const double phase_step_sym = kTwoPi * cfg.symbol_duration_s() * e.doppler_hz;
    CHECK(phase_step_sym == Approx(0.31405).margin(5e-5));

    // Tangential motion carries no Doppler.
    cfg.targets[0].vx = 0.0;
    cfg.targets[0].vy = 44.0;
    e = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng);
    CHECK(e.doppler_hz == Approx(0.0).margin(1e-12));

    cfg.targets[0].x = 0.0;
    cfg.targets[0].y = 0.0;
    CHECK_THROWS_AS(echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng),
                    std::invalid_argument);
}

TEST_CASE("echo amplitude realizes the configured reference SNR")
{
    ScenarioConfig cfg = scalar_cfg();
    cfg.targets[0].x = cfg.ref_distance_m;  // target parked at the calibration point
    auto rng = make_stream(1, 0, 0, Stream::echo_phase);
    const BeamWeights beam = conjugate_beamformer(1, {0.0});
    const EchoParams e = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng);
    CHECK(std::abs(e.amp) == Approx(std::pow(10.0, 10.0 / 20.0)));

    // Twice the distance costs (1/2)^2 in two-way amplitude.
    cfg.targets[0].x = 2.0 * cfg.ref_distance_m;
    const EchoParams far = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng);
    CHECK(std::abs(far.amp) == Approx(std::abs(e.amp) / 4.0));

    cfg.targets[0].rcs_scale = 0.5;
    const EchoParams dim = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng);
    CHECK(std::abs(dim.amp) == Approx(std::abs(far.amp) / 2.0));
}

TEST_CASE("bulk echo phase is uniform and per-draw")
{
    const ScenarioConfig cfg = scalar_cfg();
    const BeamWeights beam = conjugate_beamformer(1, {0.0});
    auto rng = make_stream(3, 0, 0, Stream::echo_phase);
    double mean_cos = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
    {
        const EchoParams e = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng);
        mean_cos += std::arg(e.amp) > 0 ? 1.0 : -1.0;
    }
    CHECK(std::abs(mean_cos / n) < 0.05);
}

TEST_CASE("synthesis without echoes, interference, or noise is silent")
{
    const ScenarioConfig cfg = scalar_cfg();
    auto rng_n = make_stream(1, 0, 0, Stream::dl_noise);
    auto rng_i = make_stream(1, 0, 0, Stream::dl_interference);
    const ResourceGrid x = ones_grid(60, 14, 0);
    const ResourceGrid y = synthesize_dl_rx(cfg, 0, x, {}, interference_spec(cfg),
                                            rng_n, rng_i);
    CHECK(y.data.cwiseAbs().maxCoeff() == 0.0);
    CHECK(y.base_sc == 0);
}

TEST_CASE("a single echo modulates the grid with the expected ramps")
{
    ScenarioConfig cfg = scalar_cfg();
    auto rng_p = make_stream(1, 0, 0, Stream::echo_phase);
    auto rng_n = make_stream(1, 0, 0, Stream::dl_noise);
    auto rng_i = make_stream(1, 0, 0, Stream::dl_interference);
    const BeamWeights beam = conjugate_beamformer(1, {0.0});
    const EchoParams e = echo_params(cfg, cfg.aps[0], cfg.targets[0], beam, rng_p);

    auto rng_x = make_stream(1, 0, 0, Stream::dl_waveform);
    const ResourceGrid x = generate_qpsk_grid(600, 14, 0, rng_x);
    const ResourceGrid y =
        synthesize_dl_rx(cfg, 0, x, {e}, interference_spec(cfg), rng_n, rng_i);

    for (int m : {0, 7, 13})
        for (int n : {0, 1, 299, 599})
            CHECK(std::abs(y.data(n, m)) == Approx(std::abs(e.amp)).epsilon(1e-12));

    const auto q = [&](int n, int m) { return y.data(n, m) / x.data(n, m); };
    CHECK(std::arg(q(1, 0) / q(0, 0)) == Approx(-0.18863).margin(5e-5));
    CHECK(std::arg(q(0, 1) / q(0, 0)) == Approx(0.31405).margin(5e-5));
}

TEST_CASE("synthesis is linear in the echo list")
{
    ScenarioConfig cfg = scalar_cfg();
    Target second = cfg.targets[0];
    second.id = 1;
    second.x = 90.0;
    second.y = 10.0;
    second.vx = 12.0;
    cfg.targets.push_back(second);

    const BeamWeights beam = conjugate_beamformer(1, {0.0});
    auto rng_p = make_stream(2, 0, 0, Stream::echo_phase);
    const std::vector<EchoParams> echoes = all_echo_params(cfg, cfg.aps[0], beam, rng_p);
    REQUIRE(echoes.size() == 2);

    auto rng_x = make_stream(2, 0, 0, Stream::dl_waveform);
    const ResourceGrid x = generate_qpsk_grid(120, 14, 36, rng_x);
    const InterferenceSpec off = interference_spec(cfg);

    auto rn = make_stream(9, 0, 0, Stream::dl_noise);
    auto ri = make_stream(9, 0, 0, Stream::dl_interference);
    const ResourceGrid both = synthesize_dl_rx(cfg, 0, x, echoes, off, rn, ri);
    const ResourceGrid first = synthesize_dl_rx(cfg, 0, x, {echoes[0]}, off, rn, ri);
    const ResourceGrid only_second = synthesize_dl_rx(cfg, 0, x, {echoes[1]}, off, rn, ri);
    CHECK((both.data - first.data - only_second.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("segment-list synthesis validates the sub-band layout")
{
    ScenarioConfig cfg = scalar_cfg();
    auto rng_p = make_stream(1, 0, 0, Stream::echo_phase);
    auto rng_x = make_stream(1, 0, 0, Stream::dl_waveform);
    auto rng_n = make_stream(1, 0, 0, Stream::dl_noise);
    auto rng_i = make_stream(1, 0, 0, Stream::dl_interference);
    const BeamWeights beam = conjugate_beamformer(1, {0.0});
    const std::vector<EchoParams> echoes = all_echo_params(cfg, cfg.aps[0], beam, rng_p);

    std::vector<ResourceGrid> grids;
    grids.push_back(generate_qpsk_grid(600, 14, 0, rng_x));
    grids.push_back(generate_qpsk_grid(600, 14, 996, rng_x));
    const auto out = synthesize_dl_rx(cfg, 0, grids, echoes, interference_spec(cfg),
                                      rng_n, rng_i);
    REQUIRE(out.size() == 2);
    CHECK(out[0].base_sc == 0);
    CHECK(out[1].base_sc == 996);

    grids.pop_back();
    CHECK_THROWS_AS(synthesize_dl_rx(cfg, 0, grids, echoes, interference_spec(cfg),
                                     rng_n, rng_i),
                    std::invalid_argument);
    grids.push_back(generate_qpsk_grid(600, 14, 995, rng_x));  // wrong offset
    CHECK_THROWS_AS(synthesize_dl_rx(cfg, 0, grids, echoes, interference_spec(cfg),
                                     rng_n, rng_i),
                    std::invalid_argument);
}

TEST_CASE("interference off produces an all-zero grid")
{
    const ScenarioConfig cfg = scalar_cfg();
    auto rng = make_stream(1, 0, 0, Stream::dl_interference);
    const ResourceGrid x = ones_grid(60, 14, 0);
    const Eigen::MatrixXcd grid = interference_grid(cfg, 0, x, interference_spec(cfg), rng);
    CHECK(grid.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("residual self-interference has the configured power")
{
    ScenarioConfig cfg = scalar_cfg();
    cfg.residual_si_inr_db = 0.0;
    auto rng = make_stream(17, 0, 0, Stream::dl_interference);
    const ResourceGrid x = ones_grid(500, 200, 0);
    const Eigen::MatrixXcd grid = interference_grid(cfg, 0, x, interference_spec(cfg), rng);
    const double mean_power = grid.squaredNorm() / (500.0 * 200.0);
    CHECK(mean_power == Approx(1.0).epsilon(0.05));

    cfg.residual_si_inr_db = 6.0;
    auto rng2 = make_stream(18, 0, 0, Stream::dl_interference);
    const Eigen::MatrixXcd strong = interference_grid(cfg, 0, x, interference_spec(cfg), rng2);
    CHECK(strong.squaredNorm() / (500.0 * 200.0) ==
          Approx(std::pow(10.0, 0.6)).epsilon(0.05));
}

TEST_CASE("structured cross-link interference is a delayed copy of the waveform")
{
    ScenarioConfig cfg = scalar_cfg();
    AccessPoint other;
    other.id = 1;
    other.x = 100.0;
    other.y = 0.0;
    other.n_antennas = 1;
    cfg.aps.push_back(other);
    cfg.cli_mode = CliMode::structured;
    cfg.cli_suppression_db = 35.0;

    auto rng_x = make_stream(5, 0, 0, Stream::dl_waveform);
    const ResourceGrid x = generate_qpsk_grid(600, 14, 996, rng_x);
    auto rng = make_stream(5, 0, 0, Stream::dl_interference);
    const Eigen::MatrixXcd grid = interference_grid(cfg, 0, x, interference_spec(cfg), rng);

    const double amp_expected = ref_amplitude(cfg) * 1.0 * std::pow(10.0, -35.0 / 20.0);
    const auto u = [&](int n, int m) { return grid(n, m) / x.data(n, m); };
    for (int n : {0, 10, 599})
    {
        CHECK(std::abs(u(n, 0)) == Approx(amp_expected).epsilon(1e-12));
        // Zero Doppler: the ratio is symbol-independent.
        CHECK(std::abs(u(n, 0) - u(n, 13)) < 1e-12);
    }
    // One-way delay of the 100 m separation, visible as the subcarrier ramp.
    const double step = std::arg(u(1, 0) / u(0, 0));
    CHECK(step == Approx(-kTwoPi * cfg.scs_hz * 100.0 / kSpeedOfLight).epsilon(1e-9));
}

TEST_CASE("gaussian cross-link interference carries the aggregate power")
{
    ScenarioConfig cfg = scalar_cfg();
    for (int j = 1; j <= 2; ++j)
    {
        AccessPoint other;
        other.id = j;
        other.x = 100.0 * j;
        other.y = 0.0;
        cfg.aps.push_back(other);
    }
    cfg.cli_mode = CliMode::gaussian;
    cfg.cli_suppression_db = 20.0;

    const double supp = std::pow(10.0, -20.0 / 10.0);
    const double a2 = std::pow(ref_amplitude(cfg), 2);
    const double expected = a2 * supp * (std::pow(100.0 / 100.0, 2) + std::pow(100.0 / 200.0, 2));

    auto rng = make_stream(6, 0, 0, Stream::dl_interference);
    const ResourceGrid x = ones_grid(500, 200, 0);
    const Eigen::MatrixXcd grid = interference_grid(cfg, 0, x, interference_spec(cfg), rng);
    CHECK(grid.squaredNorm() / (500.0 * 200.0) == Approx(expected).epsilon(0.05));
}

TEST_CASE("receiver noise is unit variance per resource element")
{
    ScenarioConfig cfg = scalar_cfg();
    cfg.noise_enabled = true;
    auto rng_n = make_stream(21, 0, 0, Stream::dl_noise);
    auto rng_i = make_stream(21, 0, 0, Stream::dl_interference);
    const ResourceGrid x = ones_grid(500, 200, 0);
    const ResourceGrid y =
        synthesize_dl_rx(cfg, 0, x, {}, interference_spec(cfg), rng_n, rng_i);
    CHECK(y.data.squaredNorm() / (500.0 * 200.0) == Approx(1.0).epsilon(0.03));
}

TEST_CASE("uplink channel follows the distance law")
{
    ScenarioConfig cfg = scalar_cfg();
    AccessPoint ap;
    ap.id = 0;
    ap.n_antennas = 4;
    UserEquipment ue;
    ue.x = cfg.ref_distance_m;
    ue.y = 0.0;

    auto rng = make_stream(30, 0, 0, Stream::ul_channel);
    double acc = 0.0;
    const int n_draws = 10000;
    for (int i = 0; i < n_draws; ++i) acc += ul_channel(cfg, ue, ap, rng).squaredNorm();
    CHECK(acc / n_draws == Approx(4.0).epsilon(0.05));

    auto rng_a = make_stream(31, 2, 1, Stream::ul_channel);
    auto rng_b = make_stream(31, 2, 1, Stream::ul_channel);
    CHECK(ul_channel(cfg, ue, ap, rng_a) == ul_channel(cfg, ue, ap, rng_b));

    // Tenfold distance scales the same fading draw by 10^(-3.67/2).
    UserEquipment far = ue;
    far.x = 10.0 * cfg.ref_distance_m;
    auto rng_c = make_stream(31, 2, 1, Stream::ul_channel);
    const Eigen::VectorXcd h_far = ul_channel(cfg, far, ap, rng_c);
    auto rng_d = make_stream(31, 2, 1, Stream::ul_channel);
    const Eigen::VectorXcd h_ref = ul_channel(cfg, ue, ap, rng_d);
    CHECK((h_far - h_ref * std::pow(10.0, -3.67 / 2.0)).norm() < 1e-12);

    UserEquipment on_top;
    on_top.x = ap.x;
    on_top.y = ap.y;
    CHECK_THROWS_AS(ul_channel(cfg, on_top, ap, rng), std::invalid_argument);
}

TEST_CASE("uplink synthesis projects each UE through its channel")
{
    ScenarioConfig cfg = scalar_cfg();
    cfg.noise_enabled = false;
    UserEquipment ue;
    ue.id = 0;
    ue.x = 50.0;
    ue.y = 10.0;
    ue.tx_power = 4.0;
    cfg.ues.push_back(ue);

    AccessPoint ap;
    ap.id = 0;
    ap.n_antennas = 3;

    Eigen::VectorXcd h(3);
    h << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 0.0),
        std::complex<double>(0.0, -2.0);
    const Eigen::MatrixXcd s = Eigen::MatrixXcd::Ones(324, 14);

    auto rng = make_stream(40, 0, 0, Stream::ul_noise);
    const auto y = synthesize_ul_rx(cfg, ap, {s}, {h}, rng);
    REQUIRE(y.size() == 3);
    CHECK((y[0] - 2.0 * s).norm() < 1e-12);  // sqrt(tx_power) = 2
    CHECK(y[1].cwiseAbs().maxCoeff() == 0.0);
    CHECK((y[2] - std::complex<double>(0.0, -4.0) * s).norm() < 1e-12);
}

TEST_CASE("uplink synthesis with no UEs yields noise-only grids of UL shape")
{
    ScenarioConfig cfg = scalar_cfg();
    cfg.noise_enabled = false;
    AccessPoint ap;
    ap.n_antennas = 2;
    auto rng = make_stream(41, 0, 0, Stream::ul_noise);
    const auto y = synthesize_ul_rx(cfg, ap, {}, {}, rng);
    REQUIRE(y.size() == 2);
    CHECK(y[0].rows() == 324);
    CHECK(y[0].cols() == 14);
    CHECK(y[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uplink synthesis rejects mismatched inputs")
{
    ScenarioConfig cfg = scalar_cfg();
    UserEquipment ue;
    cfg.ues.push_back(ue);
    AccessPoint ap;
    ap.n_antennas = 2;
    auto rng = make_stream(42, 0, 0, Stream::ul_noise);

    const Eigen::MatrixXcd s = Eigen::MatrixXcd::Ones(324, 14);
    const Eigen::VectorXcd h = Eigen::VectorXcd::Ones(2);
    CHECK_THROWS_AS(synthesize_ul_rx(cfg, ap, {s}, {}, rng), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_ul_rx(cfg, ap, {s, s}, {h, h}, rng), std::invalid_argument);
    const Eigen::VectorXcd h3 = Eigen::VectorXcd::Ones(3);
    CHECK_THROWS_AS(synthesize_ul_rx(cfg, ap, {s}, {h3}, rng), std::invalid_argument);
}

TEST_CASE("default scenario stays within the stationary-target approximation")
{
    CHECK(range_migration_ok(default_scenario()));

    ScenarioConfig fast = default_scenario();
    fast.targets[0].vx = 4000.0;
    CHECK_FALSE(range_migration_ok(fast));
}
