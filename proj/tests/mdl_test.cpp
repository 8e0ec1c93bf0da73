#include <doctest.h>

#include <cmath>
#include <random>

#include "presage/metrics.hpp"
#include "presage/mdl.hpp"

using namespace presage;
using namespace presage::mdl;

namespace {

Series make_series(std::initializer_list<double> values, double t0 = 0.0, double dt = 1.0) {
    Series s;
    double t = t0;
    for (double v : values) {
        s.push_back({t, v});
        t += dt;
    }
    return s;
}

Series random_series(std::mt19937_64& rng, std::size_t n, double scale) {
    Series s;
    for (std::size_t i = 0; i < n; ++i) {
        double v = scale * (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
        s.push_back({static_cast<double>(i), std::floor(v)});
    }
    return s;
}

}  // namespace

TEST_CASE("smoothing edge policy") {
    auto s = make_series({0, 10, 20, 30});
    auto w1 = smooth(s, 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(w1[i].value == s[i].value);
        CHECK(w1[i].t == s[i].t);
    }
    auto w2 = smooth(s, 2);
    CHECK(w2[0].value == 0);
    CHECK(w2[1].value == 5);
    CHECK(w2[2].value == 15);
    CHECK(w2[3].value == 25);

    auto c = smooth(make_series({4, 4, 4}), 3);
    for (const auto& e : c) {
        CHECK(e.value == 4);
    }
    CHECK_THROWS_AS(smooth(s, 0), std::domain_error);
}

TEST_CASE("prediction extrapolates the smoothed tail") {
    Hypothesis h;
    h.window = 1;
    h.step_size = 10.0;
    Series s{{0, 0}, {10, 100}};
    auto p = predict(h, s, 2);
    REQUIRE(p.size() == 2);
    CHECK(p[0].t == 20);
    CHECK(p[0].value == doctest::Approx(200));
    CHECK(p[1].t == 30);
    CHECK(p[1].value == doctest::Approx(300));

    Hypothesis hc;
    hc.step_size = 5.0;
    Series constant{{0, 7}, {5, 7}};
    for (const auto& e : predict(hc, constant, 3)) {
        CHECK(e.value == doctest::Approx(7));
    }

    // hand-evaluated: smooth w=2 -> (0,0),(1,5),(2,12); slope 7; value(3) = 19
    Hypothesis h2;
    h2.window = 2;
    h2.step_size = 1.0;
    Series s2{{0, 0}, {1, 10}, {2, 14}};
    auto p2 = predict(h2, s2, 1);
    REQUIRE(p2.size() == 1);
    CHECK(p2[0].t == 3);
    CHECK(p2[0].value == doctest::Approx(19.0));

    CHECK(predict(h2, s2, 0).empty());

    Series single{{0, 42}};
    CHECK(predicted_value_at(h2, single, 100.0) == doctest::Approx(42.0));
}

TEST_CASE("residuals by definition") {
    Series a{{0, 10}, {1, 20}};
    Series p{{0, 8}, {1, 25}};
    auto e = residual(a, p);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == 2);
    CHECK(e[1] == -5);

    auto zero = residual(a, a);
    CHECK(zero[0] == 0);
    CHECK(zero[1] == 0);

    Series shorter{{0, 8}};
    CHECK_THROWS_AS(residual(a, shorter), std::invalid_argument);
    Series shifted{{0, 8}, {2, 25}};
    CHECK_THROWS_AS(residual(a, shifted), std::invalid_argument);
}

TEST_CASE("residual codec round-trips with run escapes") {
    std::vector<std::int64_t> residuals{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, -7, 0, 1};
    BitString bits;
    encode_residuals(residuals, bits);
    BitReader r(bits);
    auto back = decode_residuals(r);
    CHECK(back == residuals);

    // a long zero run costs far fewer bits than literal zeros
    std::vector<std::int64_t> run(200, 0);
    BitString run_bits;
    encode_residuals(run, run_bits);
    CHECK(run_bits.size() < 30);

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::int64_t> xs;
        std::size_t n = 1 + rng() % 64;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 3 == 0) {
                xs.insert(xs.end(), rng() % 20, 0);
            }
            xs.push_back(static_cast<std::int64_t>(rng() % 2001) - 1000);
        }
        BitString b;
        encode_residuals(xs, b);
        BitReader rd(b);
        CHECK(decode_residuals(rd) == xs);
    }
}

TEST_CASE("description length components") {
    Hypothesis h;
    h.window = 1;

    Series single{{0, 123}};
    CHECK(description_length(h, single) == kHeaderBits + kHypothesisCodeBits + 32);

    // exactly linear, 16+ samples: strictly below the passive encoding
    Series linear;
    for (int i = 0; i < 32; ++i) {
        linear.push_back({static_cast<double>(i), 100.0 + 10.0 * i});
    }
    auto active_bits = description_length(h, linear);
    auto passive = encode_packet(h, linear, PacketMode::passive);
    CHECK(active_bits < passive.total_length());
    // residuals vanish once two samples are known
    auto res = coding_residuals(h, rounded_values(linear));
    for (std::size_t i = 1; i < res.size(); ++i) {
        CHECK(res[i] == 0);
    }

    // incompressible data: active cannot beat passive by more than the
    // header + code overhead
    std::mt19937_64 rng(43);
    auto noisy = random_series(rng, 64, 2.0e6);
    auto dl_active = description_length(h, noisy);
    auto dl_passive = encode_packet(h, noisy, PacketMode::passive).total_length();
    CHECK(dl_active + kHeaderBits + kHypothesisCodeBits >= dl_passive);
}

TEST_CASE("hypothesis selection scans the grid") {
    std::vector<std::size_t> grid{1, 2, 4, 8};

    Series linear;
    for (int i = 0; i < 64; ++i) {
        linear.push_back({static_cast<double>(i), 50.0 + 3.0 * i});
    }
    auto [h_lin, bits_lin] = select_hypothesis(grid, linear);
    CHECK(h_lin.window == 1);
    // exhaustive scan is its own oracle
    for (std::size_t w : grid) {
        Hypothesis h;
        h.window = static_cast<std::uint16_t>(w);
        CHECK(bits_lin <= description_length(h, linear));
    }
    // on compressible data the selection never loses to the passive form by
    // more than the header + code overhead
    auto passive_bits = encode_packet(h_lin, linear, PacketMode::passive).total_length();
    CHECK(bits_lin <= passive_bits + kHeaderBits + kHypothesisCodeBits);

    // alternating +/- noise on a line: averaging pays
    Series wobble;
    for (int i = 0; i < 128; ++i) {
        wobble.push_back({static_cast<double>(i), 200.0 + 2.0 * i + (i % 2 == 0 ? 30.0 : -30.0)});
    }
    auto [h_wobble, bits_wobble] = select_hypothesis(grid, wobble);
    (void)bits_wobble;
    CHECK(h_wobble.window > 1);

    Series constant;
    for (int i = 0; i < 32; ++i) {
        constant.push_back({static_cast<double>(i), 9.0});
    }
    auto [h_const, bits_const] = select_hypothesis(grid, constant);
    CHECK(h_const.window == 1);  // all windows tie; smallest wins
    for (std::size_t w : grid) {
        Hypothesis h;
        h.window = static_cast<std::uint16_t>(w);
        CHECK(description_length(h, constant) == bits_const);
    }

    CHECK_THROWS_AS(select_hypothesis({}, linear), std::domain_error);
}

TEST_CASE("packets round-trip in both modes") {
    std::mt19937_64 rng(47);
    std::vector<std::size_t> grid{1, 2, 4, 8};
    for (int trial = 0; trial < 60; ++trial) {
        auto data = random_series(rng, 1 + rng() % 100, 1.0e5);
        Hypothesis h;
        h.window = static_cast<std::uint16_t>(grid[rng() % grid.size()]);
        auto expected = rounded_values(data);

        auto active = encode_packet(h, data, PacketMode::active);
        CHECK(decode_packet(active) == expected);
        CHECK(active.total_length() == kHeaderBits + active.code.size() + active.data.size());

        auto passive = encode_packet(h, data, PacketMode::passive);
        CHECK(decode_packet(passive) == expected);
        CHECK(passive.code.empty());
        CHECK(passive.data.size() == 32 * data.size());

        // wire round-trip
        auto wire = active.to_bits();
        CHECK(decode_packet(ActivePacket::from_bits(wire)) == expected);
    }
}

TEST_CASE("packet format errors") {
    Hypothesis h;
    Series s{{0, 1}, {1, 2}};
    auto p = encode_packet(h, s, PacketMode::active);

    auto corrupted = p;
    corrupted.header.magic = 0xDEAD;
    CHECK_THROWS_AS(decode_packet(corrupted), FormatError);

    auto wire = p.to_bits();
    BitString flipped;
    for (std::size_t i = 0; i < wire.size(); ++i) {
        flipped.push_back(i == 0 ? !wire.bit(i) : wire.bit(i));
    }
    CHECK_THROWS_AS(ActivePacket::from_bits(flipped), FormatError);

    BitString truncated = wire.substr(0, wire.size() - 1);
    CHECK_THROWS(decode_packet(ActivePacket::from_bits(truncated)));

    auto bad_version = p;
    bad_version.header.version = 9;
    CHECK_THROWS_AS(decode_packet(bad_version), FormatError);

    auto ragged = encode_packet(h, s, PacketMode::passive);
    ragged.data.push_back(true);
    CHECK_THROWS_AS(decode_packet(ragged), FormatError);
}

TEST_CASE("shorter packets track better predictors") {
    // linear plus constant offset: the minimal packet and the minimal
    // summed-|residual| hypothesis coincide
    Series data;
    for (int i = 0; i < 128; ++i) {
        data.push_back({static_cast<double>(i), 300.0 + 5.0 * i});
    }
    std::vector<std::size_t> grid{1, 2, 4, 8, 16};
    auto values = rounded_values(data);
    std::size_t best_bits = 0, best_bits_w = 0;
    std::uint64_t best_err = 0, best_err_w = 0;
    for (std::size_t w : grid) {
        Hypothesis h;
        h.window = static_cast<std::uint16_t>(w);
        std::size_t bits = encode_packet(h, data, PacketMode::active).total_length();
        std::uint64_t err = 0;
        for (auto r : coding_residuals(h, values)) {
            err += static_cast<std::uint64_t>(std::llabs(r));
        }
        if (best_bits_w == 0 || bits < best_bits) {
            best_bits = bits;
            best_bits_w = w;
        }
        if (best_err_w == 0 || err < best_err) {
            best_err = err;
            best_err_w = w;
        }
    }
    CHECK(best_bits_w == best_err_w);
}

TEST_CASE("description length ranks like prediction error") {
    // linear + seeded noise; rankings by summed |residual| and by DL agree
    std::mt19937_64 rng(53);
    Series data;
    for (int i = 0; i < 512; ++i) {
        double noise = 40.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
        data.push_back({static_cast<double>(i), 1000.0 + 2.0 * i + noise});
    }
    std::vector<std::size_t> grid{1, 2, 4, 8, 16, 32};
    auto values = rounded_values(data);
    std::vector<double> errs, bits;
    for (std::size_t w : grid) {
        Hypothesis h;
        h.window = static_cast<std::uint16_t>(w);
        std::uint64_t err = 0;
        for (auto r : coding_residuals(h, values)) {
            err += static_cast<std::uint64_t>(std::llabs(r));
        }
        errs.push_back(static_cast<double>(err));
        bits.push_back(static_cast<double>(description_length(h, data)));
    }
    auto rho = presage::metrics::spearman(errs, bits);
    REQUIRE(rho.has_value());
    CHECK(*rho >= 0.8);
}
