#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tsgcl/encoder.hpp"
#include "tsgcl/error.hpp"

using namespace tsgcl;
using oracle::Mat;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Textbook LSTM over the rows of x, zero initial state, gates i, f, g, o.
Mat lstm_oracle(const Mat& x, const Tensor& wx, const Tensor& wh, const Tensor& b, std::size_t h, bool reverse) {
  const std::size_t n = x.size();
  Mat out(n);
  std::vector<double> hid(h, 0.0), cell(h, 0.0);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    std::vector<double> z(4 * h);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      z[r] = b[r];
      for (std::size_t c = 0; c < x[t].size(); ++c) z[r] += wx.at(r, c) * x[t][c];
      for (std::size_t c = 0; c < h; ++c) z[r] += wh.at(r, c) * hid[c];
    }
    for (std::size_t k = 0; k < h; ++k) {
      cell[k] = sigm(z[h + k]) * cell[k] + sigm(z[k]) * std::tanh(z[2 * h + k]);
      hid[k] = sigm(z[3 * h + k]) * std::tanh(cell[k]);
    }
    out[t] = hid;
  }
  return out;
}

struct Fixture {
  ParameterSet params;
  BiRnnParams rnn;
  Tensor seq;
  Fixture(std::size_t n, std::size_t d, std::size_t h) {
    Rng rng(5);
    rnn = add_birnn_params(params, "enc", d, h, 0.4, rng);
    std::mt19937_64 r2(6);
    seq = oracle::random_tensor({n, d}, r2);
  }
};

}  // namespace

TEST_CASE("bidirectional encoder equals a plain-loop LSTM") {
  Fixture f(6, 5, 3);
  ad::Tape tape;
  ParamBinding bind(tape, f.params);
  const auto out = birnn_encode(bind, tape.constant(f.seq), f.rnn);
  REQUIRE(out.shape() == Shape{6, 6});

  const Mat x = oracle::to_mat(f.seq);
  const auto& P = f.params;
  const Mat fw = lstm_oracle(x, P.value(f.rnn.forward.input_weights), P.value(f.rnn.forward.hidden_weights),
                             P.value(f.rnn.forward.bias), 3, false);
  const Mat bw = lstm_oracle(x, P.value(f.rnn.backward.input_weights), P.value(f.rnn.backward.hidden_weights),
                             P.value(f.rnn.backward.bias), 3, true);
  double worst = 0;
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t k = 0; k < 3; ++k) {
      worst = std::max(worst, std::abs(out.value().at(t, k) - fw[t][k]));
      worst = std::max(worst, std::abs(out.value().at(t, 3 + k) - bw[t][k]));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("reversing the sequence and swapping directions mirrors the output") {
  Fixture f(5, 4, 3);
  Tensor rev(f.seq.shape());
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < 4; ++c) rev.at(t, c) = f.seq.at(4 - t, c);
  ad::Tape tape;
  ParamBinding bind(tape, f.params);
  const Tensor a = birnn_encode(bind, tape.constant(f.seq), f.rnn).value();
  const Tensor b = birnn_encode(bind, tape.constant(rev), f.rnn.swapped()).value();
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(a.at(t, k) == doctest::Approx(b.at(4 - t, 3 + k)).epsilon(1e-14));
      CHECK(a.at(t, 3 + k) == doctest::Approx(b.at(4 - t, k)).epsilon(1e-14));
    }
}

TEST_CASE("encoder gradients match central differences") {
  Fixture f(4, 3, 2);
  const auto check = oracle::parameter_gradient_check(f.params, [&](ParamBinding& bind) {
    const auto out = birnn_encode(bind, bind.tape().constant(f.seq), f.rnn);
    std::mt19937_64 rng(9);
    return ad::sum(ad::mul(out, bind.tape().constant(oracle::random_tensor(out.shape(), rng))));
  }, 1e-6);
  CHECK(check.worst < 1e-6);
  CHECK(check.nonzero == check.checked);
}

TEST_CASE("encoder rejects a wrong input width") {
  Fixture f(4, 3, 2);
  ad::Tape tape;
  ParamBinding bind(tape, f.params);
  CHECK_THROWS_AS(birnn_encode(bind, tape.constant(Tensor({4, 2})), f.rnn), ShapeError);
}

TEST_CASE("speaker embedding is a column of W plus the bias") {
  ParameterSet ps;
  Rng rng(1);
  const auto sp = add_speaker_params(ps, "spk", 3, 4, 1.0, rng);
  ps.value(sp.bias) = Tensor::vector({1, 2, 3, 4});
  ad::Tape tape;
  ParamBinding bind(tape, ps);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto e = speaker_embed(bind, s, sp).value();
    for (std::size_t k = 0; k < 4; ++k) CHECK(e[k] == ps.value(sp.weights).at(k, s) + ps.value(sp.bias)[k]);
  }
  CHECK_THROWS_AS(speaker_embed(bind, 3, sp), ValueError);
}

TEST_CASE("node features are turn-major with the speaker appended") {
  ParameterSet ps;
  Rng rng(2);
  const FeatureDims dims{3, 2, 4};
  const auto enc = add_node_encoders(ps, dims, 2, 2, 3, 0.3, rng);
  CHECK(enc.node_dim() == 7);

  Dialogue d{"x", {}};
  std::mt19937_64 r2(3);
  std::normal_distribution<double> n;
  for (std::size_t i = 0; i < 3; ++i) {
    UtteranceRecord u;
    u.dialogue_id = "x";
    u.turn = i;
    u.speaker = i == 1;
    for (std::size_t k = 0; k < 3; ++k) u.feat_t.push_back(n(r2));
    for (std::size_t k = 0; k < 2; ++k) u.feat_a.push_back(n(r2));
    for (std::size_t k = 0; k < 4; ++k) u.feat_v.push_back(n(r2));
    d.utterances.push_back(u);
  }
  ad::Tape tape;
  ParamBinding bind(tape, ps);
  const Tensor x = make_node_features(bind, d, enc).value();
  REQUIRE(x.shape() == Shape{9, 7});

  const BiRnnParams* rnns[3] = {&enc.text, &enc.audio, &enc.vision};
  for (Modality m : kModalities) {
    const int mi = static_cast<int>(m);
    const Tensor e = birnn_encode(bind, modality_matrix(tape, d, m), *rnns[mi]).value();
    for (std::size_t i = 0; i < 3; ++i) {
      const Tensor spk = speaker_embed(bind, d.utterances[i].speaker, enc.speaker).value();
      for (std::size_t k = 0; k < 4; ++k) CHECK(x.at(3 * i + mi, k) == e.at(i, k));
      for (std::size_t k = 0; k < 3; ++k) CHECK(x.at(3 * i + mi, 4 + k) == spk[k]);
    }
  }
  CHECK(ps.find("encoder.text.fwd.w_input").has_value());
  CHECK(ps.find("speaker.weights").has_value());
}
