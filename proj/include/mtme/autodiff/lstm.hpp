#pragma once

#include <string>
#include <vector>

#include "mtme/autodiff/tensor.hpp"
#include "mtme/error.hpp"
#include "mtme/util/rng.hpp"

namespace mtme::ad {

// Gate blocks are packed in the order input, forget, cell, output.
struct LstmWeights {
  Tensor Wx;  // (in, 4H)
  Tensor Wh;  // (H, 4H)
  Tensor b;   // (1, 4H)

  long hidden() const { return Wh.rows(); }
  long input() const { return Wx.rows(); }
};

inline Mat uniformInit(long rows, long cols, Rng& rng, double range = 0.08) {
  Mat m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-range, range);
  return m;
}

inline LstmWeights makeLstmWeights(long input, long hidden, Rng& rng) {
  LstmWeights w;
  w.Wx = Tensor::parameter(uniformInit(input, 4 * hidden, rng));
  w.Wh = Tensor::parameter(uniformInit(hidden, 4 * hidden, rng));
  w.b = Tensor::parameter(uniformInit(1, 4 * hidden, rng));
  return w;
}

struct LstmState {
  Tensor h;
  Tensor c;
};

inline LstmState lstmCell(const Tensor& x, const LstmState& prev, const LstmWeights& w) {
  const long H = w.hidden();
  if (x.cols() != w.input()) {
    throw InvalidArgument("lstmCell: input width " + std::to_string(x.cols()) + " but weights expect " +
                          std::to_string(w.input()));
  }
  if (prev.h.cols() != H || prev.c.cols() != H || prev.h.rows() != x.rows() || prev.c.rows() != x.rows()) {
    throw InvalidArgument("lstmCell: state shape mismatch");
  }
  const Tensor z = addRow(add(matmul(x, w.Wx), matmul(prev.h, w.Wh)), w.b);
  const Tensor i = sigmoid(sliceCols(z, 0, H));
  const Tensor f = sigmoid(sliceCols(z, H, H));
  const Tensor g = tanh(sliceCols(z, 2 * H, H));
  const Tensor o = sigmoid(sliceCols(z, 3 * H, H));
  const Tensor c = add(mul(f, prev.c), mul(i, g));
  const Tensor h = mul(o, tanh(c));
  return {h, c};
}

struct BiLstmLayer {
  LstmWeights fwd;
  LstmWeights bwd;
};

struct BiLstmOutput {
  std::vector<Tensor> finalStates;  // per layer: forward then backward, each (B, H)
  std::vector<Tensor> top;          // last layer's per-step outputs, (B, 2H)
};

// Runs a stacked bidirectional LSTM over a padded batch. inputs[t] is (B, in);
// mask[t][b] marks real positions. Padded steps carry the previous state, so
// the forward direction ends at each row's last real position and the backward
// direction starts from a zero state at it.
inline BiLstmOutput biLstm(const std::vector<Tensor>& inputs, const std::vector<std::vector<char>>& mask,
                           const std::vector<BiLstmLayer>& layers, double interLayerDropout, bool training,
                           Rng& rng) {
  if (inputs.empty()) throw InvalidArgument("biLstm: empty sequence");
  if (mask.size() != inputs.size()) throw InvalidArgument("biLstm: mask length differs from sequence length");
  const long B = inputs.front().rows();
  for (long b = 0; b < B; ++b) {
    bool any = false;
    for (const auto& m : mask) {
      if (m.size() != static_cast<std::size_t>(B)) throw InvalidArgument("biLstm: mask width differs from batch");
      any = any || m[static_cast<std::size_t>(b)];
    }
    if (!any) throw InvalidArgument("biLstm: sequence " + std::to_string(b) + " has no real positions");
  }

  BiLstmOutput out;
  std::vector<Tensor> seq = inputs;
  const std::size_t T = seq.size();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (l > 0) {
      for (auto& s : seq) s = dropout(s, interLayerDropout, training, rng);
    }
    const long H = layer.fwd.hidden();
    const Tensor zeros = Tensor::constant(Mat::Zero(B, H));
    std::vector<Tensor> fwdOut(T), bwdOut(T);

    LstmState st{zeros, zeros};
    for (std::size_t t = 0; t < T; ++t) {
      const LstmState next = lstmCell(seq[t], st, layer.fwd);
      st = {select(mask[t], next.h, st.h), select(mask[t], next.c, st.c)};
      fwdOut[t] = st.h;
    }
    out.finalStates.push_back(st.h);

    st = {zeros, zeros};
    for (std::size_t k = T; k-- > 0;) {
      const LstmState next = lstmCell(seq[k], st, layer.bwd);
      st = {select(mask[k], next.h, st.h), select(mask[k], next.c, st.c)};
      bwdOut[k] = st.h;
    }
    out.finalStates.push_back(st.h);

    std::vector<Tensor> merged(T);
    for (std::size_t t = 0; t < T; ++t) merged[t] = concatCols({fwdOut[t], bwdOut[t]});
    seq = std::move(merged);
  }
  out.top = std::move(seq);
  return out;
}

}  // namespace mtme::ad
