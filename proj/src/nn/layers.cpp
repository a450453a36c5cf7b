#include "mamba/nn/layers.hpp"

namespace mamba::nn {

Dense make_dense(ParamSet& ps, const std::string& name, int in, int out, Act act, Rng& rng) {
  Dense d;
  d.w = &ps.add(name + ".w", out, in, rng);
  d.b = &ps.add_zeros(name + ".b", out, 1);
  d.act = act;
  return d;
}

GruCell make_gru(ParamSet& ps, const std::string& name, int in, int hidden, Rng& rng) {
  GruCell cell;
  cell.w = &ps.add(name + ".w", 3 * hidden, in, rng);
  cell.u = &ps.add(name + ".u", 3 * hidden, hidden, rng);
  cell.b = &ps.add_zeros(name + ".b", 3 * hidden, 1);
  cell.hidden = hidden;
  return cell;
}

int GruCell::step(Ctx& c, int h_prev, int x) const {
  Graph& g = c.g;
  int wx = g.matmul(c.node(*w), x);
  int uh = g.matmul(c.node(*u), h_prev);
  int pre = g.add(g.add(wx, uh), c.node(*b));
  int r = g.sigmoid_(g.slice_rows(pre, 0, hidden));
  int z = g.sigmoid_(g.slice_rows(pre, hidden, hidden));
  // Candidate applies the reset gate to the recurrent contribution only.
  int cand = g.tanh_(g.add(g.add(g.slice_rows(wx, 2 * hidden, hidden),
                                 g.mul(r, g.slice_rows(uh, 2 * hidden, hidden))),
                           g.slice_rows(c.node(*b), 2 * hidden, hidden)));
  int keep = g.mul(z, h_prev);
  int one_minus_z = g.affine(z, -1.0, 1.0);
  return g.add(keep, g.mul(one_minus_z, cand));
}

}  // namespace mamba::nn
