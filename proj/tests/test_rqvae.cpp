#include <doctest.h>

#include <cmath>
#include <set>

#include "genrec/rqvae.hpp"
#include "test_util.hpp"

using namespace genrec;
using genrec::testing::fd_check_against;
using genrec::testing::random_tensor;

TEST_SUITE_BEGIN("rqvae");

namespace {

RqVaeConfig tiny_cfg(int levels = 2, int64_t codebook = 4) {
  RqVaeConfig c;
  c.input_dim = 5;
  c.latent_dim = 3;
  c.hidden_dim = 4;
  c.levels = levels;
  c.codebook_size = codebook;
  c.beta = 0.25;
  return c;
}

void set_param(RqVae& q, const std::string& name, const Tensor& value) {
  Parameter* p = q.params().find(name);
  REQUIRE(p != nullptr);
  REQUIRE(p->value.shape() == value.shape());
  p->value = value;
}

}  // namespace

TEST_CASE("quantize picks the closest codeword and advances the residual") {
  RqVaeConfig c;
  c.input_dim = 2;
  c.latent_dim = 2;
  c.hidden_dim = 2;
  c.levels = 1;
  c.codebook_size = 2;
  Rng rng(1);
  RqVae q(c, rng);
  set_param(q, "rqvae.codebook.0", Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}));

  Tensor z({1, 2}, {0.9, 0.2});
  auto res = q.quantize(z);
  CHECK(res.codes[0][0] == 0);  // distances 0.05 vs 1.45
  CHECK(res.final_residual.at(0, 0) == doctest::Approx(-0.1));
  CHECK(res.final_residual.at(0, 1) == doctest::Approx(0.2));
  CHECK(res.quantized.at(0, 0) == 1.0);
  CHECK(res.quantized.at(0, 1) == 0.0);
}

TEST_CASE("exactly representable latents have zero final residual") {
  Rng rng(2);
  RqVae q(tiny_cfg(2, 3), rng);
  // level 0 holds the latent itself, level 1 holds the zero vector
  set_param(q, "rqvae.codebook.0",
            Tensor({3, 3}, {0.4, -0.2, 0.7, 5, 5, 5, -5, -5, -5}));
  set_param(q, "rqvae.codebook.1", Tensor({3, 3}, {0, 0, 0, 9, 9, 9, -9, -9, -9}));
  Tensor z({1, 3}, {0.4, -0.2, 0.7});
  auto res = q.quantize(z);
  CHECK(res.codes[0][0] == 0);
  CHECK(res.codes[1][0] == 0);
  for (int64_t j = 0; j < 3; ++j) {
    CHECK(res.quantized.at(0, j) == z.at(0, j));
    CHECK(res.final_residual.at(0, j) == 0.0);
  }
}

TEST_CASE("residual telescoping: z = quantized + final residual") {
  Rng rng(3);
  RqVaeConfig c = tiny_cfg(3, 16);
  RqVae q(c, rng);
  Tensor z = random_tensor({37, c.latent_dim}, rng, 2.0);
  auto res = q.quantize(z);
  for (int64_t i = 0; i < z.size(); ++i) {
    const double recon = res.quantized[i] + res.final_residual[i];
    CHECK(std::abs(recon - z[i]) <= 64 * std::numeric_limits<double>::epsilon() *
                                        std::max(1.0, std::abs(z[i])));
  }
}

TEST_CASE("codeword selection equals a brute-force scan per level") {
  Rng rng(4);
  RqVaeConfig c = tiny_cfg(3, 16);
  RqVae q(c, rng);
  Tensor z = random_tensor({64, c.latent_dim}, rng);
  auto res = q.quantize(z);

  Tensor residual = z;
  for (int m = 0; m < c.levels; ++m) {
    const Tensor& book = q.codebook(m);
    for (int64_t r = 0; r < z.rows(); ++r) {
      int best = -1;
      double best_d = 1e300;
      for (int64_t l = 0; l < c.codebook_size; ++l) {
        double d2 = 0.0;
        for (int64_t j = 0; j < c.latent_dim; ++j) {
          const double diff = residual.at(r, j) - book.at(l, j);
          d2 += diff * diff;
        }
        if (d2 < best_d) {
          best_d = d2;
          best = static_cast<int>(l);
        }
      }
      CHECK(res.codes[m][r] == best);
      for (int64_t j = 0; j < c.latent_dim; ++j)
        residual.at(r, j) -= book.at(res.codes[m][r], j);
    }
  }
}

TEST_CASE("straight-through forward equals decoding the quantized latent bit-exactly") {
  Rng rng(5);
  RqVaeConfig c = tiny_cfg(2, 8);
  RqVae q(c, rng);
  Tensor h = random_tensor({9, c.input_dim}, rng);
  Tensor z = q.encode(Var::constant(h)).value();
  auto res = q.quantize(z);

  // route 1: the straight-through construction used by the loss
  Var zv = q.encode(Var::constant(h));
  Var st = straight_through(Var::constant(res.quantized), zv);
  Tensor via_st = q.decode(st).value();
  // route 2: decoder applied directly to the quantized latent
  Tensor direct = q.decode(Var::constant(res.quantized)).value();
  for (int64_t i = 0; i < via_st.size(); ++i) CHECK(via_st[i] == direct[i]);
}

TEST_CASE("hand-crafted loss values") {
  SUBCASE("perfect reconstruction with exact codewords gives zero loss") {
    RqVaeConfig c = tiny_cfg(2, 2);
    Rng rng(6);
    RqVae q(c, rng);
    Tensor h({1, 5}, {1, 2, 3, 4, 5});
    // encoder constant: weights 0, bias z0; z0 sits in codebook 0
    set_param(q, "rqvae.enc.w1", Tensor({5, 4}));
    set_param(q, "rqvae.enc.b1", Tensor({4}));
    set_param(q, "rqvae.enc.w2", Tensor({4, 3}));
    set_param(q, "rqvae.enc.b2", Tensor::vec({0.3, -0.6, 0.9}));
    set_param(q, "rqvae.codebook.0",
              Tensor({2, 3}, {0.3, -0.6, 0.9, 7, 7, 7}));
    set_param(q, "rqvae.codebook.1", Tensor({2, 3}, {0, 0, 0, 8, 8, 8}));
    // decoder constant: h itself
    set_param(q, "rqvae.dec.w1", Tensor({3, 4}));
    set_param(q, "rqvae.dec.b1", Tensor({4}));
    set_param(q, "rqvae.dec.w2", Tensor({4, 5}));
    set_param(q, "rqvae.dec.b2", Tensor::vec({1, 2, 3, 4, 5}));

    Tensor z = q.encode(Var::constant(h)).value();
    auto res = q.quantize(z);
    Var loss = q.loss(Var::constant(h), res.codes);
    CHECK(loss.value()[0] == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("single item, r=(1,0), zero codeword, perfect decoder: 1 + beta") {
    RqVaeConfig c;
    c.input_dim = 2;
    c.latent_dim = 2;
    c.hidden_dim = 2;
    c.levels = 1;
    c.codebook_size = 1;
    c.beta = 0.25;
    Rng rng(7);
    RqVae q(c, rng);
    Tensor h({1, 2}, {4.0, -1.0});
    set_param(q, "rqvae.enc.w1", Tensor({2, 2}));
    set_param(q, "rqvae.enc.b1", Tensor({2}));
    set_param(q, "rqvae.enc.w2", Tensor({2, 2}));
    set_param(q, "rqvae.enc.b2", Tensor::vec({1.0, 0.0}));  // z = (1, 0)
    set_param(q, "rqvae.codebook.0", Tensor({1, 2}));       // b = (0, 0)
    set_param(q, "rqvae.dec.w1", Tensor({2, 2}));
    set_param(q, "rqvae.dec.b1", Tensor({2}));
    set_param(q, "rqvae.dec.w2", Tensor({2, 2}));
    set_param(q, "rqvae.dec.b2", Tensor::vec({4.0, -1.0}));  // reconstructs h

    Tensor z = q.encode(Var::constant(h)).value();
    auto res = q.quantize(z);
    Var loss = q.loss(Var::constant(h), res.codes);
    CHECK(loss.value()[0] == doctest::Approx(1.25).epsilon(1e-12));
  }
}

TEST_CASE("beta zero removes exactly the commitment term") {
  Rng rng(8);
  RqVaeConfig with = tiny_cfg(2, 4);
  RqVaeConfig without = with;
  without.beta = 0.0;
  RqVae qa(with, rng);
  Rng rng2(8);
  RqVae qb(without, rng2);  // identical parameters by seeding

  Tensor h = random_tensor({6, with.input_dim}, rng);
  Tensor z = qa.encode(Var::constant(h)).value();
  auto res = qa.quantize(z);

  const double la = qa.loss(Var::constant(h), res.codes).value()[0];
  const double lb = qb.loss(Var::constant(h), res.codes).value()[0];

  // commitment = sum over levels of ||r_m - b_m||^2 with the actual values
  double commit = 0.0;
  Tensor residual = z;
  for (int m = 0; m < with.levels; ++m) {
    for (int64_t r = 0; r < z.rows(); ++r) {
      for (int64_t j = 0; j < z.cols(); ++j) {
        const double diff =
            residual.at(r, j) - qa.codebook(m).at(res.codes[m][r], j);
        commit += diff * diff;
      }
    }
    for (int64_t r = 0; r < z.rows(); ++r)
      for (int64_t j = 0; j < z.cols(); ++j)
        residual.at(r, j) -= qa.codebook(m).at(res.codes[m][r], j);
  }
  CHECK(la - lb == doctest::Approx(0.25 * commit).epsilon(1e-9));
}

TEST_CASE("codebook gradient touches only the selected entries") {
  Rng rng(9);
  RqVaeConfig c = tiny_cfg(2, 6);
  RqVae q(c, rng);
  Tensor h = random_tensor({4, c.input_dim}, rng);
  Tensor z = q.encode(Var::constant(h)).value();
  auto res = q.quantize(z);

  GradMap grads;
  backward(q.loss(Var::constant(h), res.codes), grads);
  for (int m = 0; m < c.levels; ++m) {
    std::set<int32_t> selected(res.codes[m].begin(), res.codes[m].end());
    const Tensor* g = grads.find(q.params().find("rqvae.codebook." + std::to_string(m)));
    REQUIRE(g != nullptr);
    for (int64_t l = 0; l < c.codebook_size; ++l) {
      double row_norm = 0.0;
      for (int64_t j = 0; j < c.latent_dim; ++j)
        row_norm += std::abs(g->at(l, j));
      if (selected.count(static_cast<int32_t>(l)))
        CHECK(row_norm > 0.0);
      else
        CHECK(row_norm == 0.0);
    }
  }
}

// The training loss contains stop-gradients, so plain finite differences of
// the loss itself would disagree by construction. The oracle re-implements
// the objective with the sg() arguments frozen at their baseline values;
// the analytic gradient must match the derivative of that frozen function.
TEST_CASE("full loss gradient matches the sg-frozen oracle") {
  Rng rng(10);
  RqVaeConfig c = tiny_cfg(2, 5);
  RqVae q(c, rng);
  Tensor h = random_tensor({5, c.input_dim}, rng);

  // baseline pass: selections and frozen values
  Tensor z0 = q.encode(Var::constant(h)).value();
  auto res0 = q.quantize(z0);
  // frozen per-level residuals r_m^0
  std::vector<Tensor> frozen_residuals;
  {
    Tensor r = z0;
    for (int m = 0; m < c.levels; ++m) {
      frozen_residuals.push_back(r);
      for (int64_t row = 0; row < r.rows(); ++row)
        for (int64_t j = 0; j < r.cols(); ++j)
          r.at(row, j) -= q.codebook(m).at(res0.codes[m][row], j);
    }
  }
  Tensor st_offset = res0.quantized;  // zhat0 - z0, the frozen sg() payload
  for (int64_t i = 0; i < st_offset.size(); ++i) st_offset[i] -= z0[i];
  std::vector<Tensor> frozen_books;
  for (int m = 0; m < c.levels; ++m) frozen_books.push_back(q.codebook(m));

  GradMap grads;
  backward(q.loss(Var::constant(h), res0.codes), grads);

  auto frozen_loss = [&]() {
    auto P = [&](const char* n) { return q.params().find(n); };
    auto mlp = [&](const Tensor& x, const Tensor& w1, const Tensor& b1,
                   const Tensor& w2, const Tensor& b2) {
      Tensor hmid({x.rows(), w1.cols()});
      for (int64_t i = 0; i < x.rows(); ++i)
        for (int64_t j = 0; j < w1.cols(); ++j) {
          double s = b1[j];
          for (int64_t k = 0; k < x.cols(); ++k) s += x.at(i, k) * w1.at(k, j);
          hmid.at(i, j) = s > 0 ? s : 0.01 * s;
        }
      Tensor out({x.rows(), w2.cols()});
      for (int64_t i = 0; i < x.rows(); ++i)
        for (int64_t j = 0; j < w2.cols(); ++j) {
          double s = b2[j];
          for (int64_t k = 0; k < hmid.cols(); ++k) s += hmid.at(i, k) * w2.at(k, j);
          out.at(i, j) = s;
        }
      return out;
    };
    Tensor z = mlp(h, P("rqvae.enc.w1")->value, P("rqvae.enc.b1")->value,
                   P("rqvae.enc.w2")->value, P("rqvae.enc.b2")->value);
    // decoder input: z + frozen (zhat0 - z0)
    Tensor dec_in = z;
    for (int64_t i = 0; i < dec_in.size(); ++i) dec_in[i] += st_offset[i];
    Tensor hhat = mlp(dec_in, P("rqvae.dec.w1")->value, P("rqvae.dec.b1")->value,
                      P("rqvae.dec.w2")->value, P("rqvae.dec.b2")->value);
    double loss = 0.0;
    for (int64_t i = 0; i < h.size(); ++i) {
      const double d = h[i] - hhat[i];
      loss += d * d;
    }
    // per-level terms with frozen selections
    Tensor residual = z;  // live residual r_m(theta)
    for (int m = 0; m < c.levels; ++m) {
      const Tensor& book = q.codebook(m);
      for (int64_t row = 0; row < z.rows(); ++row) {
        const int32_t sel = res0.codes[m][row];
        for (int64_t j = 0; j < z.cols(); ++j) {
          const double cb = frozen_residuals[m].at(row, j) - book.at(sel, j);
          loss += cb * cb;  // sg(r_m) - b
          const double cm = residual.at(row, j) - frozen_books[m].at(sel, j);
          loss += c.beta * cm * cm;  // r_m - sg(b)
        }
      }
      for (int64_t row = 0; row < z.rows(); ++row)
        for (int64_t j = 0; j < z.cols(); ++j)
          residual.at(row, j) -= book.at(res0.codes[m][row], j);
    }
    return loss;
  };

  auto rep = fd_check_against(q.params(), grads, frozen_loss);
  CAPTURE(rep.worst_param);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("autoencoder path (no quantization) passes plain finite differences") {
  Rng rng(11);
  RqVaeConfig c = tiny_cfg(2, 4);
  RqVae q(c, rng);
  Tensor h = random_tensor({6, c.input_dim}, rng);
  auto builder = [&] {
    Var hv = Var::constant(h);
    return sum_all(sq_l2_dist(hv, q.decode(q.encode(hv))));
  };
  auto rep = genrec::testing::fd_check(q.params(), builder);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("tuple capacity is the product of codebook sizes") {
  // separable codebooks: level m quantizes coordinate m
  RqVaeConfig c;
  c.input_dim = 3;
  c.latent_dim = 3;
  c.hidden_dim = 3;
  c.levels = 3;
  c.codebook_size = 4;
  Rng rng(12);
  RqVae q(c, rng);
  for (int m = 0; m < 3; ++m) {
    Tensor book({4, 3});
    for (int64_t l = 0; l < 4; ++l)
      book.at(l, m) = static_cast<double>(l);  // values 0..3 on axis m
    set_param(q, "rqvae.codebook." + std::to_string(m), book);
  }
  std::set<std::vector<int32_t>> tuples;
  Tensor z({1, 3});
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int d = 0; d < 4; ++d) {
        z.at(0, 0) = a;
        z.at(0, 1) = b;
        z.at(0, 2) = d;
        auto res = q.quantize(z);
        tuples.insert({res.codes[0][0], res.codes[1][0], res.codes[2][0]});
      }
  CHECK(tuples.size() == 64);  // L^(M-1) = 4^3
}

TEST_CASE("dead codes are reseeded from sample residuals") {
  Rng rng(13);
  RqVaeConfig c = tiny_cfg(2, 4);
  RqVae q(c, rng);
  Tensor before = q.codebook(0);
  std::vector<std::vector<int64_t>> usage = {{5, 0, 3, 0}, {1, 1, 1, 1}};
  Tensor h = random_tensor({8, c.input_dim}, rng);
  Rng rr(14);
  const int64_t reseeded = q.reseed_dead_codes(usage, h, rr);
  CHECK(reseeded == 2);
  const Tensor& after = q.codebook(0);
  bool changed1 = false, changed3 = false, same0 = true, same2 = true;
  for (int64_t j = 0; j < c.latent_dim; ++j) {
    changed1 |= before.at(1, j) != after.at(1, j);
    changed3 |= before.at(3, j) != after.at(3, j);
    same0 &= before.at(0, j) == after.at(0, j);
    same2 &= before.at(2, j) == after.at(2, j);
  }
  CHECK(changed1);
  CHECK(changed3);
  CHECK(same0);
  CHECK(same2);
}

TEST_CASE("codeword dump round trips") {
  std::vector<std::vector<int32_t>> codes = {{1, 2, 3}, {0, 0, 0}, {5, 4, 3}};
  save_codewords("test_codes.tsv", codes);
  auto back = load_codewords("test_codes.tsv");
  CHECK(back == codes);
  std::remove("test_codes.tsv");
}

TEST_SUITE_END();
