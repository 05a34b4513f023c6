#include "genrec/rqvae.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "genrec/kernels.hpp"

namespace genrec {

RqVae::RqVae(const RqVaeConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.levels < 1) throw NumericError("rqvae: need at least one level");
  enc_w1_ = &params_.create("rqvae.enc.w1", xavier_init({cfg.input_dim, cfg.hidden_dim}, rng));
  enc_b1_ = &params_.create("rqvae.enc.b1", Tensor({cfg.hidden_dim}));
  enc_w2_ = &params_.create("rqvae.enc.w2", xavier_init({cfg.hidden_dim, cfg.latent_dim}, rng));
  enc_b2_ = &params_.create("rqvae.enc.b2", Tensor({cfg.latent_dim}));
  dec_w1_ = &params_.create("rqvae.dec.w1", xavier_init({cfg.latent_dim, cfg.hidden_dim}, rng));
  dec_b1_ = &params_.create("rqvae.dec.b1", Tensor({cfg.hidden_dim}));
  dec_w2_ = &params_.create("rqvae.dec.w2", xavier_init({cfg.hidden_dim, cfg.input_dim}, rng));
  dec_b2_ = &params_.create("rqvae.dec.b2", Tensor({cfg.input_dim}));
  for (int m = 0; m < cfg.levels; ++m)
    codebooks_.push_back(&params_.create(
        "rqvae.codebook." + std::to_string(m),
        xavier_init({cfg.codebook_size, cfg.latent_dim}, rng)));
}

Var RqVae::mlp2(const Var& x, Parameter* w1, Parameter* b1, Parameter* w2,
                Parameter* b2) const {
  Var h = leaky_relu(add_rowvec(matmul(x, Var::leaf(*w1)), Var::leaf(*b1)));
  return add_rowvec(matmul(h, Var::leaf(*w2)), Var::leaf(*b2));
}

Var RqVae::encode(const Var& h) const {
  return mlp2(h, enc_w1_, enc_b1_, enc_w2_, enc_b2_);
}

Var RqVae::decode(const Var& x) const {
  return mlp2(x, dec_w1_, dec_b1_, dec_w2_, dec_b2_);
}

RqVae::QuantizeResult RqVae::quantize(const Tensor& z) const {
  const int64_t rows = z.rows(), d = z.cols();
  if (d != cfg_.latent_dim)
    throw ShapeError("quantize: latent shape " + z.shape_str() + " vs (" +
                     std::to_string(cfg_.latent_dim) + ")");
  QuantizeResult out;
  out.codes.resize(codebooks_.size());
  out.quantized = Tensor({rows, d});
  Tensor residual = z;
  for (size_t m = 0; m < codebooks_.size(); ++m) {
    const Tensor& book = codebooks_[m]->value;
    auto& codes = out.codes[m];
    codes.resize(rows);
    nearest_row(residual.data(), rows, book.data(), cfg_.codebook_size, d,
                codes.data());
    for (int64_t r = 0; r < rows; ++r) {
      const double* b = book.data() + static_cast<int64_t>(codes[r]) * d;
      double* res = residual.data() + r * d;
      double* q = out.quantized.data() + r * d;
      for (int64_t j = 0; j < d; ++j) {
        q[j] += b[j];
        res[j] -= b[j];
      }
    }
  }
  out.final_residual = std::move(residual);
  return out;
}

Var RqVae::loss(const Var& h, const std::vector<std::vector<int32_t>>& codes) const {
  if (codes.size() != codebooks_.size())
    throw NumericError("rqvae loss: expected " + std::to_string(codebooks_.size()) +
                       " code levels, got " + std::to_string(codes.size()));
  Var z = encode(h);

  Var residual = z;
  Var quantized;
  std::vector<Var> residuals, selected;
  for (size_t m = 0; m < codebooks_.size(); ++m) {
    std::vector<int64_t> idx(codes[m].begin(), codes[m].end());
    Var sel = gather_rows(Var::leaf(*codebooks_[m]), std::move(idx));
    residuals.push_back(residual);
    selected.push_back(sel);
    quantized = m == 0 ? sel : add(quantized, sel);
    residual = sub(residual, sel);
  }

  // decoder sees the quantized latent, encoder gets the gradient
  Var reconstructed = decode(straight_through(quantized, z));
  Var total = sum_all(sq_l2_dist(h, reconstructed));
  for (size_t m = 0; m < codebooks_.size(); ++m) {
    Var codebook_term = sum_all(sq_l2_dist(stop_gradient(residuals[m]), selected[m]));
    Var commit_term = sum_all(sq_l2_dist(residuals[m], stop_gradient(selected[m])));
    total = add(total, add(codebook_term, scale_const(commit_term, cfg_.beta)));
  }
  return total;
}

std::vector<std::vector<int32_t>> RqVae::assign_codewords(const Tensor& h_items) const {
  Tensor z = encode(Var::constant(h_items)).value();
  QuantizeResult q = quantize(z);
  std::vector<std::vector<int32_t>> per_item(
      static_cast<size_t>(z.rows()), std::vector<int32_t>(codebooks_.size()));
  for (size_t m = 0; m < codebooks_.size(); ++m)
    for (int64_t r = 0; r < z.rows(); ++r)
      per_item[static_cast<size_t>(r)][m] = q.codes[m][static_cast<size_t>(r)];
  return per_item;
}

int64_t RqVae::reseed_dead_codes(const std::vector<std::vector<int64_t>>& usage,
                                 const Tensor& h_sample, Rng& rng) {
  if (usage.size() != codebooks_.size())
    throw NumericError("reseed_dead_codes: usage level count mismatch");
  Tensor z = encode(Var::constant(h_sample)).value();
  const int64_t rows = z.rows(), d = z.cols();
  int64_t reseeded = 0;
  Tensor residual = z;
  for (size_t m = 0; m < codebooks_.size(); ++m) {
    Tensor& book = codebooks_[m]->value;
    for (int64_t l = 0; l < cfg_.codebook_size; ++l) {
      if (usage[m][static_cast<size_t>(l)] > 0) continue;
      const int64_t r = rng.uniform_int(rows);
      std::memcpy(book.data() + l * d, residual.data() + r * d,
                  sizeof(double) * static_cast<size_t>(d));
      ++reseeded;
    }
    // advance residuals with the (possibly updated) codebook
    std::vector<int32_t> codes(rows);
    nearest_row(residual.data(), rows, book.data(), cfg_.codebook_size, d,
                codes.data());
    for (int64_t r = 0; r < rows; ++r) {
      const double* b = book.data() + static_cast<int64_t>(codes[r]) * d;
      double* res = residual.data() + r * d;
      for (int64_t j = 0; j < d; ++j) res[j] -= b[j];
    }
  }
  return reseeded;
}

void save_codewords(const std::string& path,
                    const std::vector<std::vector<int32_t>>& codes_per_item) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write codewords: " + path);
  for (size_t i = 0; i < codes_per_item.size(); ++i) {
    os << i;
    for (int32_t c : codes_per_item[i]) os << '\t' << c;
    os << '\n';
  }
  if (!os) throw DataError("write failed: " + path);
}

std::vector<std::vector<int32_t>> load_codewords(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open codewords: " + path);
  std::vector<std::vector<int32_t>> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int64_t item = -1;
    if (!(ls >> item) || item != static_cast<int64_t>(out.size()))
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected consecutive item ids");
    std::vector<int32_t> codes;
    int32_t c;
    while (ls >> c) codes.push_back(c);
    if (codes.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": no codewords");
    if (!out.empty() && codes.size() != out.front().size())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": inconsistent codeword count");
    out.push_back(std::move(codes));
  }
  return out;
}

}  // namespace genrec
