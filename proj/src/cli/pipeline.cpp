#include "genrec/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "genrec/beam_search.hpp"
#include "genrec/bench.hpp"
#include "genrec/checkpoint.hpp"
#include "genrec/infer.hpp"
#include "genrec/metrics.hpp"
#include "genrec/mf.hpp"
#include "genrec/stage1.hpp"
#include "genrec/stage2.hpp"
#include "genrec/synth.hpp"

namespace fs = std::filesystem;

namespace genrec {

namespace {

std::string dataset_dir(const std::string& workdir) { return workdir + "/dataset"; }

void require_file(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    throw DataError("missing artifact " + path + "; run `" + producer + "` first");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path);
  os << text;
}

void write_resolved_config(const Config& cfg, const std::string& workdir,
                           const std::string& command) {
  write_text(workdir + "/" + command + ".resolved.cfg", cfg.serialize());
}

PosEncoding pos_mode(const std::string& name) {
  if (name == "relation") return PosEncoding::kRelation;
  if (name == "sinusoid") return PosEncoding::kSinusoid;
  return PosEncoding::kNone;
}

RqVaeConfig rqvae_config(const Config& cfg) {
  RqVaeConfig rc;
  rc.input_dim = cfg.dim;
  rc.latent_dim = cfg.latent_dim;
  rc.hidden_dim = cfg.dim;
  rc.levels = static_cast<int>(cfg.id_length - 1);
  rc.codebook_size = cfg.codebook;
  rc.beta = cfg.beta;
  return rc;
}

RecModelConfig recmodel_config(const Config& cfg, const RecIdRegistry& registry) {
  RecModelConfig mc;
  mc.dim = cfg.dim;
  mc.heads = cfg.heads;
  mc.layers = cfg.layers;
  mc.ffn_dim = cfg.ffn_dim;
  mc.max_history = cfg.history;
  mc.pos = pos_mode(cfg.pos_encoding);
  mc.vocab = registry.vocab().size();
  mc.id_length = registry.vocab().id_length();
  return mc;
}

Tensor meta_tensor(std::vector<double> vals) {
  return Tensor({static_cast<int64_t>(vals.size())}, std::move(vals));
}

Stage1Result run_stage1(const Config& cfg, const WorkdirData& data,
                        GraphEncoder& enc, RqVae& rqvae, std::ostream& log) {
  Stage1Options opt;
  opt.max_epochs = cfg.rqvae_epochs;
  opt.batch = cfg.batch;
  opt.lr = cfg.lr;
  opt.l2 = cfg.l2;
  opt.patience = cfg.patience;
  opt.seed = cfg.seed;
  opt.eval_k = cfg.top_k;
  opt.log = &log;
  return train_stage1(enc, rqvae, data.dataset, data.bank, data.graph, opt);
}

Stage2Result run_stage2(const Config& cfg, const InteractionDataset& ds,
                        const Representations& reps, const RecIdRegistry& registry,
                        RecModel& model, std::ostream& log) {
  Stage2Options opt;
  opt.max_epochs = cfg.rec_epochs;
  opt.batch = cfg.batch;
  opt.lr = cfg.lr;
  opt.l2 = cfg.l2;
  opt.patience = cfg.patience;
  opt.seed = cfg.seed;
  opt.eval_k = cfg.top_k;
  opt.log = &log;
  return train_stage2(model, reps, registry, ds, opt);
}

}  // namespace

WorkdirData load_workdir_dataset(const Config& cfg, const std::string& workdir) {
  const std::string dir = dataset_dir(workdir);
  require_file(dir + "/interactions.tsv", "synth (or place a dataset there)");
  WorkdirData data;
  LoadedInteractions loaded = load_interactions(dir + "/interactions.tsv", cfg.seed);
  data.dataset = std::move(loaded.dataset);

  auto present = [&](const char* name) {
    const std::string p = dir + "/features_" + name + ".bin";
    return fs::exists(p) ? p : std::string();
  };
  data.bank = load_features(present("visual"), present("acoustic"),
                            present("textual"), data.dataset.item_count);
  data.graph = build_graph(data.dataset);
  return data;
}

void save_encoder_checkpoint(const std::string& path, const GraphEncoder& enc,
                             const Representations& reps, int64_t feature_dim) {
  std::map<std::string, Tensor> t = snapshot(enc.params());
  t.emplace("reps.users", reps.users);
  t.emplace("reps.items", reps.items);
  t.emplace("__meta", meta_tensor({static_cast<double>(enc.config().dim),
                                   static_cast<double>(enc.config().layers),
                                   static_cast<double>(feature_dim)}));
  save_checkpoint(path, t);
}

Representations load_representations(const std::string& path) {
  auto t = load_checkpoint(path);
  auto users = t.find("reps.users");
  auto items = t.find("reps.items");
  if (users == t.end() || items == t.end())
    throw DataError("checkpoint " + path + " has no stored representations");
  return Representations{users->second, items->second};
}

void save_rqvae_checkpoint(const std::string& path, const RqVae& rqvae) {
  std::map<std::string, Tensor> t = snapshot(rqvae.params());
  const RqVaeConfig& c = rqvae.config();
  t.emplace("__meta", meta_tensor({static_cast<double>(c.input_dim),
                                   static_cast<double>(c.latent_dim),
                                   static_cast<double>(c.hidden_dim),
                                   static_cast<double>(c.levels),
                                   static_cast<double>(c.codebook_size), c.beta}));
  save_checkpoint(path, t);
}

RqVae load_rqvae_checkpoint(const std::string& path) {
  auto t = load_checkpoint(path);
  auto meta = t.find("__meta");
  if (meta == t.end() || meta->second.size() != 6)
    throw DataError("checkpoint " + path + " is not a quantizer checkpoint");
  const Tensor& m = meta->second;
  RqVaeConfig c;
  c.input_dim = static_cast<int64_t>(m[0]);
  c.latent_dim = static_cast<int64_t>(m[1]);
  c.hidden_dim = static_cast<int64_t>(m[2]);
  c.levels = static_cast<int>(m[3]);
  c.codebook_size = static_cast<int64_t>(m[4]);
  c.beta = m[5];
  Rng rng(1);
  RqVae rqvae(c, rng);
  t.erase("__meta");
  restore(rqvae.params(), t);
  return rqvae;
}

void save_recmodel_checkpoint(const std::string& path, const RecModel& model) {
  std::map<std::string, Tensor> t = snapshot(model.params());
  const RecModelConfig& c = model.config();
  t.emplace("__meta",
            meta_tensor({static_cast<double>(c.dim), static_cast<double>(c.heads),
                         static_cast<double>(c.layers), static_cast<double>(c.ffn_dim),
                         static_cast<double>(c.max_history),
                         static_cast<double>(static_cast<int>(c.pos)),
                         static_cast<double>(c.vocab),
                         static_cast<double>(c.id_length)}));
  save_checkpoint(path, t);
}

RecModel load_recmodel_checkpoint(const std::string& path) {
  auto t = load_checkpoint(path);
  auto meta = t.find("__meta");
  if (meta == t.end() || meta->second.size() != 8)
    throw DataError("checkpoint " + path + " is not a recommender checkpoint");
  const Tensor& m = meta->second;
  RecModelConfig c;
  c.dim = static_cast<int64_t>(m[0]);
  c.heads = static_cast<int>(m[1]);
  c.layers = static_cast<int>(m[2]);
  c.ffn_dim = static_cast<int64_t>(m[3]);
  c.max_history = static_cast<int64_t>(m[4]);
  c.pos = static_cast<PosEncoding>(static_cast<int>(m[5]));
  c.vocab = static_cast<int64_t>(m[6]);
  c.id_length = static_cast<int>(m[7]);
  Rng rng(1);
  RecModel model(c, rng);
  t.erase("__meta");
  restore(model.params(), t);
  return model;
}

RecIdRegistry build_registry_from_artifacts(const Config& cfg,
                                            const std::string& workdir,
                                            const InteractionDataset& ds) {
  require_file(workdir + "/codewords.tsv", "assign-ids");
  auto codes = load_codewords(workdir + "/codewords.tsv");
  if (static_cast<int64_t>(codes.size()) != ds.item_count)
    throw DataError("codewords.tsv covers " + std::to_string(codes.size()) +
                    " items but the dataset has " + std::to_string(ds.item_count));
  const TokenAssignment variant = cfg.token_variant == "random"
                                      ? TokenAssignment::kRandom
                                      : TokenAssignment::kPopularity;
  return RecIdRegistry::build(codes, ds.popularity, cfg.codebook, variant, cfg.seed);
}

void cmd_synth(const Config& cfg, const std::string& workdir, std::ostream& log) {
  fs::create_directories(dataset_dir(workdir));
  SynthConfig sc;
  sc.users = cfg.synth_users;
  sc.items = cfg.synth_items;
  sc.density = cfg.synth_density;
  sc.rank = cfg.synth_rank;
  sc.noise = cfg.synth_noise;
  sc.dim_visual = cfg.dim_visual;
  sc.dim_acoustic = cfg.dim_acoustic;
  sc.dim_textual = cfg.dim_textual;
  sc.seed = cfg.seed;
  SynthResult res = synth_dataset(sc);

  const std::string dir = dataset_dir(workdir);
  save_interactions(dir + "/interactions.tsv", res.pairs);
  std::vector<std::string> user_ids, item_ids;
  for (int64_t u = 0; u < sc.users; ++u) user_ids.push_back(std::to_string(u));
  for (int64_t i = 0; i < sc.items; ++i) item_ids.push_back(std::to_string(i));
  save_id_map(dir + "/user_map.tsv", user_ids);
  save_id_map(dir + "/item_map.tsv", item_ids);
  for (int m = 0; m < ItemFeatureBank::kModalities; ++m)
    if (res.bank.present[m])
      save_feature_file(dir + "/features_" + ItemFeatureBank::kNames[m] + ".bin",
                        res.bank.features[m]);
  write_text(dir + "/stats.txt", stats_report(res.dataset));
  write_resolved_config(cfg, workdir, "synth");
  log << stats_report(res.dataset);
}

void cmd_train_rqvae(const Config& cfg, const std::string& workdir, std::ostream& log) {
  WorkdirData data = load_workdir_dataset(cfg, workdir);
  Rng rng(cfg.seed);
  GraphEncoderConfig gc{cfg.dim, cfg.gcn_layers};
  const int64_t feature_dim = data.bank.total_dim();
  GraphEncoder enc(data.dataset.user_count, data.dataset.item_count, feature_dim,
                   gc, rng);
  Rng qrng = rng.fork(0x9a);
  RqVae rqvae(rqvae_config(cfg), qrng);

  std::ofstream flog(workdir + "/train_rqvae.log", std::ios::trunc);
  Stage1Result res = run_stage1(cfg, data, enc, rqvae, flog);
  log << "stage1: best valid recall@" << cfg.top_k << "=" << res.best_valid_recall
      << " at epoch " << res.best_epoch << " (" << res.epochs_run << " run)\n";

  save_encoder_checkpoint(workdir + "/graph_encoder.ckpt", enc, res.reps, feature_dim);
  save_rqvae_checkpoint(workdir + "/rqvae.ckpt", rqvae);
  write_resolved_config(cfg, workdir, "train-rqvae");
}

void cmd_assign_ids(const Config& cfg, const std::string& workdir, std::ostream& log) {
  WorkdirData data = load_workdir_dataset(cfg, workdir);
  require_file(workdir + "/rqvae.ckpt", "train-rqvae");
  require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
  RqVae rqvae = load_rqvae_checkpoint(workdir + "/rqvae.ckpt");
  Representations reps = load_representations(workdir + "/graph_encoder.ckpt");

  auto codes = rqvae.assign_codewords(reps.items);
  save_codewords(workdir + "/codewords.tsv", codes);
  RecIdRegistry registry = build_registry_from_artifacts(cfg, workdir, data.dataset);
  save_rec_ids(workdir + "/rec_ids.tsv", registry);
  write_text(workdir + "/collisions.txt", registry.collision_report());
  write_resolved_config(cfg, workdir, "assign-ids");
  log << registry.collision_report();
}

void cmd_train_rec(const Config& cfg, const std::string& workdir, std::ostream& log) {
  WorkdirData data = load_workdir_dataset(cfg, workdir);
  require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
  Representations reps = load_representations(workdir + "/graph_encoder.ckpt");
  RecIdRegistry registry = build_registry_from_artifacts(cfg, workdir, data.dataset);

  Rng rng(Rng(cfg.seed).fork(0x7ec));
  RecModel model(recmodel_config(cfg, registry), rng);
  std::ofstream flog(workdir + "/train_rec.log", std::ios::trunc);
  Stage2Result res = run_stage2(cfg, data.dataset, reps, registry, model, flog);
  log << "stage2: best valid recall@" << cfg.top_k << "=" << res.best_metric
      << " at epoch " << res.best_epoch << " (" << res.epochs_run << " run)\n";

  save_recmodel_checkpoint(workdir + "/recmodel.ckpt", model);
  write_resolved_config(cfg, workdir, "train-rec");
}

void cmd_recommend(const Config& cfg, const std::string& workdir, std::ostream& log) {
  WorkdirData data = load_workdir_dataset(cfg, workdir);
  require_file(workdir + "/recmodel.ckpt", "train-rec");
  require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
  Representations reps = load_representations(workdir + "/graph_encoder.ckpt");
  RecIdRegistry registry = build_registry_from_artifacts(cfg, workdir, data.dataset);
  RecModel model = load_recmodel_checkpoint(workdir + "/recmodel.ckpt");
  InferenceModel infer(model);

  std::ofstream os(workdir + "/recs.tsv", std::ios::trunc);
  if (!os) throw DataError("cannot write recs.tsv");
  os << std::setprecision(10);
  int64_t served = 0;
  for (int64_t u = 0; u < data.dataset.user_count; ++u) {
    const auto& history = data.dataset.train_items[static_cast<size_t>(u)];
    if (history.empty()) continue;
    Rng rng = Rng(cfg.seed).fork(static_cast<uint64_t>(u) + 1);
    EncodedSequence seq = embed_input(reps.items, history, cfg.history, rng);
    Tensor user_rep({reps.users.cols()});
    for (int64_t j = 0; j < reps.users.cols(); ++j)
      user_rep[j] = reps.users.at(u, j);
    auto mem = infer.encode(user_rep, seq);
    BeamSearchResult res = beam_search(infer, mem, registry, cfg.top_k, history);
    for (size_t r = 0; r < res.items.size(); ++r)
      os << u << '\t' << res.items[r] << '\t' << (r + 1) << '\t' << res.scores[r]
         << '\n';
    ++served;
  }
  write_resolved_config(cfg, workdir, "recommend");
  log << "wrote top-" << cfg.top_k << " recommendations for " << served
      << " users to recs.tsv\n";
}

void cmd_evaluate(const Config& cfg, const std::string& workdir, std::ostream& log,
                  bool with_mf) {
  WorkdirData data = load_workdir_dataset(cfg, workdir);
  require_file(workdir + "/recmodel.ckpt", "train-rec");
  require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
  Representations reps = load_representations(workdir + "/graph_encoder.ckpt");
  RecIdRegistry registry = build_registry_from_artifacts(cfg, workdir, data.dataset);
  RecModel model = load_recmodel_checkpoint(workdir + "/recmodel.ckpt");
  InferenceModel infer(model);

  GenEvalOptions ge;
  ge.k = cfg.top_k;
  ge.target = Split::kTest;
  ge.exclude_seen = true;
  ge.max_history = cfg.history;
  ge.seed = cfg.seed;

  std::vector<std::pair<std::string, MetricReport>> rows;
  rows.emplace_back("generative", evaluate_generative(infer, reps, registry,
                                                      data.dataset, ge));
  rows.emplace_back("popularity",
                    evaluate_popularity(data.dataset, cfg.top_k, Split::kTest));
  if (with_mf) {
    MfOptions mo;
    mo.dim = cfg.dim;
    mo.lr = cfg.mf_lr;
    mo.l2 = cfg.mf_l2;
    mo.max_epochs = cfg.mf_epochs;
    mo.patience = cfg.patience;
    mo.eval_k = cfg.top_k;
    mo.seed = cfg.seed;
    MfModel mf = mf_train(data.dataset, mo);
    rows.emplace_back("mf", evaluate_mf(mf, data.dataset, cfg.top_k, Split::kTest));
  }

  std::ostringstream txt;
  txt << "test-split metrics (training items excluded from candidates)\n"
      << metric_table(rows);
  write_text(workdir + "/metrics.txt", txt.str());
  std::ostringstream tsv;
  tsv << "method\trecall@" << cfg.top_k << "\tndcg@" << cfg.top_k << "\tusers\n";
  tsv << std::setprecision(10);
  for (const auto& [name, rep] : rows)
    tsv << name << '\t' << rep.recall << '\t' << rep.ndcg << '\t' << rep.users << '\n';
  write_text(workdir + "/metrics.tsv", tsv.str());
  write_resolved_config(cfg, workdir, "evaluate");
  log << txt.str();
}

void cmd_bench(const Config& cfg, const std::string& workdir, std::ostream& log) {
  BenchOptions bo;
  bo.base_items = cfg.bench_base_items;
  bo.timed_users = cfg.bench_users;
  bo.repetitions = cfg.bench_reps;
  bo.k = cfg.top_k;
  bo.dim = cfg.dim;
  bo.history = cfg.history;
  bo.heads = cfg.heads;
  bo.layers = cfg.layers;
  bo.ffn_dim = cfg.ffn_dim;
  bo.levels = static_cast<int>(cfg.id_length - 1);
  bo.codebook = cfg.codebook;
  bo.seed = cfg.seed;
  auto rows = run_inference_bench(bo, &log);
  write_text(workdir + "/bench.txt", bench_table(rows));
  save_bench_csv(workdir + "/bench.csv", rows);
  write_resolved_config(cfg, workdir, "bench");
  log << bench_table(rows);
}

void cmd_ablate(const Config& cfg, const std::string& workdir, std::ostream& log,
                const std::string& sweep) {
  WorkdirData data = load_workdir_dataset(cfg, workdir);

  auto test_metrics = [&](const Config& c, const Representations& reps,
                          const RecIdRegistry& registry) {
    Rng rng(Rng(c.seed).fork(0x7ec));
    RecModel model(recmodel_config(c, registry), rng);
    std::ostringstream sink;
    run_stage2(c, data.dataset, reps, registry, model, sink);
    InferenceModel infer(model);
    GenEvalOptions ge;
    ge.k = c.top_k;
    ge.target = Split::kTest;
    ge.max_history = c.history;
    ge.seed = c.seed;
    return evaluate_generative(infer, reps, registry, data.dataset, ge);
  };

  auto full_pipeline_metrics = [&](const Config& c) {
    Rng rng(c.seed);
    GraphEncoderConfig gc{c.dim, c.gcn_layers};
    GraphEncoder enc(data.dataset.user_count, data.dataset.item_count,
                     data.bank.total_dim(), gc, rng);
    Rng qrng = rng.fork(0x9a);
    RqVae rqvae(rqvae_config(c), qrng);
    std::ostringstream sink;
    Stage1Result s1 = run_stage1(c, data, enc, rqvae, sink);
    auto codes = rqvae.assign_codewords(s1.reps.items);
    const TokenAssignment variant = c.token_variant == "random"
                                        ? TokenAssignment::kRandom
                                        : TokenAssignment::kPopularity;
    RecIdRegistry registry = RecIdRegistry::build(codes, data.dataset.popularity,
                                                  c.codebook, variant, c.seed);
    return test_metrics(c, s1.reps, registry);
  };

  std::ostringstream csv;
  csv << std::setprecision(10);
  if (sweep == "pe") {
    require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
    Representations reps = load_representations(workdir + "/graph_encoder.ckpt");
    RecIdRegistry registry = build_registry_from_artifacts(cfg, workdir, data.dataset);
    csv << "pos_encoding,recall,ndcg\n";
    for (const std::string mode : {"relation", "sinusoid", "none"}) {
      Config c = cfg;
      c.pos_encoding = mode;
      MetricReport rep = test_metrics(c, reps, registry);
      csv << mode << ',' << rep.recall << ',' << rep.ndcg << '\n';
      log << "pe=" << mode << " recall@" << c.top_k << "=" << rep.recall << "\n";
    }
  } else if (sweep == "token") {
    require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
    Representations reps = load_representations(workdir + "/graph_encoder.ckpt");
    csv << "token_variant,recall,ndcg\n";
    for (const std::string variant : {"popularity", "random"}) {
      Config c = cfg;
      c.token_variant = variant;
      RecIdRegistry registry = build_registry_from_artifacts(c, workdir, data.dataset);
      MetricReport rep = test_metrics(c, reps, registry);
      csv << variant << ',' << rep.recall << ',' << rep.ndcg << '\n';
      log << "token=" << variant << " recall@" << c.top_k << "=" << rep.recall << "\n";
    }
  } else if (sweep == "length") {
    csv << "id_length,recall,ndcg\n";
    for (int64_t m = 2; m <= 5; ++m) {
      Config c = cfg;
      c.id_length = m;
      MetricReport rep = full_pipeline_metrics(c);
      csv << m << ',' << rep.recall << ',' << rep.ndcg << '\n';
      log << "id_length=" << m << " recall@" << c.top_k << "=" << rep.recall << "\n";
    }
  } else if (sweep == "codebook") {
    csv << "codebook,recall,ndcg\n";
    for (int64_t l : {64, 128, 256, 512}) {
      Config c = cfg;
      c.codebook = l;
      MetricReport rep = full_pipeline_metrics(c);
      csv << l << ',' << rep.recall << ',' << rep.ndcg << '\n';
      log << "codebook=" << l << " recall@" << c.top_k << "=" << rep.recall << "\n";
    }
  } else if (sweep == "collision") {
    // nested subsets under the quantizer trained on the full catalog
    require_file(workdir + "/rqvae.ckpt", "train-rqvae");
    require_file(workdir + "/graph_encoder.ckpt", "train-rqvae");
    RqVae rqvae = load_rqvae_checkpoint(workdir + "/rqvae.ckpt");
    Representations full_reps = load_representations(workdir + "/graph_encoder.ckpt");

    std::vector<int64_t> perm(static_cast<size_t>(data.dataset.item_count));
    for (int64_t i = 0; i < data.dataset.item_count; ++i)
      perm[static_cast<size_t>(i)] = i;
    Rng prng = Rng(cfg.seed).fork(0xc011);
    prng.shuffle(perm);

    csv << "scale,items,collision_rate,recall_popularity,recall_random\n";
    for (double scale : {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}) {
      const int64_t keep = std::max<int64_t>(
          1, static_cast<int64_t>(data.dataset.item_count * scale));
      std::vector<int64_t> kept(perm.begin(), perm.begin() + keep);
      std::sort(kept.begin(), kept.end());
      std::vector<int32_t> remap(static_cast<size_t>(data.dataset.item_count), -1);
      for (int64_t n = 0; n < keep; ++n)
        remap[static_cast<size_t>(kept[static_cast<size_t>(n)])] =
            static_cast<int32_t>(n);

      std::vector<std::pair<int32_t, int32_t>> pairs;
      for (int64_t u = 0; u < data.dataset.user_count; ++u) {
        auto add = [&](const std::vector<int32_t>& v) {
          for (int32_t i : v)
            if (remap[static_cast<size_t>(i)] >= 0)
              pairs.emplace_back(static_cast<int32_t>(u), remap[static_cast<size_t>(i)]);
        };
        add(data.dataset.train_items[static_cast<size_t>(u)]);
        add(data.dataset.valid_items[static_cast<size_t>(u)]);
        add(data.dataset.test_items[static_cast<size_t>(u)]);
      }
      InteractionDataset sub = InteractionDataset::from_pairs(
          data.dataset.user_count, keep, pairs, cfg.seed);

      Tensor sub_items({keep, full_reps.items.cols()});
      for (int64_t n = 0; n < keep; ++n)
        for (int64_t j = 0; j < full_reps.items.cols(); ++j)
          sub_items.at(n, j) = full_reps.items.at(kept[static_cast<size_t>(n)], j);
      Representations sub_reps{full_reps.users, sub_items};

      auto codes = rqvae.assign_codewords(sub_items);
      double recall_pop = 0.0, recall_rnd = 0.0, rate = 0.0;
      for (const std::string variant : {"popularity", "random"}) {
        Config c = cfg;
        c.token_variant = variant;
        const TokenAssignment ta = variant == "random" ? TokenAssignment::kRandom
                                                       : TokenAssignment::kPopularity;
        RecIdRegistry registry =
            RecIdRegistry::build(codes, sub.popularity, c.codebook, ta, c.seed);
        rate = registry.collision_rate();
        Rng rng(Rng(c.seed).fork(0x7ec));
        RecModel model(recmodel_config(c, registry), rng);
        std::ostringstream sink;
        run_stage2(c, sub, sub_reps, registry, model, sink);
        InferenceModel infer(model);
        GenEvalOptions ge;
        ge.k = c.top_k;
        ge.target = Split::kTest;
        ge.max_history = c.history;
        ge.seed = c.seed;
        const double r = evaluate_generative(infer, sub_reps, registry, sub, ge).recall;
        (variant == "popularity" ? recall_pop : recall_rnd) = r;
      }
      csv << scale << ',' << keep << ',' << rate << ',' << recall_pop << ','
          << recall_rnd << '\n';
      log << "scale=" << scale << " items=" << keep << " collision_rate=" << rate
          << " recall(pop)=" << recall_pop << " recall(rand)=" << recall_rnd << "\n";
    }
  } else {
    throw UsageError("unknown ablation sweep `" + sweep +
                     "`; expected pe, token, length, codebook or collision");
  }

  write_text(workdir + "/ablate_" + sweep + ".csv", csv.str());
  write_resolved_config(cfg, workdir, "ablate-" + sweep);
}

}  // namespace genrec
