// Command-line front end: synthetic corpora, SVO classifiers, proposal
// scoring, caption training, beam-search generation, grounding and metrics.
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"

#include "gcap/config.hpp"
#include "gcap/dataset.hpp"
#include "gcap/decoder.hpp"
#include "gcap/grad_check.hpp"
#include "gcap/metrics.hpp"
#include "gcap/synth.hpp"

namespace fs = std::filesystem;
using namespace gcap;

namespace {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

SemanticSubset parse_subset(const std::string& csv) {
  SemanticSubset s;
  if (csv.empty()) return s;
  size_t start = 0;
  while (start <= csv.size()) {
    const size_t comma = csv.find(',', start);
    const std::string item = csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (item == "svo") s.svo = true;
    else if (item == "cls") s.cls = true;
    else if (item == "det") s.det = true;
    else if (!item.empty()) {
      throw ValidationError("unknown semantic block '" + item + "' (expected svo,cls,det)");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return s;
}

std::vector<std::string> make_wordlist(const std::vector<std::string>& defaults, size_t n,
                                       const char* stem) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    if (i < defaults.size()) out.push_back(defaults[i]);
    else out.push_back(std::string(stem) + std::to_string(i));
  }
  return out;
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  std::string out;
  size_t n_train = 200, n_val = 20, n_test = 50;
  size_t m = 8, dim = 32;
  double noise = 0.1;
  uint64_t seed = 1;
  size_t n_subjects = 6, n_verbs = 6, n_objects = 6;
  size_t cls_classes = 16, det_classes = 8;
};

int run_synth(const SynthArgs& a) {
  SyntheticCorpusSpec spec;
  spec.n_train = a.n_train;
  spec.n_val = a.n_val;
  spec.n_test = a.n_test;
  spec.proposals_per_video = a.m;
  spec.descriptor_dim = a.dim;
  spec.noise = a.noise;
  spec.seed = a.seed;
  spec.subjects = make_wordlist(spec.subjects, a.n_subjects, "subject");
  spec.verbs = make_wordlist(spec.verbs, a.n_verbs, "verb");
  spec.objects = make_wordlist(spec.objects, a.n_objects, "object");
  spec.cls_classes = a.cls_classes;
  spec.det_classes = a.det_classes;
  synth_corpus(spec, a.out);
  std::cout << "wrote synthetic corpus (" << a.n_train << " train / " << a.n_val << " val / "
            << a.n_test << " test) to " << a.out << "\n";
  return 0;
}

// ----------------------------------------------------------- mine-vocab ---

int run_mine_vocab(const std::string& annotations, const std::string& out_dir) {
  const auto anns = load_annotations(annotations);
  const SvoVocabulary vocab = mine_svo_vocabulary(anns);
  save_svo_vocabulary(vocab, out_dir);
  std::cout << "mined " << vocab.subjects.size() << " subjects, " << vocab.verbs.size()
            << " verbs and " << vocab.objects.size() << " objects\n";
  return 0;
}

// ------------------------------------------------------------ svo-train ---

Vec<double> video_mean_descriptor(const CorpusPaths& corpus, const std::string& video_id) {
  const FeatureContainer c = FeatureContainer::load(corpus.features(video_id));
  const auto t = c.tensor("descriptors");
  const size_t d = c.cols();
  const size_t rows = t.size() / std::max<size_t>(1, d);
  if (rows == 0) throw ValidationError("video '" + video_id + "' has no descriptors");
  Vec<double> mean(d, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t cidx = 0; cidx < d; ++cidx) mean[cidx] += static_cast<double>(t[r * d + cidx]);
  }
  for (auto& v : mean) v /= static_cast<double>(rows);
  return mean;
}

struct SvoTrainArgs {
  std::string corpus, vocab_dir, out;
  std::string kernel = "linear";
  std::string verb_features;  // optional container of precomputed motion features
  double gamma = 1.0;
  bool bias = false;
};

int run_svo_train(const SvoTrainArgs& a) {
  const CorpusPaths corpus{a.corpus};
  const auto videos = load_videos(corpus.videos());
  const auto annotations = load_annotations(corpus.annotations());
  const SvoVocabulary vocab = load_svo_vocabulary(a.vocab_dir);
  if (vocab.total() == 0) throw ValidationError("svo-train: empty SVO vocabulary");

  KernelSpec kernel;
  if (a.kernel == "linear") kernel.kind = KernelKind::Linear;
  else if (a.kernel == "rbf") kernel = {KernelKind::Rbf, a.gamma};
  else throw ValidationError("svo-train: unknown kernel '" + a.kernel + "'");

  std::map<std::string, const VideoAnnotations*> ann_by_id;
  for (const auto& va : annotations) ann_by_id[va.video_id] = &va;

  std::vector<const VideoMeta*> train_videos, other_videos;
  for (const auto& v : videos) {
    (v.split == "train" ? train_videos : other_videos).push_back(&v);
  }
  if (train_videos.size() < 2) throw ValidationError("svo-train: need >= 2 training videos");

  // per-video visual features: mean pooled descriptors. Verb classes use an
  // externally supplied motion-feature container when one is given.
  const size_t dim = video_mean_descriptor(corpus, train_videos[0]->video_id).size();
  Matrix<double> x(train_videos.size(), dim);
  for (size_t i = 0; i < train_videos.size(); ++i) {
    const Vec<double> f = video_mean_descriptor(corpus, train_videos[i]->video_id);
    for (size_t c = 0; c < dim; ++c) x.at(i, c) = f[c];
  }
  const Matrix<double> k = gram_matrix(x, kernel);

  FeatureContainer verb_container;
  Matrix<double> xv;
  Matrix<double> kv;
  const bool has_verb_features = !a.verb_features.empty();
  if (has_verb_features) {
    verb_container = FeatureContainer::load(a.verb_features);
    xv = Matrix<double>(train_videos.size(), verb_container.cols());
    for (size_t i = 0; i < train_videos.size(); ++i) {
      const auto t = verb_container.tensor(train_videos[i]->video_id);
      for (size_t c = 0; c < xv.cols; ++c) xv.at(i, c) = static_cast<double>(t[c]);
    }
    kv = gram_matrix(xv, kernel);
  }
  const auto grid = default_lambda_grid();

  auto video_has = [&](const std::string& id, SvoPart part, const std::string& token) {
    auto it = ann_by_id.find(id);
    if (it == ann_by_id.end()) return false;
    for (const auto& t : it->second->triplets) {
      const auto& field = part == kSubject ? t.subject : (part == kVerb ? t.verb : t.object);
      if (field && *field == token) return true;
    }
    return false;
  };

  const size_t total_classes = vocab.total();
  Matrix<double> train_resp(train_videos.size(), total_classes);
  Matrix<double> other_resp(other_videos.size(), total_classes);

  size_t col = 0;
  for (int part = 0; part < 3; ++part) {
    const bool verb_part = part == kVerb && has_verb_features;
    const Matrix<double>& part_x = verb_part ? xv : x;
    const Matrix<double>& part_k = verb_part ? kv : k;
    for (const auto& token : vocab.part(static_cast<SvoPart>(part))) {
      Vec<double> y(train_videos.size());
      for (size_t i = 0; i < train_videos.size(); ++i) {
        y[i] = video_has(train_videos[i]->video_id, static_cast<SvoPart>(part), token) ? 1.0
                                                                                       : -1.0;
      }
      const LambdaSelection sel = select_lambda(part_k, y, grid, kernel, a.bias);
      const LsSvmModel model = lssvm_train(part_k, y, sel.lambda, kernel, a.bias);

      // training videos get leave-one-out responses, the rest full-model ones
      const Vec<double> loo = lssvm_loo(model);
      for (size_t i = 0; i < train_videos.size(); ++i) train_resp.at(i, col) = loo[i];
      for (size_t i = 0; i < other_videos.size(); ++i) {
        Vec<double> f;
        if (verb_part) {
          const auto t = verb_container.tensor(other_videos[i]->video_id);
          f.assign(t.begin(), t.end());
        } else {
          f = video_mean_descriptor(corpus, other_videos[i]->video_id);
        }
        other_resp.at(i, col) = lssvm_predict(model, kernel_row(part_x, f, kernel));
      }
      ++col;
    }
  }

  FeatureContainer out(static_cast<uint32_t>(total_classes));
  std::vector<float> row(total_classes);
  auto add_row = [&](const std::string& id, const Matrix<double>& resp, size_t i) {
    for (size_t c = 0; c < total_classes; ++c) row[c] = static_cast<float>(resp.at(i, c));
    out.add_tensor(id, row, 1);
  };
  for (size_t i = 0; i < train_videos.size(); ++i) {
    add_row(train_videos[i]->video_id, train_resp, i);
  }
  for (size_t i = 0; i < other_videos.size(); ++i) {
    add_row(other_videos[i]->video_id, other_resp, i);
  }
  out.save(a.out);
  std::cout << "trained " << total_classes << " one-vs-all LS-SVM classes, responses in "
            << a.out << "\n";
  return 0;
}

// ------------------------------------------------------- score-proposals ---

struct ScoreArgs {
  std::string corpus, out, config_file;
  int min_frames = -1;
  double min_area = -1;
  double dedup = -1;
  size_t m = 0;  // 0 -> corpus meta
};

int run_score_proposals(const ScoreArgs& a) {
  const CorpusPaths corpus{a.corpus};
  const CorpusMeta meta = CorpusMeta::load(corpus.meta());
  Config cfg;
  if (!a.config_file.empty()) cfg = Config::load(a.config_file);
  const size_t m = a.m ? a.m : cfg.get_size("proposals", meta.proposals_per_video);
  fs::create_directories(a.out);

  FilterConfig fcfg;
  fcfg.min_frames =
      a.min_frames >= 0 ? a.min_frames : static_cast<int>(cfg.get_size("min_frames", 15));
  fcfg.min_area_fraction =
      a.min_area >= 0 ? a.min_area : cfg.get_double("min_area_fraction", 0.005);
  fcfg.dedup_threshold = a.dedup >= 0 ? a.dedup : cfg.get_double("dedup_threshold", 0.5);
  fcfg.frame_width = meta.frame_width;
  fcfg.frame_height = meta.frame_height;

  for (const auto& v : load_videos(corpus.videos())) {
    const FeatureContainer desc = FeatureContainer::load(corpus.features(v.video_id));
    std::vector<ProposalRecord> pool = load_proposals(corpus.proposals(v.video_id), desc);
    const auto cls = frame_cls_scores(FeatureContainer::load(corpus.cls_scores(v.video_id)),
                                      meta.cls_classes);
    const auto dets = frame_detections(FeatureContainer::load(corpus.detections(v.video_id)),
                                       meta.max_dets_per_frame);
    std::vector<ScoredProposal> scored;
    for (auto& p : pool) {
      const double s = score_proposal(p, cls, dets);
      scored.push_back({std::move(p), s});
    }
    scored = filter_pool(std::move(scored), fcfg);
    if (scored.empty()) {
      throw ValidationError("score-proposals: video '" + v.video_id +
                            "' has no proposals left after filtering");
    }
    const ProposalFeatureSet<float> set = select_and_pad<float>(scored, m);

    FeatureContainer out_c(static_cast<uint32_t>(meta.descriptor_dim));
    out_c.add_tensor("P", set.features.data, static_cast<uint32_t>(set.features.rows));
    out_c.save(fs::path(a.out) / (v.video_id + ".gcap"));

    std::ofstream os(fs::path(a.out) / (v.video_id + ".jsonl"));
    std::sort(scored.begin(), scored.end(), [](const auto& l, const auto& r) {
      if (l.score != r.score) return l.score > r.score;
      return l.prop.id < r.prop.id;
    });
    for (size_t i = 0; i < std::min(m, scored.size()); ++i) {
      os << "{\"id\": " << scored[i].prop.id << ", \"score\": " << fmt_g17(scored[i].score)
         << "}\n";
    }
  }
  std::cout << "scored proposal pools written to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
  std::string corpus, out;
  std::string variant = "att";
  std::string sem;
  std::string svo_responses;
  std::string config_file;
  std::string select = "loss";
  std::string precision = "f32";
  size_t epochs = 0;  // 0 -> config/max_epochs
  uint64_t seed = 1;
  size_t hidden = 0, embedding = 0;
  double lr = 0, dropout = -1;
  size_t val_beam = 1;
  bool no_val_bleu = false;
};

ModelConfig model_config_from(const TrainArgs& a, const Config& cfg) {
  ModelConfig mc;
  mc.variant = parse_variant(a.variant);
  mc.semantic_subset = parse_subset(a.sem);
  mc.hidden = a.hidden ? a.hidden : cfg.get_size("hidden", mc.hidden);
  mc.embedding = a.embedding ? a.embedding : cfg.get_size("embedding", mc.embedding);
  mc.attention = cfg.get_size("attention", mc.attention);
  mc.dropout = a.dropout >= 0 ? a.dropout : cfg.get_double("dropout", mc.dropout);
  mc.learning_rate = a.lr > 0 ? a.lr : cfg.get_double("learning_rate", mc.learning_rate);
  mc.adam_beta1 = cfg.get_double("adam_beta1", mc.adam_beta1);
  mc.adam_beta2 = cfg.get_double("adam_beta2", mc.adam_beta2);
  mc.adam_eps = cfg.get_double("adam_eps", mc.adam_eps);
  mc.grad_clip = cfg.get_double("grad_clip", mc.grad_clip);
  mc.batch_size = cfg.get_size("batch_size", mc.batch_size);
  mc.max_epochs = a.epochs ? a.epochs : cfg.get_size("epochs", mc.max_epochs);
  mc.seed = a.seed;
  mc.init_scale = cfg.get_double("init_scale", mc.init_scale);
  mc.forget_bias_one = cfg.get_bool("forget_bias_one", mc.forget_bias_one);
  return mc;
}

template <typename T>
int run_train_typed(const TrainArgs& a, const Config& cfg) {
  const CorpusPaths corpus{a.corpus};
  const CorpusMeta meta = CorpusMeta::load(corpus.meta());
  ModelConfig mc = model_config_from(a, cfg);
  const size_t m = cfg.get_size("proposals", meta.proposals_per_video);

  // caption vocabulary from the training split only
  const auto videos = load_videos(corpus.videos());
  const auto references = load_references(corpus.references());
  std::set<std::string> train_ids;
  for (const auto& v : videos) {
    if (v.split == "train") train_ids.insert(v.video_id);
  }
  std::vector<std::string> train_sentences;
  for (const auto& r : references) {
    if (train_ids.count(r.video_id)) train_sentences.push_back(r.sentence);
  }
  const Vocabulary vocab = Vocabulary::build(train_sentences);

  SemanticOptions sem;
  sem.subset = mc.semantic_subset;
  sem.det_window = cfg.get_size("det_window", sem.det_window);
  FeatureContainer svo_responses;
  if (sem.subset.svo) {
    if (a.svo_responses.empty()) {
      throw ValidationError("train: --sem svo needs --svo-responses (from `gcap svo-train`)");
    }
    svo_responses = FeatureContainer::load(a.svo_responses);
    sem.svo_responses = &svo_responses;
  }

  auto train_set = build_training_set<T>(corpus, meta, "train", vocab, m, sem);
  auto val_set = build_training_set<T>(corpus, meta, "val", vocab, m, sem);
  if (train_set.empty()) throw ValidationError("train: no training examples");
  const size_t semantic_dim = train_set[0].semantic ? train_set[0].semantic->size() : 0;

  CaptionModel<T> model = build_model<T>(mc, vocab.size(), meta.descriptor_dim, semantic_dim);

  // per-video references for the validation BLEU scorer
  std::map<std::string, std::vector<std::vector<std::string>>> val_refs;
  for (const auto& r : references) val_refs[r.video_id].push_back(tokenize(r.sentence));
  std::map<std::string, const TrainingExample<T>*> val_by_id;
  for (const auto& e : val_set) val_by_id.emplace(e.video_id, &e);

  TrainOptions<T> opts;
  opts.epochs = mc.max_epochs;
  if (!a.no_val_bleu && !val_set.empty()) {
    const size_t val_beam = a.val_beam;
    opts.val_bleu_scorer = [&val_by_id, &val_refs, &vocab, val_beam](const CaptionModel<T>& mm) {
      BeamConfig bc;
      bc.beam_width = val_beam;
      std::vector<EvalPair> pairs;
      for (const auto& [id, ex] : val_by_id) {
        const DecodeResult<T> d = beam_search(
            mm, ex->features, ex->semantic ? &*ex->semantic : nullptr, bc);
        EvalPair p;
        for (int tok : d.tokens) p.candidate.push_back(vocab.word(tok));
        p.references = val_refs.at(id);
        pairs.push_back(std::move(p));
      }
      return pairs.empty() ? 0.0 : bleu(pairs, 4)[3];
    };
  }

  fs::create_directories(a.out);
  std::ofstream log_csv(fs::path(a.out) / "train_log.csv");
  log_csv << "epoch,train_loss,val_loss,val_bleu4\n";
  opts.on_epoch = [&log_csv](const EpochLog& row) {
    log_csv << row.epoch << "," << fmt_g17(row.train_loss) << "," << fmt_g17(row.val_loss) << ","
            << fmt_g17(row.val_bleu4) << "\n";
    log_csv.flush();
    std::cout << "epoch " << row.epoch << " train_loss " << row.train_loss << " val_loss "
              << row.val_loss << " val_bleu4 " << row.val_bleu4 << "\n";
  };

  TrainResult<T> result = train(std::move(model), std::span<const TrainingExample<T>>(train_set),
                                std::span<const TrainingExample<T>>(val_set), opts);

  const CaptionModel<T>& chosen =
      a.select == "bleu" ? result.best_by_bleu
                         : (a.select == "loss" ? result.best_by_loss : result.final_model);
  if (a.select != "bleu" && a.select != "loss" && a.select != "final") {
    throw ValidationError("train: --select must be loss, bleu or final");
  }
  save_checkpoint(chosen, fs::path(a.out) / "model");
  vocab.save(fs::path(a.out) / "vocab.txt");
  std::cout << "saved checkpoint (selected by " << a.select << ", epoch "
            << (a.select == "bleu" ? result.best_bleu_epoch : result.best_loss_epoch) << ") to "
            << a.out << "\n";
  return 0;
}

int run_train(const TrainArgs& a) {
  Config cfg;
  if (!a.config_file.empty()) cfg = Config::load(a.config_file);
  if (a.precision == "f32") return run_train_typed<float>(a, cfg);
  if (a.precision == "f64") return run_train_typed<double>(a, cfg);
  throw ValidationError("train: --precision must be f32 or f64");
}

// ------------------------------------------------------------- generate ---

struct GenerateArgs {
  std::string model_dir, corpus, out;
  std::string split = "test";
  std::string svo_responses;
  size_t beam = 20;
  size_t min_len = 4;
  size_t max_len = kMaxSentenceLen;
  bool sample = false;
  uint64_t seed = 1;
  std::string precision = "f32";
};

template <typename T>
int run_generate_typed(const GenerateArgs& a) {
  const CorpusPaths corpus{a.corpus};
  const CorpusMeta meta = CorpusMeta::load(corpus.meta());
  const CaptionModel<T> model = load_checkpoint<T>(fs::path(a.model_dir) / "model");
  const Vocabulary vocab = Vocabulary::load(fs::path(a.model_dir) / "vocab.txt");
  if (vocab.size() != model.vocab_size) {
    throw ValidationError("generate: vocabulary size does not match the checkpoint");
  }

  SemanticOptions sem;
  sem.subset = model.cfg.semantic_subset;
  FeatureContainer svo_responses;
  if (sem.subset.svo) {
    if (a.svo_responses.empty()) {
      throw ValidationError("generate: the model uses svo features, pass --svo-responses");
    }
    svo_responses = FeatureContainer::load(a.svo_responses);
    sem.svo_responses = &svo_responses;
  }

  BeamConfig bc;
  bc.beam_width = a.beam;
  bc.min_len = a.min_len;
  bc.max_len = a.max_len;
  RandomStream sample_rng(a.seed);

  std::vector<CaptionRecord> records;
  for (const auto& v : load_videos(corpus.videos())) {
    if (v.split != a.split) continue;
    const ProposalFeatureSet<T> features =
        prepare_features<T>(corpus, meta, v.video_id, meta.proposals_per_video);
    std::optional<Vec<T>> semantic;
    if (sem.subset.any()) {
      const SemanticFeature f = video_semantic_feature(corpus, meta, v.video_id, sem);
      semantic = Vec<T>(f.values.begin(), f.values.end());
    }
    const Vec<T>* sem_p = semantic ? &*semantic : nullptr;
    const DecodeResult<T> d =
        a.sample ? sample_sentence(model, features, sem_p, sample_rng, a.min_len, a.max_len)
                 : beam_search(model, features, sem_p, bc);

    CaptionRecord rec;
    rec.video_id = v.video_id;
    rec.log_prob = d.log_prob;
    rec.finished = d.finished;
    rec.proposal_ids = features.source_ids;
    std::string sentence;
    for (size_t t = 0; t < d.tokens.size(); ++t) {
      const std::string& w = vocab.word(d.tokens[t]);
      if (!sentence.empty()) sentence += ' ';
      sentence += w;
      TraceEntry e;
      e.word = w;
      e.t = static_cast<int>(t);
      e.beta.assign(d.trace[t].beta.begin(), d.trace[t].beta.end());
      e.argmax = d.trace[t].argmax;
      rec.trace.push_back(std::move(e));
    }
    rec.sentence = sentence;
    records.push_back(std::move(rec));
  }
  save_captions(a.out, records);
  std::cout << "decoded " << records.size() << " videos to " << a.out << "\n";
  return 0;
}

int run_generate(const GenerateArgs& a) {
  if (a.precision == "f32") return run_generate_typed<float>(a);
  if (a.precision == "f64") return run_generate_typed<double>(a);
  throw ValidationError("generate: --precision must be f32 or f64");
}

// --------------------------------------------------------------- ground ---

struct GroundArgs {
  std::string captions, corpus, out, stoplist;
};

int run_ground(const GroundArgs& a) {
  const CorpusPaths corpus{a.corpus};
  const StopList stop = a.stoplist.empty() ? StopList::defaults() : StopList::load(a.stoplist);
  const auto captions = load_captions(a.captions);

  std::vector<GroundingRecord> out;
  for (const auto& c : captions) {
    const FeatureContainer desc = FeatureContainer::load(corpus.features(c.video_id));
    const auto pool = load_proposals(corpus.proposals(c.video_id), desc);

    std::vector<std::string> words = tokenize(c.sentence);
    std::vector<AttentionStep<double>> trace;
    for (const auto& t : c.trace) {
      AttentionStep<double> s;
      s.epsilon.assign(t.beta.size(), 0.0);
      s.beta = t.beta;
      s.argmax = t.argmax;
      trace.push_back(std::move(s));
    }
    GroundingRecord rec;
    rec.video_id = c.video_id;
    rec.sentence = c.sentence;
    rec.log_prob = c.log_prob;
    rec.words = ground<double>(words, trace, c.proposal_ids, pool, stop);
    out.push_back(std::move(rec));
  }
  save_grounding(a.out, out);
  std::cout << "grounded " << out.size() << " captions to " << a.out << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval ---

struct EvalArgs {
  std::string candidates, references, out, alignment;
};

int run_eval(const EvalArgs& a) {
  const auto captions = load_captions(a.candidates);
  const auto references = load_references(a.references);
  if (captions.empty()) throw ValidationError("eval: no candidate sentences");

  std::map<std::string, std::vector<std::vector<std::string>>> refs;
  for (const auto& r : references) refs[r.video_id].push_back(tokenize(r.sentence));

  std::vector<EvalPair> pairs;
  for (const auto& c : captions) {
    auto it = refs.find(c.video_id);
    if (it == refs.end()) {
      throw ValidationError("eval: no references for video '" + c.video_id + "'");
    }
    pairs.push_back({tokenize(c.sentence), it->second});
  }
  const std::vector<double> scores = bleu(pairs, 4);

  std::string csv = "metric,value\n";
  for (int n = 1; n <= 4; ++n) {
    csv += "BLEU@" + std::to_string(n) + "," + fmt_g17(scores[n - 1] * 100.0) + "\n";
  }
  csv += "METEOR,n/a\n";
  if (!a.alignment.empty()) {
    const auto alignment = load_alignment(a.alignment);
    csv += "token_accuracy," + fmt_g17(token_accuracy(captions, references) * 100.0) + "\n";
    const GroundingEval g = grounding_accuracy(captions, alignment);
    csv += "grounding_accuracy," + fmt_g17(g.accuracy() * 100.0) + "\n";
  }

  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os(a.out);
    if (!os) throw ValidationError("eval: cannot open " + a.out);
    os << csv;
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

// ------------------------------------------------------------ grad-check ---

struct GradCheckArgs {
  size_t seeds = 5;
  size_t steps = 5;
  double tol = 1e-6;
  std::string variants = "meanpool,att,att-sem,stacked";
};

int run_grad_check(const GradCheckArgs& a) {
  std::vector<Variant> variants;
  size_t start = 0;
  while (start <= a.variants.size()) {
    const size_t comma = a.variants.find(',', start);
    const std::string item =
        a.variants.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!item.empty()) variants.push_back(parse_variant(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (variants.empty()) throw ValidationError("grad-check: no variants selected");

  const auto reports = gradient_check_suite(variants, a.seeds, a.steps);
  bool ok = true;
  for (const auto& r : reports) {
    const bool pass = r.max_rel_err < a.tol;
    ok = ok && pass;
    std::cout << (pass ? "ok  " : "FAIL") << " variant=" << variant_name(r.variant)
              << " seed=" << r.seed << " max_rel_err=" << fmt_g17(r.max_rel_err) << " ("
              << r.worst_param << ")\n";
  }
  if (!ok) {
    std::cerr << "gradient check failed (tolerance " << a.tol << ")\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grounded video captioning engine"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  synth_cmd->add_option("--train", synth_args.n_train, "training videos");
  synth_cmd->add_option("--val", synth_args.n_val, "validation videos");
  synth_cmd->add_option("--test", synth_args.n_test, "test videos");
  synth_cmd->add_option("--m", synth_args.m, "proposals per video");
  synth_cmd->add_option("--dim", synth_args.dim, "descriptor dimension D");
  synth_cmd->add_option("--noise", synth_args.noise, "descriptor noise sigma");
  synth_cmd->add_option("--seed", synth_args.seed, "random seed");
  synth_cmd->add_option("--subjects", synth_args.n_subjects, "subject vocabulary size");
  synth_cmd->add_option("--verbs", synth_args.n_verbs, "verb vocabulary size");
  synth_cmd->add_option("--objects", synth_args.n_objects, "object vocabulary size");
  synth_cmd->add_option("--cls-classes", synth_args.cls_classes, "classification score width");
  synth_cmd->add_option("--det-classes", synth_args.det_classes, "detector class count");

  std::string mine_annotations, mine_out;
  auto* mine_cmd = app.add_subcommand("mine-vocab", "mine the SVO vocabulary");
  mine_cmd->add_option("--annotations", mine_annotations, "annotations JSONL")->required();
  mine_cmd->add_option("--out", mine_out, "output directory")->required();

  SvoTrainArgs svo_args;
  auto* svo_cmd = app.add_subcommand("svo-train", "train one-vs-all LS-SVM SVO classifiers");
  svo_cmd->add_option("--corpus", svo_args.corpus, "corpus directory")->required();
  svo_cmd->add_option("--svo-vocab", svo_args.vocab_dir, "mined vocabulary directory")
      ->required();
  svo_cmd->add_option("--out", svo_args.out, "output response container")->required();
  svo_cmd->add_option("--kernel", svo_args.kernel, "linear|rbf");
  svo_cmd->add_option("--gamma", svo_args.gamma, "rbf gamma");
  svo_cmd->add_option("--verb-features", svo_args.verb_features,
                      "precomputed motion-feature container for the verb classes");
  svo_cmd->add_flag("--bias", svo_args.bias, "include a bias term");

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score-proposals", "score, filter and select proposals");
  score_cmd->add_option("--corpus", score_args.corpus, "corpus directory")->required();
  score_cmd->add_option("--out", score_args.out, "output directory")->required();
  score_cmd->add_option("--min-frames", score_args.min_frames, "minimum temporal extent");
  score_cmd->add_option("--min-area", score_args.min_area, "minimum median area fraction");
  score_cmd->add_option("--dedup", score_args.dedup, "greedy dedup st-IoU threshold");
  score_cmd->add_option("--m", score_args.m, "proposals kept per video");
  score_cmd->add_option("--config", score_args.config_file, "key=value config file");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a caption model");
  train_cmd->add_option("--corpus", train_args.corpus, "corpus directory")->required();
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--variant", train_args.variant, "meanpool|att|att-sem|stacked");
  train_cmd->add_option("--sem", train_args.sem, "semantic blocks, e.g. svo,cls,det");
  train_cmd->add_option("--svo-responses", train_args.svo_responses,
                        "SVO response container from svo-train");
  train_cmd->add_option("--config", train_args.config_file, "key=value config file");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--seed", train_args.seed, "random seed");
  train_cmd->add_option("--hidden", train_args.hidden, "hidden size");
  train_cmd->add_option("--embedding", train_args.embedding, "embedding size");
  train_cmd->add_option("--lr", train_args.lr, "learning rate");
  train_cmd->add_option("--dropout", train_args.dropout, "dropout rate");
  train_cmd->add_option("--select", train_args.select, "checkpoint selection: loss|bleu|final");
  train_cmd->add_option("--precision", train_args.precision, "f32|f64");
  train_cmd->add_option("--val-beam", train_args.val_beam, "beam width for validation BLEU");
  train_cmd->add_flag("--no-val-bleu", train_args.no_val_bleu, "skip validation BLEU");

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "decode captions with beam search");
  gen_cmd->add_option("--model", gen_args.model_dir, "checkpoint directory")->required();
  gen_cmd->add_option("--corpus", gen_args.corpus, "corpus directory")->required();
  gen_cmd->add_option("--out", gen_args.out, "output captions JSONL")->required();
  gen_cmd->add_option("--split", gen_args.split, "corpus split to decode");
  gen_cmd->add_option("--beam", gen_args.beam, "beam width");
  gen_cmd->add_option("--min-len", gen_args.min_len, "minimum interior length");
  gen_cmd->add_option("--max-len", gen_args.max_len, "maximum interior length");
  gen_cmd->add_option("--svo-responses", gen_args.svo_responses, "SVO response container");
  gen_cmd->add_flag("--sample", gen_args.sample, "sample instead of beam search");
  gen_cmd->add_option("--seed", gen_args.seed, "sampling seed");
  gen_cmd->add_option("--precision", gen_args.precision, "f32|f64");

  GroundArgs ground_args;
  auto* ground_cmd = app.add_subcommand("ground", "emit per-word grounding reports");
  ground_cmd->add_option("--captions", ground_args.captions, "captions JSONL from generate")
      ->required();
  ground_cmd->add_option("--corpus", ground_args.corpus, "corpus directory")->required();
  ground_cmd->add_option("--out", ground_args.out, "output grounding JSONL")->required();
  ground_cmd->add_option("--stoplist", ground_args.stoplist, "stop-word file (one per line)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "BLEU@1-4 (and synthetic accuracies)");
  eval_cmd->add_option("--candidates", eval_args.candidates, "candidate captions JSONL")
      ->required();
  eval_cmd->add_option("--references", eval_args.references, "reference JSONL")->required();
  eval_cmd->add_option("--out", eval_args.out, "output CSV (stdout when omitted)");
  eval_cmd->add_option("--alignment", eval_args.alignment,
                       "planted-alignment sidecar for grounding accuracy");

  GradCheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("grad-check", "finite-difference gradient suite");
  gc_cmd->add_option("--seeds", gc_args.seeds, "seeds per variant");
  gc_cmd->add_option("--steps", gc_args.steps, "unrolled interior tokens");
  gc_cmd->add_option("--tol", gc_args.tol, "max relative error tolerance");
  gc_cmd->add_option("--variants", gc_args.variants, "comma-separated variant list");

  try {
    app.parse(argc, argv);
    if (*synth_cmd) return run_synth(synth_args);
    if (*mine_cmd) return run_mine_vocab(mine_annotations, mine_out);
    if (*svo_cmd) return run_svo_train(svo_args);
    if (*score_cmd) return run_score_proposals(score_args);
    if (*train_cmd) return run_train(train_args);
    if (*gen_cmd) return run_generate(gen_args);
    if (*ground_cmd) return run_ground(ground_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*gc_cmd) return run_grad_check(gc_args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
