// Batch front-end wiring the library into one pipeline: synthesize traces,
// encode them as images, inspect leakage, augment, train, attack, evaluate.
// Every subcommand accepts a key=value config file (--config) with flags
// taking precedence, and writes a resolved copy of its configuration next to
// the primary output so a run can be replayed bit-exactly from that file.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sca2d/attack.hpp"
#include "sca2d/augment.hpp"
#include "sca2d/core.hpp"
#include "sca2d/imaging.hpp"
#include "sca2d/iofmt.hpp"
#include "sca2d/leakage.hpp"
#include "sca2d/nn.hpp"
#include "sca2d/synth.hpp"
#include "sca2d/threading.hpp"

namespace {

using namespace sca2d;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

Block16 parse_key_hex(const std::string& hex) {
  if (hex.size() != 32) throw std::invalid_argument("key must be 32 hex digits");
  Block16 out{};
  for (std::size_t i = 0; i < 16; ++i) {
    int v = 0;
    for (int half = 0; half < 2; ++half) {
      const char c = hex[2 * i + half];
      int d = 0;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else throw std::invalid_argument("key must be 32 hex digits");
      v = v * 16 + d;
    }
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

IntermediateValueSpec parse_target(const std::string& name, int byte_index) {
  IntermediateValueSpec spec;
  spec.byte_index = byte_index;
  // two-byte targets pair byte_index with byte_index + 1
  if (name == "sbox") spec.kind = TargetKind::SboxOutput;
  else if (name == "sboxxor") spec.kind = TargetKind::ConsecutiveSboxXor;
  else if (name == "lastround") spec.kind = TargetKind::LastRoundTarget;
  else throw std::invalid_argument("unknown target '" + name + "'");
  return spec;
}

std::vector<int> parse_index_list(const std::string& csv) {
  std::vector<int> out;
  if (csv.empty()) return out;
  for (const std::string& part : split(csv, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad index '" + part + "'");
    out.push_back(v);
  }
  return out;
}

void parse_segment(const std::string& seg, std::size_t& start, std::size_t& end) {
  const std::vector<std::string> parts = split(seg, ':');
  if (parts.size() != 2) throw std::invalid_argument("segment must be start:end");
  std::size_t used = 0;
  const long a = std::stol(parts[0], &used);
  if (used != parts[0].size() || a < 0) throw std::invalid_argument("bad segment start");
  const long b = std::stol(parts[1], &used);
  if (used != parts[1].size() || b < 0) throw std::invalid_argument("bad segment end");
  start = static_cast<std::size_t>(a);
  end = static_cast<std::size_t>(b);
}

// True key byte (and, for two-byte targets, the known second key byte) for
// an attack set that stores its key.
void key_context(const TraceSet& ts, const IntermediateValueSpec& spec, std::uint8_t& true_key,
                 std::uint8_t& second_key) {
  if (!ts.has_key || ts.traces.empty())
    throw std::invalid_argument("trace set carries no key to rank against");
  const Block16& key = ts.traces.front().key;
  true_key = key.at(static_cast<std::size_t>(spec.byte_index));
  second_key = key.at(static_cast<std::size_t>(spec.resolved_second()) % 16);
}

std::vector<std::uint8_t> require_labels(const TraceSet& ts) {
  std::vector<std::uint8_t> labels;
  labels.reserve(ts.traces.size());
  for (const Trace& t : ts.traces) {
    if (!t.label) throw std::invalid_argument("trace set has no labels");
    labels.push_back(*t.label);
  }
  return labels;
}

// drops a ".csv"/".sctr"/... suffix so sibling outputs share the stem
std::string stem_of(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

void write_resolved_config(const CLI::App& cmd, const std::string& primary_out,
                           const std::string& trailer = {}) {
  std::string text = "# sca2d " + cmd.get_name() + "\n[" + cmd.get_name() + "]\n";
  text += cmd.config_to_str(true, false);
  text += trailer;
  io::write_file(primary_out + ".config", text);
}

void note(const std::string& path) { std::cout << "wrote " << path << "\n"; }

// ---------------------------------------------------------------------------
// shared option blocks

struct TargetFlags {
  std::string target = "sbox";
  int byte_index = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--target", target, "intermediate value: sbox|sboxxor|lastround")
        ->capture_default_str();
    cmd->add_option("--byte", byte_index, "target byte index")->capture_default_str();
  }
  IntermediateValueSpec spec() const { return parse_target(target, byte_index); }
};

struct AugmentFlags {
  std::string kind;  // empty disables augmentation
  double max_angle = 40.0;
  double max_shear = 0.5;
  double max_shift_frac = 0.2;
  double erase_min = 0.02;
  double erase_max = 0.2;
  double blur_sigma = 1.0;
  double salt_pepper_rate = 0.02;

  void attach(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option(
        "--kind", kind, "augmentation: rotate_shear|shift|erase|blur|salt_pepper");
    if (required) opt->required();
    cmd->add_option("--max-angle", max_angle, "rotation bound, degrees")->capture_default_str();
    cmd->add_option("--max-shear", max_shear, "shear bound")->capture_default_str();
    cmd->add_option("--max-shift-frac", max_shift_frac, "translation bound per axis")
        ->capture_default_str();
    cmd->add_option("--erase-min-frac", erase_min, "smallest erased area fraction")
        ->capture_default_str();
    cmd->add_option("--erase-max-frac", erase_max, "largest erased area fraction")
        ->capture_default_str();
    cmd->add_option("--blur-sigma", blur_sigma, "gaussian blur sigma")->capture_default_str();
    cmd->add_option("--salt-pepper-rate", salt_pepper_rate, "per-pixel flip probability")
        ->capture_default_str();
  }
  augment::AugmentSpec spec() const {
    augment::AugmentSpec s;
    s.kind = augment::kind_from_string(kind);
    s.max_angle_deg = max_angle;
    s.max_shear = max_shear;
    s.max_shift_frac = max_shift_frac;
    s.erase_min_frac = erase_min;
    s.erase_max_frac = erase_max;
    s.blur_sigma = blur_sigma;
    s.salt_pepper_rate = salt_pepper_rate;
    return s;
  }
};

struct TrainFlags {
  int epochs = 100;
  int batch = 64;
  double lr = 2e-4;
  double val_fraction = 0.1;
  int patience = 20;
  bool verbose = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "epoch cap")->capture_default_str();
    cmd->add_option("--batch", batch, "mini-batch size")->capture_default_str();
    cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--val-fraction", val_fraction, "held-out validation share")
        ->capture_default_str();
    cmd->add_option("--patience", patience, "early-stopping patience, epochs")
        ->capture_default_str();
    cmd->add_flag("--verbose", verbose, "per-epoch losses on standard error");
  }
  nn::TrainConfig config(std::uint64_t seed, const AugmentFlags& aug) const {
    nn::TrainConfig cfg;
    cfg.max_epochs = epochs;
    cfg.batch_size = batch;
    cfg.lr = lr;
    cfg.val_fraction = val_fraction;
    cfg.patience = patience;
    cfg.seed = seed;
    cfg.verbose = verbose;
    if (!aug.kind.empty()) cfg.augmenter = augment::make_augmenter(aug.spec());
    return cfg;
  }
};

nn::Network trained_table_cnn(const ImageSet& train_set, const nn::TrainConfig& cfg,
                              std::uint64_t seed, nn::TrainHistory* hist_out) {
  const nn::Shape shape{train_set.height, train_set.width, train_set.channels};
  nn::Network net = nn::make_table_cnn(shape);
  net.build(shape, nn::mix_seed(seed, 0x696e6974));
  const nn::TrainHistory hist = nn::train(net, train_set, cfg);
  if (hist_out) *hist_out = hist;
  return net;
}

// ---------------------------------------------------------------------------
// subcommands

struct SynthArgs {
  std::size_t n = 3000;
  std::size_t samples = 40;
  std::string role = "profiling";
  std::string key = "000102030405060708090a0b0c0d0e0f";
  TargetFlags target;
  std::string leak_indices;
  double leak_scale = 0.3;
  double noise_sigma = 0.0;
  double rho = 0.0;
  int desync_max = 0;
  bool masked = false;
  double sample_frequency = 0.625e9;
  std::uint64_t seed = 1;
  std::string out;
};

void run_synth(const CLI::App& cmd, const SynthArgs& a) {
  synth::SynthConfig cfg;
  cfg.n_traces = a.n;
  cfg.n_samples = a.samples;
  if (a.role == "profiling") cfg.role = SetRole::Profiling;
  else if (a.role == "attack") cfg.role = SetRole::Attack;
  else throw std::invalid_argument("role must be profiling or attack");
  cfg.key = parse_key_hex(a.key);
  cfg.spec = a.target.spec();
  cfg.leak_indices = parse_index_list(a.leak_indices);
  cfg.leak_scale = a.leak_scale;
  cfg.noise_sigma = a.rho > 0.0 ? synth::noise_sigma_for_rho(a.leak_scale, a.rho)
                                : a.noise_sigma;
  cfg.desync_max = a.desync_max;
  cfg.masked = a.masked;
  cfg.sample_frequency = a.sample_frequency;
  cfg.seed = a.seed;

  io::write_traces(a.out, synth::generate(cfg));
  note(a.out);
  write_resolved_config(cmd, a.out);
}

struct EncodeArgs {
  std::string in;
  std::string out;
  std::string method;
  std::string stack;
  std::string segment;
  int mtf_quantiles = 8;
  int mtf_blur = 1;
  int rp_dimension = 1;
  int rp_tau = 1;
  double rp_epsilon = 0.0;
  bool rp_binarize = false;
  int stft_window = 8;
  int stft_hop = -1;
  bool stft_square = false;
};

void run_encode(const CLI::App& cmd, const EncodeArgs& a) {
  TraceSet ts = io::read_traces(a.in);
  if (!a.segment.empty()) {
    std::size_t s = 0, e = 0;
    parse_segment(a.segment, s, e);
    ts = extract_segment(ts, s, e);
  }

  imaging::EncodeSpec spec;
  spec.methods.clear();
  const std::string methods = !a.stack.empty() ? a.stack : a.method;
  if (methods.empty()) throw std::invalid_argument("no encoding method given");
  for (const std::string& name : split(methods, ','))
    spec.methods.push_back(imaging::method_from_string(name));
  spec.mtf.quantiles = a.mtf_quantiles;
  spec.mtf.blur_block = a.mtf_blur;
  spec.rp.dimension = a.rp_dimension;
  spec.rp.time_delay = a.rp_tau;
  spec.rp.epsilon = a.rp_epsilon;
  spec.rp.binarize = a.rp_binarize;
  spec.stft.window_length = a.stft_window;
  spec.stft.hop = a.stft_hop;
  spec.stft.sample_frequency = ts.sample_frequency;
  spec.stft_square = a.stft_square;

  io::write_images(a.out, imaging::encode_set(ts, spec));
  note(a.out);
  write_resolved_config(cmd, a.out);
}

struct LeakmapArgs {
  std::string traces;
  std::string images;
  std::string model = "hw";
  int pgm_channel = 0;
  std::string out;
  std::string pgm;
};

void run_leakmap(const CLI::App& cmd, const LeakmapArgs& a) {
  const leakage::LeakageModel model = [&] {
    if (a.model == "hw") return leakage::LeakageModel::HammingWeight;
    if (a.model == "identity") return leakage::LeakageModel::Identity;
    throw std::invalid_argument("model must be hw or identity");
  }();

  leakage::CorrelationMap map;
  if (!a.traces.empty()) {
    const TraceSet ts = io::read_traces(a.traces);
    map = leakage::correlation_map_1d(ts, leakage::leakage_values(require_labels(ts), model));
  } else {
    const ImageSet images = io::read_images(a.images);
    if (!images.has_labels) throw std::invalid_argument("image set has no labels");
    map = leakage::correlation_map_2d(images, leakage::leakage_values(images.labels, model));
  }

  io::write_file(a.out, io::csv_correlation_map(map));
  note(a.out);

  ImageTensor mag(map.height, map.width, map.channels);
  for (std::size_t i = 0; i < map.rho.size(); ++i) mag.data[i] = std::abs(map.rho[i]);
  const std::string pgm_path = a.pgm.empty() ? stem_of(a.out) + ".pgm" : a.pgm;
  io::write_pgm(pgm_path, mag, a.pgm_channel);
  note(pgm_path);
  write_resolved_config(cmd, a.out);
}

struct AugmentArgs {
  std::string in;
  std::string out;
  AugmentFlags aug;
  std::uint64_t seed = 1;
};

void run_augment(const CLI::App& cmd, const AugmentArgs& a) {
  const ImageSet in = io::read_images(a.in);
  const augment::Augmenter fn = augment::make_augmenter(a.aug.spec());

  ImageSet out;
  out.height = in.height;
  out.width = in.width;
  out.channels = in.channels;
  out.has_labels = in.has_labels;
  out.data.resize(in.data.size());
  out.labels = in.labels;
  out.count = in.count;
  parallel_for(in.count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ImageTensor img = fn(in.tensor(i), nn::mix_seed(a.seed, 0x617567, i));
      if (img.size() != in.example_size())
        throw std::invalid_argument("augmentation changed the image shape");
      std::copy(img.data.begin(), img.data.end(), out.example(i));
    }
  });

  io::write_images(a.out, out);
  note(a.out);
  write_resolved_config(cmd, a.out);
}

struct TrainArgs {
  std::string images;
  std::string out;
  std::string history;
  TrainFlags train;
  AugmentFlags aug;
  std::uint64_t seed = 1;
};

void run_train(const CLI::App& cmd, const TrainArgs& a) {
  const ImageSet data = io::read_images(a.images);
  if (!data.has_labels) throw std::invalid_argument("training set has no labels");

  nn::TrainHistory hist;
  const nn::Network net = trained_table_cnn(data, a.train.config(a.seed, a.aug), a.seed, &hist);

  io::write_network(a.out, net);
  note(a.out);
  const std::string hist_path = a.history.empty() ? stem_of(a.out) + ".history.csv" : a.history;
  io::write_file(hist_path, io::csv_history(hist));
  note(hist_path);
  write_resolved_config(cmd, a.out);
}

struct AttackArgs {
  std::string images;
  std::string traces;
  std::string net;
  std::string template_profile;
  double ridge = 1e-6;
  TargetFlags target;
  int step = 1;
  std::size_t max_traces = 0;
  std::string out;
};

void run_attack(const CLI::App& cmd, const AttackArgs& a) {
  const TraceSet ts = io::read_traces(a.traces);
  const IntermediateValueSpec spec = a.target.spec();
  std::uint8_t true_key = 0, second_key = 0;
  key_context(ts, spec, true_key, second_key);
  std::vector<attack::PublicPair> publics = attack::public_pairs(ts, spec);

  Posteriors post;
  if (!a.net.empty()) {
    if (a.images.empty()) throw std::invalid_argument("a network attack needs --images");
    const ImageSet images = io::read_images(a.images);
    if (images.count != ts.traces.size())
      throw std::invalid_argument("image count does not match the trace set");
    post = io::read_network(a.net).predict_proba(images);
  } else {
    const TraceSet prof = io::read_traces(a.template_profile);
    const attack::TemplateModel model =
        attack::template_fit(to_matrix(prof), require_labels(prof), a.ridge);
    post = attack::template_predict(model, to_matrix(ts));
  }

  if (a.max_traces > 0 && a.max_traces < post.rows) {
    post.rows = a.max_traces;
    post.p.resize(a.max_traces * static_cast<std::size_t>(kNumClasses));
    publics.resize(a.max_traces);
  }

  const attack::RankCurve curve =
      attack::kge_curve(post, publics, spec, true_key, a.step, second_key);
  io::write_file(a.out, io::csv_rank_curve(curve));
  note(a.out);
  write_resolved_config(cmd, a.out);
}

struct EvaluateArgs {
  std::string profile;
  std::string images;
  std::string traces;
  std::string template_profile;
  double ridge = 1e-6;
  TargetFlags target;
  int runs = 3;
  int attacks = 3;
  int attack_size = 500;
  int step = 10;
  std::uint64_t seed = 1;
  TrainFlags train;
  AugmentFlags aug;
  std::string out;
};

void run_evaluate(const CLI::App& cmd, const EvaluateArgs& a) {
  const TraceSet ts = io::read_traces(a.traces);
  const IntermediateValueSpec spec = a.target.spec();
  std::uint8_t true_key = 0, second_key = 0;
  key_context(ts, spec, true_key, second_key);
  const std::vector<attack::PublicPair> publics = attack::public_pairs(ts, spec);

  attack::EvalConfig ec;
  ec.runs = a.runs;
  ec.attacks_per_run = a.attacks;
  ec.attack_size = a.attack_size;
  ec.step = a.step;
  ec.seed = a.seed;

  attack::RunFn run_fn;
  if (!a.template_profile.empty()) {
    const TraceSet prof = io::read_traces(a.template_profile);
    attack::TemplateModel model =
        attack::template_fit(to_matrix(prof), require_labels(prof), a.ridge);
    FeatureMatrix pool = to_matrix(ts);
    run_fn = [model = std::move(model), pool = std::move(pool)](int, std::uint64_t) {
      return attack::template_predict(model, pool);
    };
  } else {
    if (a.profile.empty() || a.images.empty())
      throw std::invalid_argument("a network evaluation needs --profile and --images");
    ImageSet train_set = io::read_images(a.profile);
    if (!train_set.has_labels) throw std::invalid_argument("training set has no labels");
    ImageSet pool = io::read_images(a.images);
    if (pool.count != ts.traces.size())
      throw std::invalid_argument("image count does not match the trace set");
    run_fn = [train_set = std::move(train_set), pool = std::move(pool), flags = a.train,
              aug = a.aug](int, std::uint64_t run_seed) {
      const nn::Network net =
          trained_table_cnn(train_set, flags.config(run_seed, aug), run_seed, nullptr);
      return net.predict_proba(pool);
    };
  }

  const attack::EvalResult result =
      attack::evaluate(ec, run_fn, publics, spec, true_key, second_key);

  io::write_file(a.out, io::csv_rank_curve(result.mean));
  note(a.out);
  const std::string stem = stem_of(a.out);
  for (int r = 0; r < a.runs; ++r)
    for (int k = 0; k < a.attacks; ++k) {
      const std::string path =
          stem + ".run" + std::to_string(r) + ".atk" + std::to_string(k) + ".csv";
      io::write_file(path, io::csv_rank_curve(result.curves[r * a.attacks + k]));
      note(path);
    }

  std::string trailer = "# true key byte " + std::to_string(int(true_key)) + "\n";
  for (std::size_t r = 0; r < result.run_seeds.size(); ++r)
    trailer +=
        "# run " + std::to_string(r) + " seed " + std::to_string(result.run_seeds[r]) + "\n";
  write_resolved_config(cmd, a.out, trailer);
}

// Config files are processed by the root app, so each subcommand lets the
// flag fall through; entries live under a [subcommand] section.
void add_config_handling(CLI::App* cmd) { cmd->fallthrough(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"side-channel analysis toolkit: trace synthesis, image encodings, "
               "CNN and template attacks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; flags override its entries");
  app.allow_config_extras(false);  // unknown keys are an error

  SynthArgs sy;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic trace set");
  add_config_handling(synth_cmd);
  synth_cmd->add_option("--n", sy.n, "trace count")->capture_default_str();
  synth_cmd->add_option("--samples", sy.samples, "samples per trace")->capture_default_str();
  synth_cmd->add_option("--role", sy.role, "profiling|attack")->capture_default_str();
  synth_cmd->add_option("--key", sy.key, "16-byte key, 32 hex digits")->capture_default_str();
  sy.target.attach(synth_cmd);
  synth_cmd->add_option("--leak-indices", sy.leak_indices,
                        "comma-separated sample positions; empty picks defaults")
      ->capture_default_str();
  synth_cmd->add_option("--leak-scale", sy.leak_scale, "leak amplitude per HW step")
      ->capture_default_str();
  synth_cmd->add_option("--noise-sigma", sy.noise_sigma, "white noise level")
      ->capture_default_str();
  synth_cmd->add_option("--rho", sy.rho,
                        "target single-sample correlation; overrides --noise-sigma when > 0")
      ->capture_default_str();
  synth_cmd->add_option("--desync-max", sy.desync_max, "largest random right shift")
      ->capture_default_str();
  synth_cmd->add_flag("--masked", sy.masked, "first-order boolean masking");
  synth_cmd->add_option("--sample-frequency", sy.sample_frequency, "Hz")->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--out", sy.out, "output trace set")->required();
  synth_cmd->callback([&] { run_synth(*synth_cmd, sy); });

  EncodeArgs en;
  CLI::App* encode_cmd = app.add_subcommand("encode", "encode traces as image tensors");
  add_config_handling(encode_cmd);
  encode_cmd->add_option("--in", en.in, "input trace set")->required();
  encode_cmd->add_option("--out", en.out, "output image set")->required();
  auto* method_opt =
      encode_cmd->add_option("--method", en.method, "gasf|gadf|mtf|rp|stft");
  encode_cmd->add_option("--stack", en.stack, "comma-separated methods, one channel each")
      ->excludes(method_opt);
  encode_cmd->add_option("--segment", en.segment, "half-open sample range start:end");
  encode_cmd->add_option("--mtf-quantiles", en.mtf_quantiles, "MTF bin count")
      ->capture_default_str();
  encode_cmd->add_option("--mtf-blur", en.mtf_blur, "MTF block-average factor")
      ->capture_default_str();
  encode_cmd->add_option("--rp-dimension", en.rp_dimension, "trajectory dimension")
      ->capture_default_str();
  encode_cmd->add_option("--rp-tau", en.rp_tau, "trajectory time delay")->capture_default_str();
  encode_cmd->add_option("--rp-epsilon", en.rp_epsilon, "recurrence threshold")
      ->capture_default_str();
  encode_cmd->add_flag("--rp-binarize", en.rp_binarize, "threshold distances to 0/1");
  encode_cmd->add_option("--stft-window", en.stft_window, "Hann window length")
      ->capture_default_str();
  encode_cmd->add_option("--stft-hop", en.stft_hop, "frame hop; negative picks the default")
      ->capture_default_str();
  encode_cmd->add_flag("--stft-square", en.stft_square,
                       "upscale a standalone spectrogram to frames x frames");
  encode_cmd->callback([&] { run_encode(*encode_cmd, en); });

  LeakmapArgs lm;
  CLI::App* leakmap_cmd =
      app.add_subcommand("leakmap", "correlate every position with the labelled leakage");
  add_config_handling(leakmap_cmd);
  auto* lm_traces = leakmap_cmd->add_option("--traces", lm.traces, "labelled trace set");
  leakmap_cmd->add_option("--images", lm.images, "labelled image set")->excludes(lm_traces);
  leakmap_cmd->add_option("--model", lm.model, "hw|identity")->capture_default_str();
  leakmap_cmd->add_option("--pgm-channel", lm.pgm_channel, "channel rendered into the PGM")
      ->capture_default_str();
  leakmap_cmd->add_option("--out", lm.out, "output CSV")->required();
  leakmap_cmd->add_option("--pgm", lm.pgm, "output PGM; default derives from --out");
  leakmap_cmd->callback([&] {
    if (lm.traces.empty() && lm.images.empty())
      throw CLI::RequiredError("--traces or --images");
    run_leakmap(*leakmap_cmd, lm);
  });

  AugmentArgs au;
  CLI::App* augment_cmd = app.add_subcommand("augment", "randomized label-preserving image ops");
  add_config_handling(augment_cmd);
  augment_cmd->add_option("--in", au.in, "input image set")->required();
  augment_cmd->add_option("--out", au.out, "output image set")->required();
  au.aug.attach(augment_cmd, /*required=*/true);
  augment_cmd->add_option("--seed", au.seed, "per-image randomness seed")->capture_default_str();
  augment_cmd->callback([&] { run_augment(*augment_cmd, au); });

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "fit the reference CNN on labelled images");
  add_config_handling(train_cmd);
  train_cmd->add_option("--images", tr.images, "labelled training image set")->required();
  train_cmd->add_option("--out", tr.out, "output network checkpoint")->required();
  train_cmd->add_option("--history", tr.history, "loss history CSV; default derives from --out");
  tr.train.attach(train_cmd);
  tr.aug.attach(train_cmd, /*required=*/false);
  train_cmd->add_option("--seed", tr.seed, "init/shuffle/dropout seed")->capture_default_str();
  train_cmd->callback([&] { run_train(*train_cmd, tr); });

  AttackArgs at;
  CLI::App* attack_cmd = app.add_subcommand("attack", "rank the true key byte on one trace set");
  add_config_handling(attack_cmd);
  attack_cmd->add_option("--traces", at.traces, "attack traces (publics and key)")->required();
  attack_cmd->add_option("--images", at.images, "encoded attack set for a network attack");
  auto* at_net = attack_cmd->add_option("--net", at.net, "network checkpoint");
  attack_cmd
      ->add_option("--template-profile", at.template_profile,
                   "labelled profiling traces for a template attack")
      ->excludes(at_net);
  attack_cmd->add_option("--ridge", at.ridge, "relative covariance ridge")
      ->capture_default_str();
  at.target.attach(attack_cmd);
  attack_cmd->add_option("--step", at.step, "rank sampling stride, traces")
      ->capture_default_str();
  attack_cmd->add_option("--max-traces", at.max_traces, "cap on accumulated traces; 0 = all")
      ->capture_default_str();
  attack_cmd->add_option("--out", at.out, "rank curve CSV")->required();
  attack_cmd->callback([&] {
    if (at.net.empty() && at.template_profile.empty())
      throw CLI::RequiredError("--net or --template-profile");
    run_attack(*attack_cmd, at);
  });

  EvaluateArgs ev;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "multi-run retrain-and-attack protocol with mean ranks");
  add_config_handling(eval_cmd);
  eval_cmd->add_option("--profile", ev.profile, "labelled training image set");
  eval_cmd->add_option("--images", ev.images, "encoded attack pool");
  eval_cmd->add_option("--traces", ev.traces, "attack pool traces (publics and key)")->required();
  eval_cmd->add_option("--template-profile", ev.template_profile,
                       "labelled profiling traces; switches to the template baseline");
  eval_cmd->add_option("--ridge", ev.ridge, "relative covariance ridge")->capture_default_str();
  ev.target.attach(eval_cmd);
  eval_cmd->add_option("--runs", ev.runs, "independent retrainings")->capture_default_str();
  eval_cmd->add_option("--attacks", ev.attacks, "disjoint attacks per run")
      ->capture_default_str();
  eval_cmd->add_option("--attack-size", ev.attack_size, "traces per attack")
      ->capture_default_str();
  eval_cmd->add_option("--step", ev.step, "rank sampling stride, traces")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "protocol seed; run seeds derive from it")
      ->capture_default_str();
  ev.train.attach(eval_cmd);
  ev.aug.attach(eval_cmd, /*required=*/false);
  eval_cmd->add_option("--out", ev.out, "mean rank curve CSV")->required();
  eval_cmd->callback([&] { run_evaluate(*eval_cmd, ev); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "sca2d: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
