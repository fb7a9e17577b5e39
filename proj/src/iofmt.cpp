#include "sca2d/iofmt.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sca2d/imaging.hpp"

namespace sca2d::io {

namespace {

constexpr std::uint16_t kVersion = 1;

// --- little-endian primitives over an in-memory buffer ---------------------

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  const std::string& buf;
  std::size_t at = 0;
  std::string what;  // file label for error messages

  void need(std::size_t n) const {
    if (at + n > buf.size())
      throw io_error(Errc::Truncated, what + ": truncated payload");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[at++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8_raw()) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8_raw()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8_raw()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void magic(const char* expect) {
    need(4);
    if (buf.compare(at, 4, expect) != 0)
      throw io_error(Errc::BadMagic, what + ": bad magic, expected " + expect);
    at += 4;
  }
  void version() {
    const std::uint16_t v = u16();
    if (v != kVersion)
      throw io_error(Errc::BadVersion,
                     what + ": unsupported version " + std::to_string(v));
  }
  void done() const {
    if (at != buf.size())
      throw io_error(Errc::Inconsistent, what + ": trailing bytes after payload");
  }

 private:
  std::uint8_t u8_raw() { return static_cast<std::uint8_t>(buf[at++]); }
};

std::string fmt_double(double v) {
  char tmp[64];
  const auto res = std::to_chars(tmp, tmp + sizeof tmp, v);
  return std::string(tmp, res.ptr);
}

}  // namespace

void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return buf;
}

// ---------------------------------------------------------------------------
// SCTR

void write_traces(const std::string& path, const TraceSet& ts) {
  ts.validate();
  const bool has_label = !ts.traces.empty() && ts.traces[0].label.has_value();
  for (const Trace& t : ts.traces)
    if (t.label.has_value() != has_label)
      throw io_error(Errc::Inconsistent, path + ": mixed labelled and unlabelled traces");

  std::string out;
  out.reserve(32 + ts.traces.size() * (16 + 16 + 1 + 4 * ts.n_samples));
  out += "SCTR";
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(ts.traces.size()));
  put_u32(out, static_cast<std::uint32_t>(ts.n_samples));
  put_f64(out, ts.sample_frequency);
  put_u8(out, ts.has_key ? 1 : 0);
  put_u8(out, has_label ? 1 : 0);
  for (const Trace& t : ts.traces) {
    for (std::uint8_t b : t.public_data) put_u8(out, b);
    if (ts.has_key)
      for (std::uint8_t b : t.key) put_u8(out, b);
    if (has_label) put_u8(out, *t.label);
    for (double s : t.samples) put_f32(out, static_cast<float>(s));
  }
  write_file(path, out);
}

TraceSet read_traces(const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf, 0, path};
  r.magic("SCTR");
  r.version();
  const std::uint32_t n_traces = r.u32();
  const std::uint32_t n_samples = r.u32();
  const double freq = r.f64();
  const bool has_key = r.u8() != 0;
  const bool has_label = r.u8() != 0;

  TraceSet ts;
  ts.n_samples = n_samples;
  ts.sample_frequency = freq;
  ts.has_key = has_key;
  ts.traces.resize(n_traces);
  for (auto& t : ts.traces) {
    for (auto& b : t.public_data) b = r.u8();
    if (has_key)
      for (auto& b : t.key) b = r.u8();
    if (has_label) t.label = r.u8();
    t.samples.resize(n_samples);
    for (auto& s : t.samples) s = static_cast<double>(r.f32());
  }
  r.done();
  return ts;
}

// ---------------------------------------------------------------------------
// SCIM

void write_images(const std::string& path, const ImageSet& images) {
  if (images.count != images.data.size() / std::max<std::size_t>(1, images.example_size()))
    throw io_error(Errc::Inconsistent, path + ": image count disagrees with payload");
  if (images.has_labels && images.labels.size() != images.count)
    throw io_error(Errc::Inconsistent, path + ": one label per image required");

  std::string out;
  out.reserve(24 + images.data.size() * 4 + images.count);
  out += "SCIM";
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(images.count));
  put_u16(out, static_cast<std::uint16_t>(images.height));
  put_u16(out, static_cast<std::uint16_t>(images.width));
  put_u16(out, static_cast<std::uint16_t>(images.channels));
  put_u8(out, images.has_labels ? 1 : 0);
  for (std::size_t i = 0; i < images.count; ++i) {
    if (images.has_labels) put_u8(out, images.labels[i]);
    const double* ex = images.example(i);
    for (std::size_t j = 0; j < images.example_size(); ++j)
      put_f32(out, static_cast<float>(ex[j]));
  }
  write_file(path, out);
}

ImageSet read_images(const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf, 0, path};
  r.magic("SCIM");
  r.version();
  const std::uint32_t count = r.u32();
  ImageSet images;
  images.height = r.u16();
  images.width = r.u16();
  images.channels = r.u16();
  images.has_labels = r.u8() != 0;
  images.count = count;
  if (images.example_size() == 0)
    throw io_error(Errc::Inconsistent, path + ": zero-sized image shape");
  images.data.resize(count * images.example_size());
  if (images.has_labels) images.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (images.has_labels) images.labels[i] = r.u8();
    double* ex = images.example(i);
    for (std::size_t j = 0; j < images.example_size(); ++j)
      ex[j] = static_cast<double>(r.f32());
  }
  r.done();
  return images;
}

// ---------------------------------------------------------------------------
// SCNN

namespace {

void put_layer_spec(std::string& out, const nn::LayerSpec& s) {
  put_u8(out, static_cast<std::uint8_t>(s.type));
  switch (s.type) {
    case nn::LayerType::Conv2d:
      put_u16(out, static_cast<std::uint16_t>(s.filters));
      put_u16(out, static_cast<std::uint16_t>(s.kh));
      put_u16(out, static_cast<std::uint16_t>(s.kw));
      put_u8(out, static_cast<std::uint8_t>(s.padding));
      put_f64(out, s.l2);
      break;
    case nn::LayerType::BatchNorm:
      put_f64(out, s.momentum);
      put_f64(out, s.eps);
      break;
    case nn::LayerType::MaxPool:
      put_u16(out, static_cast<std::uint16_t>(s.ph));
      put_u16(out, static_cast<std::uint16_t>(s.pw));
      put_u16(out, static_cast<std::uint16_t>(s.sh));
      put_u16(out, static_cast<std::uint16_t>(s.sw));
      break;
    case nn::LayerType::Dropout:
      put_f64(out, s.rate);
      break;
    case nn::LayerType::Dense:
      put_u16(out, static_cast<std::uint16_t>(s.units));
      put_u8(out, static_cast<std::uint8_t>(s.init));
      break;
    case nn::LayerType::Relu:
    case nn::LayerType::Flatten:
    case nn::LayerType::Softmax:
      break;
  }
}

nn::LayerSpec read_layer_spec(Reader& r) {
  nn::LayerSpec s;
  const std::uint8_t type = r.u8();
  if (type > static_cast<std::uint8_t>(nn::LayerType::Softmax))
    throw io_error(Errc::Inconsistent, r.what + ": unknown layer type");
  s.type = static_cast<nn::LayerType>(type);
  switch (s.type) {
    case nn::LayerType::Conv2d:
      s.filters = r.u16();
      s.kh = r.u16();
      s.kw = r.u16();
      s.padding = static_cast<nn::Padding>(r.u8());
      s.l2 = r.f64();
      break;
    case nn::LayerType::BatchNorm:
      s.momentum = r.f64();
      s.eps = r.f64();
      break;
    case nn::LayerType::MaxPool:
      s.ph = r.u16();
      s.pw = r.u16();
      s.sh = r.u16();
      s.sw = r.u16();
      break;
    case nn::LayerType::Dropout:
      s.rate = r.f64();
      break;
    case nn::LayerType::Dense:
      s.units = r.u16();
      s.init = static_cast<nn::Init>(r.u8());
      break;
    case nn::LayerType::Relu:
    case nn::LayerType::Flatten:
    case nn::LayerType::Softmax:
      break;
  }
  return s;
}

}  // namespace

void write_network(const std::string& path, const nn::Network& net) {
  if (!net.built()) throw std::logic_error("cannot save an unbuilt network");
  std::string out;
  out += "SCNN";
  put_u16(out, kVersion);
  const nn::Shape in = net.input_shape();
  put_u16(out, static_cast<std::uint16_t>(in.h));
  put_u16(out, static_cast<std::uint16_t>(in.w));
  put_u16(out, static_cast<std::uint16_t>(in.c));
  const auto specs = net.describe();
  put_u16(out, static_cast<std::uint16_t>(specs.size()));
  for (const auto& s : specs) put_layer_spec(out, s);
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const nn::Layer& layer = net.layer(i);
    for (double v : layer.params()) put_f64(out, v);
    for (double v : layer.extra_state()) put_f64(out, v);
  }
  write_file(path, out);
}

nn::Network read_network(const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf, 0, path};
  r.magic("SCNN");
  r.version();
  nn::Shape in;
  in.h = r.u16();
  in.w = r.u16();
  in.c = r.u16();
  const std::uint16_t n_layers = r.u16();
  std::vector<nn::LayerSpec> specs;
  specs.reserve(n_layers);
  for (int i = 0; i < n_layers; ++i) specs.push_back(read_layer_spec(r));

  nn::Network net = nn::network_from_specs(specs);
  net.build(in, 0);  // shapes only; every parameter is overwritten below
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    for (double& v : net.layer(i).params()) v = r.f64();
    for (double& v : net.layer(i).extra_state()) v = r.f64();
  }
  r.done();
  return net;
}

// ---------------------------------------------------------------------------
// PGM

std::string pgm_bytes(const ImageTensor& img, int channel) {
  const ImageTensor one = imaging::rescale_01(imaging::extract_channel(img, channel));
  std::string out = "P5\n" + std::to_string(one.width) + " " + std::to_string(one.height) +
                    "\n255\n";
  out.reserve(out.size() + one.data.size());
  for (double v : one.data)
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(255.0 * v))));
  return out;
}

void write_pgm(const std::string& path, const ImageTensor& img, int channel) {
  write_file(path, pgm_bytes(img, channel));
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_rank_curve(const attack::MeanRankCurve& curve) {
  std::string out = "traces,rank_mean,rank_min,rank_max\n";
  for (std::size_t i = 0; i < curve.counts.size(); ++i)
    out += std::to_string(curve.counts[i]) + "," + fmt_double(curve.mean[i]) + "," +
           fmt_double(curve.min[i]) + "," + fmt_double(curve.max[i]) + "\n";
  return out;
}

std::string csv_rank_curve(const attack::RankCurve& curve) {
  std::string out = "traces,rank_mean,rank_min,rank_max\n";
  for (std::size_t i = 0; i < curve.counts.size(); ++i) {
    const std::string r = std::to_string(curve.ranks[i]);
    out += std::to_string(curve.counts[i]) + "," + r + "," + r + "," + r + "\n";
  }
  return out;
}

std::string csv_history(const nn::TrainHistory& hist) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < hist.train_loss.size(); ++i)
    out += std::to_string(i + 1) + "," + fmt_double(hist.train_loss[i]) + "," +
           fmt_double(hist.val_loss[i]) + "\n";
  return out;
}

std::string csv_correlation_map(const leakage::CorrelationMap& map) {
  std::string out;
  if (map.height == 1 && map.channels == 1) {
    out = "index,rho\n";
    for (std::size_t i = 0; i < map.rho.size(); ++i)
      out += std::to_string(i) + "," + fmt_double(map.rho[i]) + "\n";
    return out;
  }
  out = "row,col,channel,rho\n";
  std::size_t i = 0;
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x)
      for (int c = 0; c < map.channels; ++c, ++i)
        out += std::to_string(y) + "," + std::to_string(x) + "," + std::to_string(c) + "," +
               fmt_double(map.rho[i]) + "\n";
  return out;
}

}  // namespace sca2d::io
