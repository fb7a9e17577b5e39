#include "sca2d/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sca2d/fft.hpp"
#include "sca2d/threading.hpp"

namespace sca2d::imaging {

PolarTrace to_polar(const std::vector<double>& rescaled) {
  const std::size_t n = rescaled.size();
  if (n == 0) throw std::invalid_argument("empty trace");
  PolarTrace out;
  out.phi.resize(n);
  out.radius.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = rescaled[i];
    if (v < -1.0 - 1e-12 || v > 1.0 + 1e-12)
      throw std::domain_error("sample outside [-1,1], rescale first");
    v = std::clamp(v, -1.0, 1.0);
    out.phi[i] = std::acos(v);
    out.radius[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  }
  return out;
}

ImageTensor gasf_rescaled(const std::vector<double>& rescaled) {
  const PolarTrace polar = to_polar(rescaled);
  const int n = static_cast<int>(polar.phi.size());
  ImageTensor img(n, n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) img.at(i, j, 0) = std::cos(polar.phi[i] + polar.phi[j]);
  return img;
}

ImageTensor gadf_rescaled(const std::vector<double>& rescaled) {
  const PolarTrace polar = to_polar(rescaled);
  const int n = static_cast<int>(polar.phi.size());
  ImageTensor img(n, n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) img.at(i, j, 0) = std::sin(polar.phi[i] - polar.phi[j]);
  return img;
}

ImageTensor gasf(const std::vector<double>& trace) { return gasf_rescaled(min_max_rescale(trace)); }

ImageTensor gadf(const std::vector<double>& trace) { return gadf_rescaled(min_max_rescale(trace)); }

std::vector<double> mtf_bin_boundaries(const std::vector<double>& trace, int quantiles) {
  if (quantiles < 2) throw std::invalid_argument("need at least 2 quantile bins");
  std::vector<double> sorted = trace;
  std::sort(sorted.begin(), sorted.end());
  std::size_t distinct = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] != sorted[i - 1]) ++distinct;
  if (distinct < static_cast<std::size_t>(quantiles))
    throw std::invalid_argument("unresolvable quantiles");

  // Linear-interpolation empirical quantiles at j/Q, j = 1..Q-1.
  const std::size_t n = sorted.size();
  std::vector<double> bounds(quantiles - 1);
  for (int j = 1; j < quantiles; ++j) {
    const double pos = static_cast<double>(j) / quantiles * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    const double upper = lo + 1 < n ? sorted[lo + 1] : sorted[lo];
    bounds[j - 1] = sorted[lo] + frac * (upper - sorted[lo]);
  }
  return bounds;
}

namespace {

int mtf_bin(double x, const std::vector<double>& bounds) {
  // Ties with a boundary fall into the lower bin (strict less-than count).
  int b = 0;
  for (double cut : bounds)
    if (cut < x) ++b;
  return b;
}

ImageTensor blur_blocks(const ImageTensor& img, int block) {
  if (block <= 1) return img;
  const int oh = (img.height + block - 1) / block;
  const int ow = (img.width + block - 1) / block;
  ImageTensor out(oh, ow, img.channels);
  for (int by = 0; by < oh; ++by) {
    const int y0 = by * block, y1 = std::min(img.height, y0 + block);
    for (int bx = 0; bx < ow; ++bx) {
      const int x0 = bx * block, x1 = std::min(img.width, x0 + block);
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) acc += img.at(y, x, c);
        out.at(by, bx, c) = acc / ((y1 - y0) * (x1 - x0));
      }
    }
  }
  return out;
}

}  // namespace

ImageTensor mtf(const std::vector<double>& trace, const MtfParams& params) {
  const int n = static_cast<int>(trace.size());
  if (n < 2) throw std::invalid_argument("trace too short for transitions");
  if (params.blur_block < 1) throw std::invalid_argument("blur_block must be >= 1");
  const std::vector<double> bounds = mtf_bin_boundaries(trace, params.quantiles);
  const int q = params.quantiles;

  std::vector<int> bin(n);
  for (int i = 0; i < n; ++i) bin[i] = mtf_bin(trace[i], bounds);

  // First-order Markov transition matrix, rows normalized to one. Bins with
  // no outgoing transition keep an all-zero row.
  std::vector<double> w(static_cast<std::size_t>(q) * q, 0.0);
  for (int i = 0; i + 1 < n; ++i) w[bin[i] * q + bin[i + 1]] += 1.0;
  for (int r = 0; r < q; ++r) {
    double row_sum = 0.0;
    for (int c = 0; c < q; ++c) row_sum += w[r * q + c];
    if (row_sum > 0.0)
      for (int c = 0; c < q; ++c) w[r * q + c] /= row_sum;
  }

  ImageTensor img(n, n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) img.at(i, j, 0) = w[bin[i] * q + bin[j]];
  return blur_blocks(img, params.blur_block);
}

ImageTensor recurrence_plot(const std::vector<double>& trace, const RpParams& params) {
  const int n = static_cast<int>(trace.size());
  const int m = params.dimension;
  const int tau = params.time_delay;
  if (m < 1 || tau < 1) throw std::invalid_argument("dimension and time_delay must be >= 1");
  const int nt = n - (m - 1) * tau;
  if (nt < 2) throw std::invalid_argument("trace too short for trajectory embedding");

  ImageTensor img(nt, nt, 1);
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int d = 0; d < m; ++d) {
        const double diff = trace[i + d * tau] - trace[j + d * tau];
        acc += diff * diff;
      }
      const double dist = std::sqrt(acc);
      double v = dist;
      if (params.binarize) v = dist <= params.epsilon ? 1.0 : 0.0;
      img.at(i, j, 0) = v;
      img.at(j, i, 0) = v;
    }
  }
  return img;
}

int StftParams::resolved_hop() const {
  if (hop > 0) return hop;
  return std::max(1, static_cast<int>(std::llround(0.1 * window_length)));
}

ImageTensor stft_spectrogram(const std::vector<double>& trace, const StftParams& params) {
  const int n = static_cast<int>(trace.size());
  const int len = params.window_length;
  if (len < 2) throw std::invalid_argument("window length must be >= 2");
  if (n < len) throw std::invalid_argument("window longer than signal");
  const int hop = params.resolved_hop();
  const int pad = len / 2;
  const int frames = (n + hop - 1) / hop;
  const int bins = len / 2 + 1;
  const std::vector<double> window = hann_window(len);

  // Zero-pad by floor(L/2) on both ends; frame m starts at padded index
  // m * hop, i.e. it is centered on original sample m * hop.
  std::vector<double> padded(static_cast<std::size_t>(n) + 2 * pad, 0.0);
  std::copy(trace.begin(), trace.end(), padded.begin() + pad);

  ImageTensor img(frames, bins, 1);
  std::vector<double> frame(len);
  for (int m = 0; m < frames; ++m) {
    const int start = m * hop;
    for (int i = 0; i < len; ++i) frame[i] = padded[start + i] * window[i];
    const std::vector<cplx> spec = dft_real(frame);
    for (int b = 0; b < bins; ++b) img.at(m, b, 0) = std::abs(spec[b]);
  }
  return img;
}

ImageTensor transpose(const ImageTensor& img) {
  ImageTensor out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(y, x, c);
  return out;
}

ImageTensor upscale_spectrogram(const ImageTensor& spec, int target_height) {
  const int bands = spec.height;
  const int width = spec.width;
  if (target_height < bands)
    throw std::invalid_argument("target height below frequency band count");
  const int base = target_height / bands;
  const int extra = target_height % bands;

  ImageTensor out(target_height, width, spec.channels);
  int row = 0;
  for (int b = 0; b < bands; ++b) {
    const int copies = base + (b < extra ? 1 : 0);
    for (int r = 0; r < copies; ++r, ++row)
      for (int t = 0; t < width; ++t)
        for (int c = 0; c < spec.channels; ++c) out.at(row, t, c) = spec.at(b, t, c);
  }
  return out;
}

ImageTensor rescale_01(const ImageTensor& img) {
  if (img.data.empty()) throw std::invalid_argument("empty image");
  const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) throw std::domain_error("degenerate image");
  ImageTensor out = img;
  const double span = hi - lo;
  for (double& v : out.data) v = (v - lo) / span;
  return out;
}

ImageTensor stack_channels(const std::vector<ImageTensor>& imgs) {
  if (imgs.empty()) throw std::invalid_argument("nothing to stack");
  const int h = imgs[0].height, w = imgs[0].width;
  int channels = 0;
  for (const ImageTensor& img : imgs) {
    if (img.height != h || img.width != w)
      throw std::invalid_argument("stacked images must share height and width");
    channels += img.channels;
  }
  ImageTensor out(h, w, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int c = 0;
      for (const ImageTensor& img : imgs)
        for (int ic = 0; ic < img.channels; ++ic) out.at(y, x, c++) = img.at(y, x, ic);
    }
  return out;
}

ImageTensor extract_channel(const ImageTensor& img, int channel) {
  if (channel < 0 || channel >= img.channels) throw std::out_of_range("channel index");
  ImageTensor out(img.height, img.width, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(y, x, 0) = img.at(y, x, channel);
  return out;
}

std::vector<double> paa(const std::vector<double>& trace, int segments) {
  const int n = static_cast<int>(trace.size());
  if (segments < 1 || segments > n)
    throw std::invalid_argument("segment count must be in [1, N]");
  const int seg_len = n / segments;
  std::vector<double> out(segments);
  for (int s = 0; s < segments; ++s) {
    const int begin = s * seg_len;
    const int end = s + 1 == segments ? n : begin + seg_len;
    double acc = 0.0;
    for (int i = begin; i < end; ++i) acc += trace[i];
    out[s] = acc / (end - begin);
  }
  return out;
}

Method method_from_string(const std::string& name) {
  if (name == "gasf") return Method::Gasf;
  if (name == "gadf") return Method::Gadf;
  if (name == "mtf") return Method::Mtf;
  if (name == "rp") return Method::Rp;
  if (name == "stft") return Method::Stft;
  throw std::invalid_argument("unknown encoding method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Gasf: return "gasf";
    case Method::Gadf: return "gadf";
    case Method::Mtf: return "mtf";
    case Method::Rp: return "rp";
    case Method::Stft: return "stft";
  }
  return "?";
}

namespace {

ImageTensor encode_one(const std::vector<double>& samples, Method m, const EncodeSpec& spec,
                       bool in_stack) {
  switch (m) {
    case Method::Gasf: return gasf(samples);
    case Method::Gadf: return gadf(samples);
    case Method::Mtf: return mtf(samples, spec.mtf);
    case Method::Rp: {
      ImageTensor img = recurrence_plot(samples, spec.rp);
      // Distances are unbounded; bring them onto [0,1] next to the
      // bounded angular fields when channels are combined.
      if (in_stack && !spec.rp.binarize) img = rescale_01(img);
      return img;
    }
    case Method::Stft: {
      ImageTensor img = stft_spectrogram(samples, spec.stft);
      const int frames = img.height;
      if (in_stack) {
        img = upscale_spectrogram(transpose(rescale_01(img)), frames);
      } else if (spec.stft_square) {
        img = upscale_spectrogram(transpose(img), frames);
      }
      return img;
    }
  }
  throw std::invalid_argument("unknown encoding method");
}

}  // namespace

ImageTensor encode_trace(const std::vector<double>& samples, const EncodeSpec& spec) {
  if (spec.methods.empty()) throw std::invalid_argument("no encoding method selected");
  if (!spec.stacked()) return encode_one(samples, spec.methods[0], spec, false);
  std::vector<ImageTensor> parts;
  parts.reserve(spec.methods.size());
  for (Method m : spec.methods) parts.push_back(encode_one(samples, m, spec, true));
  return stack_channels(parts);
}

ImageSet encode_set(const TraceSet& ts, const EncodeSpec& spec) {
  if (ts.traces.empty()) throw std::invalid_argument("empty trace set");
  ts.validate();

  // Shape probe, then parallel fill of a preallocated buffer.
  const ImageTensor first = encode_trace(ts.traces[0].samples, spec);
  ImageSet out;
  out.height = first.height;
  out.width = first.width;
  out.channels = first.channels;
  out.count = ts.traces.size();
  out.has_labels = ts.traces[0].label.has_value();
  out.data.resize(out.count * out.example_size());
  if (out.has_labels) out.labels.resize(out.count);

  parallel_for(ts.traces.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ImageTensor img =
          i == 0 ? first : encode_trace(ts.traces[i].samples, spec);
      if (img.height != out.height || img.width != out.width || img.channels != out.channels)
        throw std::invalid_argument("inconsistent image shapes across traces");
      std::copy(img.data.begin(), img.data.end(), out.example(i));
      if (out.has_labels) {
        if (!ts.traces[i].label.has_value())
          throw std::invalid_argument("inconsistent labelling across traces");
        out.labels[i] = *ts.traces[i].label;
      }
    }
  });
  return out;
}

}  // namespace sca2d::imaging
