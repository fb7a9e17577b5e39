#include "sca2d/core.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace sca2d {

namespace {

// FIPS-197 S-box.
constexpr std::uint8_t kSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
};

struct InvSboxTable {
  std::uint8_t t[256];
  InvSboxTable() {
    for (int i = 0; i < 256; ++i) t[kSbox[i]] = static_cast<std::uint8_t>(i);
  }
};
const InvSboxTable kInvSbox;

}  // namespace

int hamming_weight(std::uint8_t v) { return std::popcount(v); }

std::uint8_t aes_sbox(std::uint8_t v) { return kSbox[v]; }

std::uint8_t aes_inv_sbox(std::uint8_t v) { return kInvSbox.t[v]; }

std::uint8_t label_value(const IntermediateValueSpec& spec, std::uint8_t b0, std::uint8_t k0,
                         std::uint8_t b1, std::uint8_t k1) {
  switch (spec.kind) {
    case TargetKind::SboxOutput:
      return aes_sbox(b0 ^ k0);
    case TargetKind::ConsecutiveSboxXor:
      return aes_sbox(b0 ^ k0) ^ aes_sbox(b1 ^ k1);
    case TargetKind::LastRoundTarget:
      return aes_inv_sbox(b0 ^ k0) ^ b1;
  }
  throw std::invalid_argument("unknown target kind");
}

std::uint8_t label_trace(const IntermediateValueSpec& spec, const Trace& t) {
  const int i = spec.byte_index;
  const int j = spec.resolved_second();
  if (i < 0 || i > 15 || j < 0 || j > 15)
    throw std::out_of_range("byte index outside [0,15]");
  return label_value(spec, t.public_data[i], t.key[i], t.public_data[j], t.key[j]);
}

void TraceSet::validate() const {
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].samples.size() != n_samples)
      throw std::invalid_argument("trace " + std::to_string(i) + " has " +
                                  std::to_string(traces[i].samples.size()) +
                                  " samples, set expects " + std::to_string(n_samples));
  }
}

std::vector<double> min_max_rescale(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("empty trace");
  double lo = x[0], hi = x[0];
  for (double v : x) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (hi == lo) throw std::domain_error("degenerate trace");
  std::vector<double> out(x.size());
  const double span = hi - lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // algebraically (2x - hi - lo) / span; this form hits the endpoints
    // exactly, and the clamp absorbs the last ulp of rounding in between
    const double t = 2.0 * (x[i] - lo) / span - 1.0;
    out[i] = std::clamp(t, -1.0, 1.0);
  }
  return out;
}

std::vector<double> extract_segment(const std::vector<double>& samples, std::size_t start,
                                    std::size_t end) {
  if (start >= end || end > samples.size())
    throw std::out_of_range("segment [" + std::to_string(start) + "," + std::to_string(end) +
                            ") invalid for trace of length " + std::to_string(samples.size()));
  return std::vector<double>(samples.begin() + start, samples.begin() + end);
}

Trace extract_segment(const Trace& t, std::size_t start, std::size_t end) {
  Trace out = t;
  out.samples = extract_segment(t.samples, start, end);
  return out;
}

TraceSet extract_segment(const TraceSet& ts, std::size_t start, std::size_t end) {
  TraceSet out;
  out.n_samples = end - start;
  out.role = ts.role;
  out.sample_frequency = ts.sample_frequency;
  out.has_key = ts.has_key;
  out.traces.reserve(ts.traces.size());
  for (const Trace& t : ts.traces) out.traces.push_back(extract_segment(t, start, end));
  return out;
}

FeatureMatrix to_matrix(const TraceSet& ts) {
  ts.validate();
  FeatureMatrix m(ts.traces.size(), ts.n_samples);
  for (std::size_t i = 0; i < ts.traces.size(); ++i)
    std::copy(ts.traces[i].samples.begin(), ts.traces[i].samples.end(), m.row(i));
  return m;
}

ImageTensor ImageSet::tensor(std::size_t i) const {
  ImageTensor img(height, width, channels);
  const double* src = example(i);
  std::copy(src, src + example_size(), img.data.begin());
  return img;
}

void ImageSet::push_back(const ImageTensor& img, std::optional<std::uint8_t> label) {
  if (count == 0 && data.empty()) {
    height = img.height;
    width = img.width;
    channels = img.channels;
    has_labels = label.has_value();
  }
  if (img.height != height || img.width != width || img.channels != channels)
    throw std::invalid_argument("image shape differs from set shape");
  if (label.has_value() != has_labels)
    throw std::invalid_argument("inconsistent labelling within image set");
  data.insert(data.end(), img.data.begin(), img.data.end());
  if (has_labels) labels.push_back(*label);
  ++count;
}

}  // namespace sca2d
