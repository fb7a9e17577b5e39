#pragma once

#include <stdexcept>
#include <string>

#include "sca2d/attack.hpp"
#include "sca2d/core.hpp"
#include "sca2d/leakage.hpp"
#include "sca2d/nn.hpp"

// On-disk formats. Everything is little-endian and written atomically
// (temp file + rename). Trace and image payloads are 32-bit floats on disk
// and doubles in memory.
//
//   SCTR  magic "SCTR", u16 version, u32 n_traces, u32 n_samples,
//         f64 sample_frequency, u8 has_key, u8 has_label; then per trace:
//         16B public data, [16B key], [u8 label], n_samples f32 samples.
//   SCIM  magic "SCIM", u16 version, u32 count, u16 height, u16 width,
//         u16 channels, u8 has_label; then per image: [u8 label],
//         h*w*c f32 values, channel-last row-major.
//   SCNN  magic "SCNN", u16 version, u16 input h/w/c, u16 layer count,
//         layer specs, then each layer's parameters and extra state as f64
//         in declaration order.

namespace sca2d::io {

enum class Errc { BadMagic, BadVersion, Truncated, Inconsistent };

class io_error : public std::runtime_error {
 public:
  io_error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

void write_traces(const std::string& path, const TraceSet& ts);
TraceSet read_traces(const std::string& path);

void write_images(const std::string& path, const ImageSet& images);
ImageSet read_images(const std::string& path);

void write_network(const std::string& path, const nn::Network& net);
nn::Network read_network(const std::string& path);

/// Binary 8-bit P5 image of one channel, rescaled onto [0, 255].
std::string pgm_bytes(const ImageTensor& img, int channel = 0);
void write_pgm(const std::string& path, const ImageTensor& img, int channel = 0);

// CSV exports: header row, '.' decimal separator, '\n' line endings.
std::string csv_rank_curve(const attack::MeanRankCurve& curve);
std::string csv_rank_curve(const attack::RankCurve& curve);
std::string csv_history(const nn::TrainHistory& hist);
std::string csv_correlation_map(const leakage::CorrelationMap& map);

/// Atomic whole-file write (temp + rename), also used for the CSVs above.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace sca2d::io
