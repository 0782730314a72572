#include "hbci/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hbci {

namespace {

constexpr double kPi = std::numbers::pi;

// Bilinear-transform biquads (cookbook form), a0 normalized away.
BiquadSection biquad_lowpass(double fs, double f0, double q) {
  const double w0 = 2.0 * kPi * f0 / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  return BiquadSection{(1.0 - c) / 2.0 / a0, (1.0 - c) / a0,
                       (1.0 - c) / 2.0 / a0, -2.0 * c / a0,
                       (1.0 - alpha) / a0};
}

BiquadSection biquad_highpass(double fs, double f0, double q) {
  const double w0 = 2.0 * kPi * f0 / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  return BiquadSection{(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0,
                       (1.0 + c) / 2.0 / a0, -2.0 * c / a0,
                       (1.0 - alpha) / a0};
}

BiquadSection biquad_notch(double fs, double f0, double q) {
  const double w0 = 2.0 * kPi * f0 / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  return BiquadSection{1.0 / a0, -2.0 * c / a0, 1.0 / a0, -2.0 * c / a0,
                       (1.0 - alpha) / a0};
}

void check_stable(const FilterSpec& spec) {
  for (const auto& s : spec.sections) {
    if (!is_stable(s)) {
      throw std::runtime_error("filter design produced an unstable section");
    }
  }
}

}  // namespace

bool is_stable(const BiquadSection& s) {
  // Stability triangle: |a2| < 1 and |a1| < 1 + a2.
  return std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2;
}

double magnitude_response(const FilterSpec& spec, double f) {
  const std::complex<double> z =
      std::polar(1.0, -2.0 * kPi * f / spec.fs);  // z^-1
  std::complex<double> h = 1.0;
  for (const auto& s : spec.sections) {
    h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
  }
  return std::abs(h);
}

FilterSpec design_bandpass(double fs, double f_hp, double f_lp) {
  if (!(0.0 < f_hp && f_hp < f_lp && f_lp < fs / 2.0)) {
    throw std::invalid_argument(
        "design_bandpass: need 0 < f_hp < f_lp < fs/2");
  }
  FilterSpec spec;
  spec.kind = FilterKind::Bandpass;
  spec.fs = fs;
  spec.f_lo = f_hp;
  spec.f_hi = f_lp;
  // 2nd-order Butterworth high-pass: one section at Q = 1/sqrt(2).
  spec.sections.push_back(biquad_highpass(fs, f_hp, 1.0 / std::sqrt(2.0)));
  // 4th-order Butterworth low-pass: sections at Q = 1/(2 cos(pi/8)) and
  // 1/(2 cos(3 pi/8)); the section gains multiply to -3 dB at the corner.
  spec.sections.push_back(biquad_lowpass(fs, f_lp, 0.5 / std::cos(kPi / 8.0)));
  spec.sections.push_back(
      biquad_lowpass(fs, f_lp, 0.5 / std::cos(3.0 * kPi / 8.0)));
  check_stable(spec);
  return spec;
}

FilterSpec design_notch(double fs, double f0, double q) {
  if (!(0.0 < f0 && f0 < fs / 2.0)) {
    throw std::invalid_argument("design_notch: need 0 < f0 < fs/2");
  }
  if (q <= 0.0) {
    throw std::invalid_argument("design_notch: q must be > 0");
  }
  FilterSpec spec;
  spec.kind = FilterKind::Notch;
  spec.fs = fs;
  spec.f_lo = f0;
  spec.f_hi = q;
  spec.sections.push_back(biquad_notch(fs, f0, q));
  check_stable(spec);
  return spec;
}

FilterState::FilterState(const FilterSpec& spec, int n_channels)
    : n_sections_(static_cast<int>(spec.sections.size())),
      n_channels_(n_channels),
      z_(static_cast<std::size_t>(n_sections_) * n_channels_ * 2, 0.0) {}

void FilterState::reset() { std::fill(z_.begin(), z_.end(), 0.0); }

double& FilterState::z1(int section, int channel) {
  return z_[(static_cast<std::size_t>(section) * n_channels_ + channel) * 2];
}

double& FilterState::z2(int section, int channel) {
  return z_[(static_cast<std::size_t>(section) * n_channels_ + channel) * 2 + 1];
}

EegBlock apply_filter(const FilterSpec& spec, const EegBlock& block,
                      FilterState& state) {
  if (block.data.rows() != kNumChannels) {
    throw std::invalid_argument("apply_filter: block must have 8 channels");
  }
  if (state.sections() != static_cast<int>(spec.sections.size()) ||
      state.channels() != kNumChannels) {
    throw std::invalid_argument(
        "apply_filter: state dimensions do not match the filter spec");
  }
  EegBlock out = block;
  const std::int64_t n = block.samples();
  for (int sct = 0; sct < state.sections(); ++sct) {
    const BiquadSection& s = spec.sections[static_cast<std::size_t>(sct)];
    for (int c = 0; c < kNumChannels; ++c) {
      double z1 = state.z1(sct, c);
      double z2 = state.z2(sct, c);
      for (std::int64_t i = 0; i < n; ++i) {
        const double x = out.data(c, i);
        const double y = s.b0 * x + z1;
        z1 = s.b1 * x - s.a1 * y + z2;
        z2 = s.b2 * x - s.a2 * y;
        out.data(c, i) = y;
      }
      state.z1(sct, c) = z1;
      state.z2(sct, c) = z2;
    }
  }
  return out;
}

std::vector<double> filter_signal(const FilterSpec& spec,
                                  const std::vector<double>& x) {
  std::vector<double> y = x;
  for (const auto& s : spec.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      v = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * v + z2;
      z2 = s.b2 * in - s.a2 * v;
    }
  }
  return y;
}

std::vector<Epoch> extract_epochs(const EegBlock& block,
                                  const std::vector<StimulusEvent>& events) {
  const int length = epoch_samples(block.layout.fs);
  std::vector<Epoch> epochs;
  epochs.reserve(events.size());
  for (const auto& ev : events) {
    const std::int64_t begin = ev.onset_sample - block.start_sample;
    if (begin < 0 || begin + length > block.samples()) {
      throw std::out_of_range("extract_epochs: event seq " +
                              std::to_string(ev.seq) + " at onset " +
                              std::to_string(ev.onset_sample) +
                              " overruns the block");
    }
    Epoch ep;
    ep.code = ev.code;
    ep.onset_sample = ev.onset_sample;
    ep.data = block.data.middleCols(begin, length);
    epochs.push_back(std::move(ep));
  }
  return epochs;
}

Epoch average_epochs(const std::vector<Epoch>& epochs, int code) {
  const Epoch* first = nullptr;
  int count = 0;
  for (const auto& ep : epochs) {
    if (ep.code != code) continue;
    ++count;
    if (!first) first = &ep;
  }
  if (count == 0) {
    throw std::invalid_argument("average_epochs: no epoch with code " +
                                std::to_string(code));
  }
  Epoch mean;
  mean.code = code;
  mean.onset_sample = first->onset_sample;
  mean.data = Eigen::MatrixXd::Zero(first->data.rows(), first->data.cols());
  bool labels_agree = true;
  for (const auto& ep : epochs) {
    if (ep.code != code) continue;
    mean.data += ep.data;
    if (ep.is_target != first->is_target) labels_agree = false;
  }
  mean.data /= static_cast<double>(count);
  if (labels_agree) mean.is_target = first->is_target;
  return mean;
}

FeatureVector decimate_epoch(const Epoch& epoch, int factor) {
  if (factor <= 0) {
    throw std::invalid_argument("decimate_epoch: factor must be > 0");
  }
  const int length = static_cast<int>(epoch.data.cols());
  const int n_win = length / factor;
  FeatureVector fv;
  fv.reserve(static_cast<std::size_t>(epoch.data.rows()) * n_win);
  for (int c = 0; c < epoch.data.rows(); ++c) {
    for (int w = 0; w < n_win; ++w) {
      fv.push_back(epoch.data.row(c).segment(w * factor, factor).mean());
    }
  }
  return fv;
}

void write_epochs_jsonl(const std::vector<Epoch>& epochs, std::ostream& os) {
  for (const auto& ep : epochs) {
    nlohmann::json j;
    j["code"] = ep.code;
    j["onset_sample"] = ep.onset_sample;
    if (ep.is_target.has_value()) {
      j["is_target"] = *ep.is_target;
    } else {
      j["is_target"] = nullptr;
    }
    auto rows = nlohmann::json::array();
    for (int c = 0; c < ep.data.rows(); ++c) {
      auto row = nlohmann::json::array();
      for (int i = 0; i < ep.data.cols(); ++i) row.push_back(ep.data(c, i));
      rows.push_back(std::move(row));
    }
    j["data"] = std::move(rows);
    os << j.dump() << '\n';
  }
}

std::vector<Epoch> read_epochs_jsonl(std::istream& is) {
  std::vector<Epoch> epochs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    Epoch ep;
    ep.code = j.at("code").get<int>();
    ep.onset_sample = j.at("onset_sample").get<std::int64_t>();
    if (!j.at("is_target").is_null()) {
      ep.is_target = j.at("is_target").get<bool>();
    }
    const auto& rows = j.at("data");
    const auto n_rows = rows.size();
    const auto n_cols = n_rows ? rows.at(0).size() : 0;
    ep.data.resize(static_cast<Eigen::Index>(n_rows),
                   static_cast<Eigen::Index>(n_cols));
    for (std::size_t c = 0; c < n_rows; ++c) {
      if (rows.at(c).size() != n_cols) {
        throw std::invalid_argument("read_epochs_jsonl: ragged data matrix");
      }
      for (std::size_t i = 0; i < n_cols; ++i) {
        ep.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) =
            rows.at(c).at(i).get<double>();
      }
    }
    epochs.push_back(std::move(ep));
  }
  return epochs;
}

}  // namespace hbci
