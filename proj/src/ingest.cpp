// Copyright 2026 The eegstress Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eegstress/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "eegstress/error.hpp"
#include "json.hpp"

namespace eegstress {
namespace {

constexpr std::size_t kFixedHeaderBytes = 256;
constexpr std::size_t kSignalHeaderBytes = 256;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class HeaderCursor {
 public:
  explicit HeaderCursor(const std::vector<char>& bytes) : bytes_(bytes) {}

  std::string take(std::size_t width) {
    if (pos_ + width > bytes_.size()) {
      throw Error(Errc::MalformedHeader, "header ends before field at byte " + std::to_string(pos_));
    }
    std::string field(bytes_.data() + pos_, width);
    pos_ += width;
    return trim(field);
  }

  long take_int(std::size_t width, const char* name) {
    const std::string s = take(width);
    long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(Errc::MalformedHeader, std::string(name) + " is not an integer: '" + s + "'");
    }
    return value;
  }

  double take_double(std::size_t width, const char* name) {
    std::string s = take(width);
    // Some writers use a decimal comma.
    std::replace(s.begin(), s.end(), ',', '.');
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
      throw Error(Errc::MalformedHeader, std::string(name) + " is not a number: '" + s + "'");
    }
    return value;
  }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Renders a value in at most 8 ASCII characters, rounding toward +inf when
// round_up and toward -inf otherwise so the written range still covers it.
std::string edf_number(double value, bool round_up) {
  for (int decimals = 6; decimals >= 0; --decimals) {
    const double scale = std::pow(10.0, decimals);
    double scaled = round_up ? std::ceil(value * scale) : std::floor(value * scale);
    std::string s;
    for (int attempt = 0; attempt < 3; ++attempt) {
      if (scaled == 0.0) scaled = 0.0;  // no "-0"
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.*f", decimals, scaled / scale);
      s = buf;
      const double parsed = std::stod(s);
      if (round_up && parsed < value) scaled += 1.0;
      else if (!round_up && parsed > value) scaled -= 1.0;
      else break;
    }
    if (s.size() <= 8) return s;
  }
  throw Error(Errc::IoFailure, "value does not fit an 8-character EDF field");
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() > width) s.resize(width);
  s.append(width - s.size(), ' ');
  return s;
}

std::string ascii_field(std::string s) {
  for (char& c : s) {
    if (c < 32 || c > 126) c = '_';
  }
  return s;
}

}  // namespace

bool EdfSignalHeader::is_annotation() const { return label == "EDF Annotations"; }

double EdfSignalHeader::scale() const {
  return (physical_max - physical_min) / static_cast<double>(digital_max - digital_min);
}

EdfHeader parse_edf_header(const std::vector<char>& bytes) {
  if (bytes.size() < kFixedHeaderBytes) {
    throw Error(Errc::MalformedHeader, "file shorter than the 256-byte fixed header");
  }
  HeaderCursor cur(bytes);
  EdfHeader h;
  h.version = cur.take(8);
  h.patient = cur.take(80);
  h.recording = cur.take(80);
  h.start_date = cur.take(8);
  h.start_time = cur.take(8);
  h.header_bytes = static_cast<int>(cur.take_int(8, "header byte count"));
  h.reserved = cur.take(44);
  h.record_count = cur.take_int(8, "record count");
  h.record_duration_s = cur.take_double(8, "record duration");
  const long ns = cur.take_int(4, "signal count");
  if (ns <= 0 || ns > 4096) throw Error(Errc::MalformedHeader, "invalid signal count");
  if (h.header_bytes != static_cast<int>(kFixedHeaderBytes + kSignalHeaderBytes * ns)) {
    throw Error(Errc::MalformedHeader, "header byte count does not match signal count");
  }
  if (bytes.size() < static_cast<std::size_t>(h.header_bytes)) {
    throw Error(Errc::MalformedHeader, "file shorter than its declared header");
  }
  if (h.record_count < -1) throw Error(Errc::MalformedHeader, "negative record count");
  if (!(h.record_duration_s >= 0.0)) throw Error(Errc::MalformedHeader, "negative record duration");

  h.signals.resize(static_cast<std::size_t>(ns));
  for (auto& s : h.signals) s.label = cur.take(16);
  for (auto& s : h.signals) s.transducer = cur.take(80);
  for (auto& s : h.signals) s.physical_dimension = cur.take(8);
  for (auto& s : h.signals) s.physical_min = cur.take_double(8, "physical minimum");
  for (auto& s : h.signals) s.physical_max = cur.take_double(8, "physical maximum");
  for (auto& s : h.signals) s.digital_min = static_cast<int>(cur.take_int(8, "digital minimum"));
  for (auto& s : h.signals) s.digital_max = static_cast<int>(cur.take_int(8, "digital maximum"));
  for (auto& s : h.signals) s.prefiltering = cur.take(80);
  for (auto& s : h.signals) {
    s.samples_per_record = static_cast<int>(cur.take_int(8, "samples per record"));
    if (s.samples_per_record <= 0) throw Error(Errc::MalformedHeader, "samples per record must be positive");
  }
  for (auto& s : h.signals) (void)s, cur.take(32);

  for (const auto& s : h.signals) {
    if (s.digital_max <= s.digital_min) {
      throw Error(Errc::InconsistentSignal, "digital max <= digital min for " + s.label);
    }
    if (!std::isfinite(s.scale())) {
      throw Error(Errc::InconsistentSignal, "non-finite scaling for " + s.label);
    }
  }
  return h;
}

Recording read_edf(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file(path);
  const EdfHeader h = parse_edf_header(bytes);

  std::size_t record_bytes = 0;
  for (const auto& s : h.signals) record_bytes += 2 * static_cast<std::size_t>(s.samples_per_record);
  const std::size_t available = bytes.size() - static_cast<std::size_t>(h.header_bytes);
  std::size_t records = 0;
  if (h.record_count == -1) {
    records = available / record_bytes;
  } else {
    records = static_cast<std::size_t>(h.record_count);
    if (available < records * record_bytes) {
      throw Error(Errc::TruncatedData, path.string() + " holds " + std::to_string(available) +
                                           " data bytes, header implies " +
                                           std::to_string(records * record_bytes));
    }
  }
  if (records == 0) throw Error(Errc::TruncatedData, "no data records in " + path.string());

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    if (!h.signals[i].is_annotation()) kept.push_back(i);
  }
  if (kept.empty()) throw Error(Errc::InconsistentSignal, "no data signals in " + path.string());
  const int spr = h.signals[kept.front()].samples_per_record;
  for (std::size_t i : kept) {
    if (h.signals[i].samples_per_record != spr) {
      throw Error(Errc::InconsistentSignal, "signals with different sample rates are not supported");
    }
  }
  if (!(h.record_duration_s > 0.0)) {
    throw Error(Errc::MalformedHeader, "record duration must be positive");
  }

  std::vector<std::size_t> offset_in_record(h.signals.size());
  std::size_t acc = 0;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    offset_in_record[i] = acc;
    acc += 2 * static_cast<std::size_t>(h.signals[i].samples_per_record);
  }

  std::vector<std::string> labels;
  std::vector<std::vector<double>> data;
  for (std::size_t i : kept) {
    const auto& s = h.signals[i];
    const double scale = s.scale();
    std::vector<double> channel;
    channel.reserve(records * static_cast<std::size_t>(spr));
    for (std::size_t r = 0; r < records; ++r) {
      const std::size_t base = static_cast<std::size_t>(h.header_bytes) + r * record_bytes + offset_in_record[i];
      for (int k = 0; k < spr; ++k) {
        const auto lo = static_cast<std::uint8_t>(bytes[base + 2 * k]);
        const auto hi = static_cast<std::uint8_t>(bytes[base + 2 * k + 1]);
        const auto digital = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        channel.push_back((digital - s.digital_min) * scale + s.physical_min);
      }
    }
    labels.push_back(s.label);
    data.push_back(std::move(channel));
  }
  return Recording(std::move(labels), spr / h.record_duration_s, std::move(data),
                   path.stem().string(), {});
}

void write_edf(const Recording& rec, const std::filesystem::path& path) {
  const std::size_t n = rec.sample_count();
  const std::size_t ns = rec.channel_count();
  const double rate = rec.sample_rate_hz();

  std::size_t spr = n;
  std::size_t records = 1;
  const double rounded_rate = std::round(rate);
  if (std::abs(rate - rounded_rate) < 1e-9 && rounded_rate >= 1.0 &&
      n % static_cast<std::size_t>(rounded_rate) == 0) {
    spr = static_cast<std::size_t>(rounded_rate);
    records = n / spr;
  }
  if (spr > 99999999) throw Error(Errc::IoFailure, "too many samples per record for EDF");
  const double duration = static_cast<double>(spr) / rate;

  constexpr int kDigMin = -32768;
  constexpr int kDigMax = 32767;
  std::vector<double> pmin(ns), pmax(ns);
  std::vector<std::string> pmin_s(ns), pmax_s(ns);
  for (std::size_t c = 0; c < ns; ++c) {
    const auto [lo, hi] = std::minmax_element(rec.samples()[c].begin(), rec.samples()[c].end());
    double a = *lo, b = *hi;
    if (!std::isfinite(a) || !std::isfinite(b)) throw Error(Errc::IoFailure, "non-finite sample");
    if (b - a < 1e-6) {
      a -= 1.0;
      b += 1.0;
    }
    pmin_s[c] = edf_number(a, false);
    pmax_s[c] = edf_number(b, true);
    pmin[c] = std::stod(pmin_s[c]);
    pmax[c] = std::stod(pmax_s[c]);
  }

  std::string header;
  header += pad("0", 8);
  header += pad(ascii_field(rec.subject_id().empty() ? "X" : rec.subject_id()), 80);
  header += pad(ascii_field("Startdate X X X " + (rec.dataset_id().empty() ? std::string("X") : rec.dataset_id())), 80);
  header += pad("01.01.00", 8);
  header += pad("00.00.00", 8);
  header += pad(std::to_string(kFixedHeaderBytes + kSignalHeaderBytes * ns), 8);
  header += pad("", 44);
  header += pad(std::to_string(records), 8);
  std::string dur = edf_number(duration, false);
  if (std::abs(std::stod(dur) - duration) > 1e-9 * duration) dur = edf_number(duration, true);
  header += pad(dur, 8);
  header += pad(std::to_string(ns), 4);
  for (const auto& l : rec.channel_labels()) header += pad(ascii_field(l), 16);
  for (std::size_t c = 0; c < ns; ++c) header += pad("", 80);
  for (std::size_t c = 0; c < ns; ++c) header += pad("uV", 8);
  for (std::size_t c = 0; c < ns; ++c) header += pad(pmin_s[c], 8);
  for (std::size_t c = 0; c < ns; ++c) header += pad(pmax_s[c], 8);
  for (std::size_t c = 0; c < ns; ++c) header += pad(std::to_string(kDigMin), 8);
  for (std::size_t c = 0; c < ns; ++c) header += pad(std::to_string(kDigMax), 8);
  for (std::size_t c = 0; c < ns; ++c) header += pad("", 80);
  for (std::size_t c = 0; c < ns; ++c) header += pad(std::to_string(spr), 8);
  for (std::size_t c = 0; c < ns; ++c) header += pad("", 32);

  std::vector<char> body;
  body.reserve(2 * n * ns);
  for (std::size_t r = 0; r < records; ++r) {
    for (std::size_t c = 0; c < ns; ++c) {
      const double step = (pmax[c] - pmin[c]) / static_cast<double>(kDigMax - kDigMin);
      for (std::size_t k = 0; k < spr; ++k) {
        const double x = rec.samples()[c][r * spr + k];
        const double d = std::clamp(std::round((x - pmin[c]) / step + kDigMin),
                                    static_cast<double>(kDigMin), static_cast<double>(kDigMax));
        const auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(d));
        body.push_back(static_cast<char>(v & 0xff));
        body.push_back(static_cast<char>(v >> 8));
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const char c = bytes[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < bytes.size() && bytes[i + 1] == '\n') ++i;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Recording read_csv_recording(const std::filesystem::path& path, double sample_rate_hz,
                             const std::vector<std::string>& channel_order) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw Error(Errc::NonNumericCell, "CSV has no header row: " + path.string());
  const auto& header = rows.front();

  std::vector<std::size_t> columns;
  std::vector<std::string> labels;
  if (channel_order.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      columns.push_back(i);
      labels.push_back(trim(header[i]));
    }
  } else {
    for (const auto& wanted : channel_order) {
      const std::string key = normalize_channel_label(wanted);
      std::size_t found = header.size();
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (normalize_channel_label(header[i]) == key) {
          found = i;
          break;
        }
      }
      if (found == header.size()) {
        throw Error(Errc::MissingChannel, "channel " + wanted + " not in " + path.string());
      }
      columns.push_back(found);
      labels.push_back(wanted);
    }
  }

  std::vector<std::vector<double>> data(columns.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(Errc::NonNumericCell, "row " + std::to_string(r) + " has " +
                                            std::to_string(row.size()) + " cells");
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const std::string cell = trim(row[columns[k]]);
      const char* first = cell.data();
      if (!cell.empty() && cell.front() == '+') ++first;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw Error(Errc::NonNumericCell, "cell '" + cell + "' at row " + std::to_string(r));
      }
      data[k].push_back(v);
    }
  }
  return Recording(std::move(labels), sample_rate_hz, std::move(data), path.stem().string(), {});
}

void write_csv_recording(const Recording& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  const auto& labels = rec.channel_labels();
  for (std::size_t c = 0; c < labels.size(); ++c) out << (c ? "," : "") << csv_escape(labels[c]);
  out << '\n';
  for (std::size_t i = 0; i < rec.sample_count(); ++i) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      out << (c ? "," : "") << format_double(rec.samples()[c][i]);
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::map<int, int> DatasetManifest::class_counts() const {
  std::map<int, int> counts;
  for (const auto& [label, name] : class_names) counts[label] = 0;
  for (const auto& e : entries) ++counts[e.class_label];
  return counts;
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.subject_id).second) {
      throw Error(Errc::DuplicateSubject, "subject " + e.subject_id + " listed twice");
    }
    if (!class_names.contains(e.class_label)) {
      throw Error(Errc::UnknownClassLabel, "class label " + std::to_string(e.class_label) +
                                               " of subject " + e.subject_id + " has no name");
    }
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, "manifest " + path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();
  DatasetManifest m;
  try {
    for (const auto& [key, value] : doc.at("class_names").items()) {
      m.class_names[std::stoi(key)] = value.get<std::string>();
    }
    for (const auto& item : doc.at("entries")) {
      ManifestEntry e;
      std::filesystem::path p = item.at("path").get<std::string>();
      e.path = p.is_absolute() ? p : base / p;
      const std::string fmt = item.value("format", std::string("EDF"));
      if (fmt == "EDF" || fmt == "edf") e.format = RecordingFormat::Edf;
      else if (fmt == "CSV" || fmt == "csv") e.format = RecordingFormat::Csv;
      else throw Error(Errc::InvalidConfig, "unknown format tag " + fmt);
      e.subject_id = item.at("subject_id").get<std::string>();
      e.class_label = item.at("class_label").get<int>();
      if (item.contains("stress_ground_truth") && !item["stress_ground_truth"].is_null()) {
        e.stress_ground_truth = item["stress_ground_truth"].get<bool>();
      }
      if (item.contains("sample_rate_hz")) e.sample_rate_hz = item["sample_rate_hz"].get<double>();
      e.dataset_id = item.value("dataset_id", std::string());
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, "manifest " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(Errc::InvalidConfig, "manifest " + path.string() + ": class_names keys must be integers");
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const std::filesystem::path base = path.parent_path();
  nlohmann::ordered_json doc;
  nlohmann::ordered_json names = nlohmann::ordered_json::object();
  for (const auto& [label, name] : manifest.class_names) names[std::to_string(label)] = name;
  doc["class_names"] = names;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json item;
    std::filesystem::path p = e.path;
    if (!base.empty() && p.is_absolute() == base.is_absolute()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    item["path"] = p.generic_string();
    item["format"] = e.format == RecordingFormat::Edf ? "EDF" : "CSV";
    item["subject_id"] = e.subject_id;
    item["class_label"] = e.class_label;
    if (e.stress_ground_truth) item["stress_ground_truth"] = *e.stress_ground_truth;
    if (e.sample_rate_hz) item["sample_rate_hz"] = *e.sample_rate_hz;
    if (!e.dataset_id.empty()) item["dataset_id"] = e.dataset_id;
    doc["entries"].push_back(std::move(item));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

Recording load_entry(const ManifestEntry& entry) {
  Recording rec = [&] {
    if (entry.format == RecordingFormat::Edf) return read_edf(entry.path);
    if (!entry.sample_rate_hz) {
      throw Error(Errc::InvalidConfig, "CSV entry " + entry.subject_id + " needs sample_rate_hz");
    }
    return read_csv_recording(entry.path, *entry.sample_rate_hz);
  }();
  return rec.with_identity(entry.subject_id, entry.dataset_id);
}

}  // namespace eegstress
