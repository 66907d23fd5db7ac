#include "fallcloud/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fallcloud/error.hpp"
#include "fallcloud/parallel.hpp"
#include "fallcloud/synthetic.hpp"

namespace fs = std::filesystem;

namespace fallcloud {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = line.find(delim, pos);
    out.push_back(trim(line.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& what) {
  if (line == 0) throw Error(Errc::Ingest, fmt::format("{}: {}", file.string(), what));
  throw Error(Errc::Ingest, fmt::format("{}:{}: {}", file.string(), line, what));
}

/// Column positions of the three acceleration axes within a row.
struct AxisColumns {
  std::size_t x = 0, y = 1, z = 2;
  std::size_t expected = 3;
};

std::optional<AxisColumns> columns_from_header(const std::vector<std::string_view>& header) {
  static const std::array<std::array<const char*, 6>, 3> names = {{
      {"x", "ax", "accx", "accelx", "accelerationx", "accelerometerx"},
      {"y", "ay", "accy", "accely", "accelerationy", "accelerometery"},
      {"z", "az", "accz", "accelz", "accelerationz", "accelerometerz"},
  }};
  AxisColumns cols;
  cols.expected = header.size();
  std::array<std::optional<std::size_t>, 3> found;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = lower(header[c]);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      if (found[axis]) continue;
      if (std::find(names[axis].begin(), names[axis].end(), name) != names[axis].end()) found[axis] = c;
    }
  }
  if (!found[0] || !found[1] || !found[2]) return std::nullopt;
  cols.x = *found[0];
  cols.y = *found[1];
  cols.z = *found[2];
  return cols;
}

AxisColumns positional_columns(std::size_t count) {
  // x,y,z or t,x,y,z.
  if (count == 4) return {1, 2, 3, 4};
  return {0, 1, 2, 3};
}

bool infer_fall_from_name(std::string_view stem) {
  const auto name = lower(stem);
  return name.find("fall") != std::string::npos;
}

struct ParsedFile {
  std::vector<TriaxialSample> samples;
};

/// Delimited text: '#' comments, optional header, timestamp column skipped.
ParsedFile parse_delimited(const fs::path& file, char delim, bool allow_header,
                           std::optional<AxisColumns> fixed = std::nullopt) {
  std::ifstream in(file);
  if (!in) fail(file, 0, "cannot open");
  ParsedFile out;
  std::optional<AxisColumns> cols = fixed;
  std::string raw;
  std::size_t line_no = 0;
  bool seen_data_line = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (!line.empty() && line.back() == ';') line = trim(line.substr(0, line.size() - 1));
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, delim);
    if (!seen_data_line) {
      seen_data_line = true;
      double probe = 0;
      if (!parse_double(fields.front(), probe) && allow_header) {
        if (!cols) {
          cols = columns_from_header(fields);
          if (!cols) {
            if (fields.size() != 3 && fields.size() != 4) {
              fail(file, line_no, "header does not name x, y and z columns");
            }
            cols = positional_columns(fields.size());
          }
        }
        cols->expected = fields.size();
        continue;
      }
    }
    if (!cols) {
      if (fields.size() != 3 && fields.size() != 4) {
        fail(file, line_no, fmt::format("expected 3 or 4 columns, found {}", fields.size()));
      }
      cols = positional_columns(fields.size());
    }
    if (fields.size() != cols->expected) {
      fail(file, line_no, fmt::format("inconsistent column count: expected {}, found {}",
                                      cols->expected, fields.size()));
    }
    TriaxialSample s;
    if (!parse_double(fields[cols->x], s.x) || !parse_double(fields[cols->y], s.y) ||
        !parse_double(fields[cols->z], s.z)) {
      fail(file, line_no, "malformed numeric value");
    }
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
      fail(file, line_no, "non-finite sample");
    }
    out.samples.push_back(s);
  }
  if (out.samples.empty()) fail(file, 0, "file contains no samples");
  return out;
}

struct Adapter {
  std::string id;
  double default_rate;
  std::string unit;
  bool (*accepts)(const fs::path&);
  TriaxialRecording (*read)(const fs::path& file, const IngestOptions& opts);
};

bool any_text(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".csv" || ext == ".txt" || ext == ".tsv" || ext == ".dat";
}

TriaxialRecording read_generic(const fs::path& file, const IngestOptions& opts) {
  TriaxialRecording rec;
  rec.samples = parse_delimited(file, opts.delimiter, true).samples;
  rec.meta.label = opts.label.value_or(infer_fall_from_name(file.stem().string()) ? Label::Fall : Label::Adl);
  rec.meta.unit = opts.unit;
  return rec;
}

// SisFall: D01_SA01_R01.txt, 9 comma-separated columns per line ending in
// ';'. The first three are the ADXL345 axes in raw ADC counts.
TriaxialRecording read_sisfall(const fs::path& file, const IngestOptions&) {
  TriaxialRecording rec;
  rec.samples = parse_delimited(file, ',', false, AxisColumns{0, 1, 2, 9}).samples;
  const auto stem = file.stem().string();
  const auto parts = split(stem, '_');
  rec.meta.activity = std::string(parts.front());
  if (parts.size() > 1) rec.meta.subject = std::string(parts[1]);
  rec.meta.label = !stem.empty() && stem.front() == 'F' ? Label::Fall : Label::Adl;
  rec.meta.unit = "adxl345_counts";
  rec.meta.device = "sisfall-adxl345";
  return rec;
}

// MobiAct annotated CSV: <ACT>_<subject>_<trial>_annotated.csv with
// acc_x/acc_y/acc_z columns (m/s^2). Falls are FOL, FKL, BSC and SDL.
TriaxialRecording read_mobiact(const fs::path& file, const IngestOptions&) {
  TriaxialRecording rec;
  rec.samples = parse_delimited(file, ',', true).samples;
  const auto stem = file.stem().string();
  const auto parts = split(stem, '_');
  const std::string act(parts.front());
  rec.meta.activity = act;
  if (parts.size() > 1) rec.meta.subject = std::string(parts[1]);
  rec.meta.label = (act == "FOL" || act == "FKL" || act == "BSC" || act == "SDL") ? Label::Fall : Label::Adl;
  rec.meta.unit = "m/s^2";
  rec.meta.device = "mobiact-phone";
  return rec;
}

// MMsys: delimited export with a header naming the accelerometer axes; the
// activity class comes from the file name.
TriaxialRecording read_mmsys(const fs::path& file, const IngestOptions& opts) {
  TriaxialRecording rec;
  rec.samples = parse_delimited(file, opts.delimiter, true).samples;
  rec.meta.label = opts.label.value_or(infer_fall_from_name(file.stem().string()) ? Label::Fall : Label::Adl);
  rec.meta.unit = opts.unit;
  rec.meta.device = "mmsys-imu";
  return rec;
}

bool sisfall_name(const fs::path& p) {
  const auto stem = p.stem().string();
  return p.extension() == ".txt" && stem.size() >= 3 && (stem[0] == 'D' || stem[0] == 'F');
}

bool mobiact_name(const fs::path& p) {
  return p.extension() == ".csv" && p.stem().string().find("_annotated") != std::string::npos;
}

const std::vector<Adapter>& adapters() {
  static const std::vector<Adapter> table = {
      {"generic", 50.0, "g", any_text, read_generic},
      {"sisfall", 200.0, "adxl345_counts", sisfall_name, read_sisfall},
      {"mobiact", 87.0, "m/s^2", mobiact_name, read_mobiact},
      {"mmsys", 100.0, "g", any_text, read_mmsys},
  };
  return table;
}

}  // namespace

std::vector<std::string> adapter_ids() {
  std::vector<std::string> ids;
  for (const auto& a : adapters()) ids.push_back(a.id);
  ids.emplace_back("synthetic");
  return ids;
}

std::vector<TriaxialRecording> ingest(const std::string& source, std::string_view adapter_id,
                                      const IngestOptions& options) {
  if (adapter_id == "synthetic") {
    auto spec = parse_synthetic_spec(source);
    if (!options.dataset.empty()) spec.dataset = options.dataset;
    if (!options.device.empty()) spec.device = options.device;
    return generate_synthetic(spec);
  }
  const auto it = std::find_if(adapters().begin(), adapters().end(),
                               [&](const Adapter& a) { return a.id == adapter_id; });
  if (it == adapters().end()) {
    throw Error(Errc::UnknownAdapter, fmt::format("no adapter named '{}'", adapter_id));
  }
  const Adapter& adapter = *it;

  const fs::path root(source);
  std::error_code ec;
  std::vector<fs::path> files;
  if (fs::is_directory(root, ec)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && adapter.accepts(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(root, 0, fmt::format("no files accepted by the '{}' adapter", adapter.id));
  } else if (fs::is_regular_file(root, ec)) {
    files.push_back(root);
  } else {
    fail(root, 0, "path is not readable");
  }

  std::vector<TriaxialRecording> out(files.size());
  parallel_for(files.size(), options.threads, [&](std::size_t i) {
    auto rec = adapter.read(files[i], options);
    rec.id = fs::is_directory(root) ? fs::relative(files[i], root).generic_string()
                                    : files[i].filename().generic_string();
    rec.sample_rate_hz = options.sample_rate_hz > 0 ? options.sample_rate_hz : adapter.default_rate;
    rec.meta.dataset = options.dataset.empty() ? adapter.id : options.dataset;
    if (!options.device.empty()) rec.meta.device = options.device;
    if (rec.meta.activity.empty()) rec.meta.activity = files[i].stem().string();
    out[i] = std::move(rec);
  });
  return out;
}

void write_generic(std::ostream& out, const TriaxialRecording& recording, char delimiter) {
  out << "x" << delimiter << "y" << delimiter << "z\n";
  std::array<char, 64> buf{};
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), ptr - buf.data());
  };
  for (const auto& s : recording.samples) {
    put(s.x);
    out << delimiter;
    put(s.y);
    out << delimiter;
    put(s.z);
    out << '\n';
  }
}

}  // namespace fallcloud
