#include "cvdelay/record_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "cvdelay/error.hpp"

namespace cvdelay {

namespace {

constexpr std::string_view kMagic = "cvdelay-record";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
  return r;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_record(const std::filesystem::path& path, const TimeSeriesRecord& rec) {
  rec.validate();
  std::ostringstream h;
  h << std::setprecision(17);
  h << kMagic << ' ' << kRecordFormatVersion << '\n'
    << "sample_rate: " << rec.sample_rate << '\n'
    << "duration: " << rec.duration() << '\n'
    << "quadrature: " << gaussian::to_string(rec.quadrature) << '\n'
    << "channel: " << to_string(rec.channel) << '\n'
    << "seed: " << rec.seed << '\n'
    << "samples: " << rec.samples.size() << '\n'
    << "qnl_scale: " << rec.qnl_scale << '\n'
    << "data:\n";
  std::string bytes = h.str();
  const std::size_t offset = bytes.size();
  bytes.resize(offset + 8 * rec.samples.size());
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const std::uint64_t v = to_le(std::bit_cast<std::uint64_t>(rec.samples[i]));
    std::memcpy(bytes.data() + offset + 8 * i, &v, 8);
  }
  atomic_write(path, bytes);
}

TimeSeriesRecord read_record(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  std::map<std::string, std::string> fields;
  bool first = true, have_data = false;
  while (pos < bytes.size()) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (first) {
      if (line.rfind(kMagic, 0) != 0) throw IoError(path.string() + ": not a record file");
      const int version = std::atoi(line.substr(kMagic.size()).c_str());
      if (version != kRecordFormatVersion)
        throw IoError(path.string() + ": unsupported record format version " + std::to_string(version));
      first = false;
      continue;
    }
    if (line == "data:") {
      have_data = true;
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw IoError(path.string() + ": malformed header line: " + line);
    fields[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }
  if (!have_data) throw IoError(path.string() + ": missing data section");
  auto get = [&](const char* key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw IoError(path.string() + ": header lacks '" + key + "'");
    return it->second;
  };
  TimeSeriesRecord rec;
  try {
    rec.sample_rate = std::stod(get("sample_rate"));
    rec.quadrature = gaussian::parse_quadrature(get("quadrature"));
    rec.channel = parse_channel(get("channel"));
    rec.seed = std::stoull(get("seed"));
    rec.qnl_scale = fields.count("qnl_scale") ? std::stod(fields["qnl_scale"]) : 1.0;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": bad header value (" + e.what() + ")");
  }
  const std::size_t n = std::stoull(get("samples"));
  if (bytes.size() - pos != 8 * n)
    throw IoError(path.string() + ": expected " + std::to_string(n) + " samples, file size disagrees");
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + pos + 8 * i, 8);
    rec.samples[i] = std::bit_cast<double>(to_le(v));
  }
  return rec;
}

void write_record_csv(const std::filesystem::path& path, const TimeSeriesRecord& rec) {
  std::ostringstream out;
  out << std::setprecision(17) << "time_s,sample\n";
  for (std::size_t i = 0; i < rec.samples.size(); ++i)
    out << static_cast<double>(i) / rec.sample_rate << ',' << rec.samples[i] << '\n';
  atomic_write(path, out.str());
}

}  // namespace cvdelay
