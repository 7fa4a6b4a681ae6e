#ifndef BSKPD_IO_HPP
#define BSKPD_IO_HPP

// Persistence.
//
// Tensor file (little-endian regardless of host):
//   bytes 0-3   "BTEN"
//   byte  4     version = 1
//   byte  5     ndims
//   bytes 6-7   zero
//   ndims x u32 dims
//   product(dims) x f64 payload; first index fastest within each record,
//   leading dim slowest for stacks (ndims = 4: n x D1 x D2 x D3).
//
// Dataset manifests, fit configurations and chain summaries are JSON; tables
// are CSV with a header row.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bskpd/error.hpp"
#include "bskpd/gibbs.hpp"
#include "bskpd/model.hpp"
#include "bskpd/simulate.hpp"
#include "bskpd/tensor.hpp"

namespace bskpd {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Tensor files

constexpr std::uint8_t kTensorVersion = 1;
constexpr std::size_t kMaxTensorDims = 8;

struct TensorBlob {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t count() const {
    std::size_t c = 1;
    for (auto d : dims) c *= d;
    return c;
  }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

inline void put_f64(char* out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
}

inline double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<double>(bits);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrc::open_failed, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrc::open_failed, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(IoErrc::write_failed, "write failed for " + path.string());
}

}  // namespace detail

inline std::string encode_tensor(const TensorBlob& t) {
  if (t.dims.empty() || t.dims.size() > kMaxTensorDims)
    throw IoError(IoErrc::bad_header, "tensor must have 1.." + std::to_string(kMaxTensorDims) +
                                          " dims");
  if (t.values.size() != t.count())
    throw ShapeError("tensor payload has " + std::to_string(t.values.size()) + " values, dims need " +
                     std::to_string(t.count()));
  std::string out = "BTEN";
  out.push_back(static_cast<char>(kTensorVersion));
  out.push_back(static_cast<char>(t.dims.size()));
  out.push_back('\0');
  out.push_back('\0');
  for (auto d : t.dims) detail::put_u32(out, d);
  const std::size_t header = out.size();
  out.resize(header + 8 * t.values.size());
  for (std::size_t i = 0; i < t.values.size(); ++i)
    detail::put_f64(out.data() + header + 8 * i, t.values[i]);
  return out;
}

inline TensorBlob decode_tensor(const std::string& bytes, const std::string& origin = "tensor") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8 || std::memcmp(p, "BTEN", 4) != 0)
    throw IoError(IoErrc::bad_magic, origin + ": missing BTEN magic");
  if (p[4] != kTensorVersion)
    throw IoError(IoErrc::bad_version,
                  origin + ": unsupported version " + std::to_string(int(p[4])));
  const std::size_t ndims = p[5];
  if (ndims == 0 || ndims > kMaxTensorDims || p[6] != 0 || p[7] != 0)
    throw IoError(IoErrc::bad_header, origin + ": bad ndims or nonzero padding");
  const std::size_t header = 8 + 4 * ndims;
  if (bytes.size() < header)
    throw IoError(IoErrc::truncated, origin + ": header needs " + std::to_string(header) +
                                         " bytes, file has " + std::to_string(bytes.size()));
  TensorBlob t;
  std::size_t count = 1;
  for (std::size_t m = 0; m < ndims; ++m) {
    const std::uint32_t d = detail::get_u32(p + 8 + 4 * m);
    t.dims.push_back(d);
    if (d != 0 && count > std::numeric_limits<std::size_t>::max() / 8 / d)
      throw IoError(IoErrc::dim_overflow, origin + ": element count overflows");
    count *= d;
  }
  const std::size_t expected = header + 8 * count;
  if (bytes.size() < expected)
    throw IoError(IoErrc::truncated, origin + ": expected " + std::to_string(expected) +
                                         " bytes, got " + std::to_string(bytes.size()));
  if (bytes.size() > expected)
    throw IoError(IoErrc::bad_header, origin + ": " + std::to_string(bytes.size() - expected) +
                                          " trailing bytes");
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) t.values[i] = detail::get_f64(p + header + 8 * i);
  return t;
}

inline void write_tensor(const fs::path& path, const TensorBlob& t) {
  detail::write_file(path, encode_tensor(t));
}

inline TensorBlob read_tensor(const fs::path& path) {
  return decode_tensor(detail::read_file(path), path.string());
}

inline void write_tensor(const fs::path& path, const DenseTensor3& t) {
  const auto& d = t.dims();
  write_tensor(path, TensorBlob{{std::uint32_t(d[0]), std::uint32_t(d[1]), std::uint32_t(d[2])},
                                std::vector<double>(t.values().begin(), t.values().end())});
}

inline DenseTensor3 read_tensor3(const fs::path& path) {
  TensorBlob b = read_tensor(path);
  if (b.dims.size() != 3)
    throw IoError(IoErrc::bad_header, path.string() + ": expected a 3-d tensor, found " +
                                          std::to_string(b.dims.size()) + " dims");
  return {{b.dims[0], b.dims[1], b.dims[2]}, std::move(b.values)};
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError(IoErrc::parse_failed, where + ": cannot parse '" + s + "' as a number");
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline CsvTable read_csv(const fs::path& path, bool has_header = true) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrc::open_failed, "cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  if (has_header) {
    if (!std::getline(in, line)) throw IoError(IoErrc::parse_failed, path.string() + ": empty CSV");
    ++lineno;
    t.header = detail::split_csv_line(line);
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (has_header && cells.size() != t.header.size())
      throw IoError(IoErrc::parse_failed, path.string() + ":" + std::to_string(lineno) + ": " +
                                              std::to_string(cells.size()) + " fields, header has " +
                                              std::to_string(t.header.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells)
      row.push_back(detail::parse_double(c, path.string() + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const Matrix& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += "\n";
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
      out += (c ? "," : "") + detail::format_double(rows(r, c));
    out += "\n";
  }
  detail::write_file(path, out);
}

// Headerless CSV, one sample per row, D1*D2*D3 voxel values per row in
// first-index-fastest order; returns the equivalent stacked tensor.
inline TensorBlob tensor_from_voxel_csv(const fs::path& path, const Dims3& dims) {
  const CsvTable t = read_csv(path, false);
  const std::size_t size = product(dims);
  TensorBlob blob;
  blob.dims = {std::uint32_t(t.rows.size()), std::uint32_t(dims[0]), std::uint32_t(dims[1]),
               std::uint32_t(dims[2])};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != size)
      throw IoError(IoErrc::count_mismatch, path.string() + " row " + std::to_string(r + 1) +
                                                ": " + std::to_string(t.rows[r].size()) +
                                                " voxels, dims need " + std::to_string(size));
    blob.values.insert(blob.values.end(), t.rows[r].begin(), t.rows[r].end());
  }
  return blob;
}

// ---------------------------------------------------------------------------
// Dataset manifests

inline Json dims_json(const Dims3& d) { return Json::array({d[0], d[1], d[2]}); }

inline Dims3 parse_dims(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3)
    throw IoError(IoErrc::parse_failed, what + " must be an array of 3 positive integers");
  Dims3 d{};
  for (std::size_t m = 0; m < 3; ++m) {
    if (!j[m].is_number_integer() || j[m].get<long long>() <= 0)
      throw IoError(IoErrc::parse_failed, what + " must be an array of 3 positive integers");
    d[m] = j[m].get<std::size_t>();
  }
  return d;
}

inline Json parse_json_file(const fs::path& path) {
  try {
    return Json::parse(detail::read_file(path));
  } catch (const Json::exception& e) {
    throw IoError(IoErrc::parse_failed, path.string() + ": " + e.what());
  }
}

// Reads the manifest and its tensor and tables.
inline SampleSet load_samples(const fs::path& manifest_path) {
  const Json m = parse_json_file(manifest_path);
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& key) {
    if (!m.contains(key) || !m[key].is_string())
      throw IoError(IoErrc::parse_failed, manifest_path.string() + ": missing '" + key + "'");
    const fs::path p = m[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  try {
    SampleSet s;
    const std::size_t n = m.at("n").get<std::size_t>();
    s.dims = parse_dims(m.at("dims"), "manifest dims");

    TensorBlob blob = read_tensor(resolve("tensor"));
    const bool stacked = blob.dims.size() == 4 && blob.dims[0] == n && blob.dims[1] == s.dims[0] &&
                         blob.dims[2] == s.dims[1] && blob.dims[3] == s.dims[2];
    const bool single = n == 1 && blob.dims.size() == 3 && blob.dims[0] == s.dims[0] &&
                        blob.dims[1] == s.dims[1] && blob.dims[2] == s.dims[2];
    if (!stacked && !single) {
      std::string got;
      for (auto d : blob.dims) got += (got.empty() ? "" : "x") + std::to_string(d);
      throw IoError(IoErrc::count_mismatch, "tensor file dims " + got + " do not match n=" +
                                                std::to_string(n) + " records of " +
                                                to_string(s.dims));
    }
    s.x = std::move(blob.values);

    const CsvTable responses = read_csv(resolve("responses_table"));
    if (responses.rows.size() != n)
      throw IoError(IoErrc::count_mismatch, "responses table has " +
                                                std::to_string(responses.rows.size()) +
                                                " rows, manifest declares n=" + std::to_string(n));
    const Json& rspecs = m.at("responses");
    s.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rspecs.size()));
    for (std::size_t k = 0; k < rspecs.size(); ++k) {
      const Json& r = rspecs[k];
      ResponseSpec spec{r.at("name").get<std::string>(),
                        parse_response_kind(r.at("kind").get<std::string>())};
      std::size_t col = 0;
      if (!r.contains("column"))
        col = responses.column(spec.name);
      else if (r["column"].is_string())
        col = responses.column(r["column"].get<std::string>());
      else
        col = r["column"].get<std::size_t>();
      if (col >= responses.header.size())
        throw DataError("response column index " + std::to_string(col) + " out of range");
      for (std::size_t i = 0; i < n; ++i)
        s.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = responses.rows[i][col];
      s.specs.push_back(std::move(spec));
    }

    const CsvTable cov = read_csv(resolve("covariates_table"));
    if (cov.rows.size() != n)
      throw IoError(IoErrc::count_mismatch, "covariates table has " +
                                                std::to_string(cov.rows.size()) +
                                                " rows, manifest declares n=" + std::to_string(n));
    s.covariate_names = cov.header;
    s.z.resize(static_cast<Eigen::Index>(cov.header.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < cov.header.size(); ++c)
        s.z(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = cov.rows[i][c];
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw IoError(IoErrc::parse_failed, manifest_path.string() + ": " + e.what());
  }
}

// Writes manifest.json, x.bten, responses.csv and covariates.csv into dir.
// Returns the manifest path.
inline fs::path save_samples(const SampleSet& s, const fs::path& dir) {
  s.validate();
  fs::create_directories(dir);
  const std::size_t n = s.n();
  TensorBlob blob{{std::uint32_t(n), std::uint32_t(s.dims[0]), std::uint32_t(s.dims[1]),
                   std::uint32_t(s.dims[2])},
                  s.x};
  write_tensor(dir / "x.bten", blob);
  std::vector<std::string> rnames;
  Json rspecs = Json::array();
  for (const auto& spec : s.specs) {
    rnames.push_back(spec.name);
    rspecs.push_back({{"name", spec.name}, {"kind", to_string(spec.kind)}, {"column", spec.name}});
  }
  write_csv(dir / "responses.csv", rnames, s.y);
  std::vector<std::string> cnames = s.covariate_names;
  for (std::size_t c = cnames.size(); c < static_cast<std::size_t>(s.z.rows()); ++c)
    cnames.push_back("z" + std::to_string(c + 1));
  write_csv(dir / "covariates.csv", cnames, s.z.transpose());
  const Json m = {{"n", n},
                  {"dims", dims_json(s.dims)},
                  {"tensor", "x.bten"},
                  {"responses_table", "responses.csv"},
                  {"covariates_table", "covariates.csv"},
                  {"responses", rspecs}};
  detail::write_file(dir / "manifest.json", m.dump(2) + "\n");
  return dir / "manifest.json";
}

// ---------------------------------------------------------------------------
// Fit configuration

struct FitConfig {
  BlockShape shape;
  Hyperparams hyper;
  bool standardize = true;
  unsigned threads = 0;
  bool keep_draws = false;
};

inline Json to_json(const FitConfig& c) {
  Json tp = Json::object();
  static const char* names[3] = {"gamma", "A", "B"};
  for (std::size_t l = 0; l < 3; ++l) {
    Json b = {{"a", c.hyper.tpbn[l].a}, {"u", c.hyper.tpbn[l].u}};
    b["tau"] = c.hyper.tpbn[l].tau ? Json(*c.hyper.tpbn[l].tau) : Json(nullptr);
    tp[names[l]] = b;
  }
  return {{"p", dims_json(c.shape.p)},
          {"d", dims_json(c.shape.d)},
          {"rank", c.hyper.rank},
          {"tpbn", tp},
          {"c0", c.hyper.c0},
          {"c1", c.hyper.c1},
          {"iterations", c.hyper.iterations},
          {"burn_in", c.hyper.burn_in},
          {"thin", c.hyper.thin},
          {"seed", c.hyper.seed},
          {"standardize", c.standardize},
          {"threads", c.threads},
          {"keep_draws", c.keep_draws}};
}

inline FitConfig fit_config_from_json(const Json& j) {
  static const std::vector<std::string> known = {"p",          "d",           "rank",  "tpbn",
                                                 "c0",         "c1",          "iterations",
                                                 "burn_in",    "thin",        "seed",
                                                 "standardize", "threads",    "keep_draws"};
  if (!j.is_object()) throw IoError(IoErrc::parse_failed, "fit config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw IoError(IoErrc::parse_failed, "fit config: unknown key '" + key + "'");
  try {
    FitConfig c;
    c.shape.p = parse_dims(j.at("p"), "config p");
    c.shape.d = parse_dims(j.at("d"), "config d");
    auto& h = c.hyper;
    h.rank = j.value("rank", h.rank);
    if (j.contains("tpbn")) {
      static const char* names[3] = {"gamma", "A", "B"};
      for (std::size_t l = 0; l < 3; ++l) {
        if (!j["tpbn"].contains(names[l])) continue;
        const Json& b = j["tpbn"][names[l]];
        h.tpbn[l].a = b.value("a", h.tpbn[l].a);
        h.tpbn[l].u = b.value("u", h.tpbn[l].u);
        if (b.contains("tau") && !b["tau"].is_null()) h.tpbn[l].tau = b["tau"].get<double>();
      }
    }
    h.c0 = j.value("c0", h.c0);
    h.c1 = j.value("c1", h.c1);
    h.iterations = j.value("iterations", h.iterations);
    h.burn_in = j.value("burn_in", h.burn_in);
    h.thin = j.value("thin", h.thin);
    h.seed = j.value("seed", h.seed);
    c.standardize = j.value("standardize", c.standardize);
    c.threads = j.value("threads", c.threads);
    c.keep_draws = j.value("keep_draws", c.keep_draws);
    h.validate();
    return c;
  } catch (const Json::exception& e) {
    throw IoError(IoErrc::parse_failed, std::string("fit config: ") + e.what());
  }
}

inline FitConfig load_fit_config(const fs::path& path) {
  return fit_config_from_json(parse_json_file(path));
}

// "64 = 1x64, 2x32, ..." for factorization errors.
inline std::string valid_splits(std::size_t extent) {
  std::string s = std::to_string(extent) + " =";
  for (std::size_t p = 1; p <= extent; ++p)
    if (extent % p == 0) s += " " + std::to_string(p) + "x" + std::to_string(extent / p);
  return s;
}

inline void check_factorization(const Dims3& dims, const BlockShape& shape) {
  for (std::size_t m = 0; m < 3; ++m)
    if (shape.p[m] * shape.d[m] != dims[m])
      throw ShapeError("mode " + std::to_string(m + 1) + ": D=" + std::to_string(dims[m]) +
                       " cannot be split as p*d=" + std::to_string(shape.p[m]) + "*" +
                       std::to_string(shape.d[m]) + "; valid p x d splits: " +
                       valid_splits(dims[m]));
}

inline UnfoldedDataset load_dataset(const fs::path& manifest_path, const FitConfig& config) {
  SampleSet s = load_samples(manifest_path);
  check_factorization(s.dims, config.shape);
  return {s, config.shape, config.standardize};
}

inline fs::path save_dataset(const UnfoldedDataset& data, const fs::path& dir) {
  return save_samples(data.to_samples(), dir);
}

// ---------------------------------------------------------------------------
// Chain output

namespace detail {

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols)
      throw IoError(IoErrc::parse_failed, "ragged matrix in chain summary");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline Json summary_json(const Summary& s) {
  return {{"median", matrix_json(s.median)},
          {"lower", matrix_json(s.lower)},
          {"upper", matrix_json(s.upper)}};
}

inline Summary summary_from_json(const Json& j) {
  return {matrix_from_json(j.at("median")), matrix_from_json(j.at("lower")),
          matrix_from_json(j.at("upper"))};
}

inline std::string c_file(std::size_t k, const char* what) {
  return "c_" + std::to_string(k + 1) + "_" + what + ".bten";
}

constexpr const char* kCompleteMarker = "COMPLETE";

}  // namespace detail

inline void save_chain(const ChainOutput& out, const fs::path& dir) {
  fs::create_directories(dir);
  fs::remove(dir / detail::kCompleteMarker);
  Json responses = Json::array();
  for (std::size_t k = 0; k < out.responses.size(); ++k) {
    const auto& r = out.responses[k];
    write_tensor(dir / detail::c_file(k, "median"), refold(r.c.median, out.shape));
    write_tensor(dir / detail::c_file(k, "lower"), refold(r.c.lower, out.shape));
    write_tensor(dir / detail::c_file(k, "upper"), refold(r.c.upper, out.shape));
    Json rj = {{"name", out.specs[k].name},
               {"kind", to_string(out.specs[k].kind)},
               {"standardization",
                {{"mean", out.standardization[k].mean}, {"scale", out.standardization[k].scale}}},
               {"gamma", detail::summary_json(r.gamma)}};
    if (k < out.c_draws.size() && out.c_draws[k].cols() > 0) {
      const Matrix& draws = out.c_draws[k];
      TensorBlob blob;
      blob.dims = {std::uint32_t(draws.cols()), std::uint32_t(out.dims[0]),
                   std::uint32_t(out.dims[1]), std::uint32_t(out.dims[2])};
      blob.values.reserve(static_cast<std::size_t>(draws.size()));
      for (Eigen::Index m = 0; m < draws.cols(); ++m) {
        const Matrix c = Eigen::Map<const Matrix>(draws.col(m).data(),
                                                  static_cast<Eigen::Index>(out.shape.rows()),
                                                  static_cast<Eigen::Index>(out.shape.cols()));
        const DenseTensor3 t = refold(c, out.shape);
        blob.values.insert(blob.values.end(), t.values().begin(), t.values().end());
      }
      write_tensor(dir / detail::c_file(k, "draws"), blob);
      rj["draws"] = detail::c_file(k, "draws");
    }
    responses.push_back(rj);
  }
  FitConfig cfg{out.shape, out.hyper, false, 0, false};
  Json hyper = to_json(cfg);
  Json summary = {{"format", "bskpd-chain"},
                  {"version", 1},
                  {"dims", dims_json(out.dims)},
                  {"hyper", hyper},
                  {"n_train", out.n_train},
                  {"kept", out.kept},
                  {"clamp_events", out.clamp_events},
                  {"covariates", out.covariate_names},
                  {"responses", responses},
                  {"sigma", detail::summary_json(out.sigma)}};
  detail::write_file(dir / "summary.json", summary.dump(2) + "\n");
  detail::write_file(dir / detail::kCompleteMarker, "ok\n");
}

inline ChainOutput load_chain(const fs::path& dir) {
  if (!fs::exists(dir / detail::kCompleteMarker))
    throw IoError(IoErrc::incomplete_chain,
                  dir.string() + " has no completion marker; the chain was not fully written");
  const Json s = parse_json_file(dir / "summary.json");
  try {
    ChainOutput out;
    out.dims = parse_dims(s.at("dims"), "chain dims");
    const FitConfig cfg = fit_config_from_json(s.at("hyper"));
    out.shape = cfg.shape;
    out.hyper = cfg.hyper;
    out.n_train = s.at("n_train").get<std::size_t>();
    out.kept = s.at("kept").get<std::size_t>();
    out.clamp_events = s.at("clamp_events").get<std::size_t>();
    out.covariate_names = s.at("covariates").get<std::vector<std::string>>();
    const Json& responses = s.at("responses");
    for (std::size_t k = 0; k < responses.size(); ++k) {
      const Json& rj = responses[k];
      out.specs.push_back(
          {rj.at("name").get<std::string>(), parse_response_kind(rj.at("kind").get<std::string>())});
      out.standardization.push_back({rj.at("standardization").at("mean").get<double>(),
                                     rj.at("standardization").at("scale").get<double>()});
      ResponseSummary rs;
      rs.c.median = unfold(read_tensor3(dir / detail::c_file(k, "median")), out.shape);
      rs.c.lower = unfold(read_tensor3(dir / detail::c_file(k, "lower")), out.shape);
      rs.c.upper = unfold(read_tensor3(dir / detail::c_file(k, "upper")), out.shape);
      rs.gamma = detail::summary_from_json(rj.at("gamma"));
      out.responses.push_back(std::move(rs));
      if (rj.contains("draws")) {
        const TensorBlob blob = read_tensor(dir / rj["draws"].get<std::string>());
        const std::size_t size = product(out.dims);
        const auto m = static_cast<Eigen::Index>(blob.dims.at(0));
        Matrix draws(static_cast<Eigen::Index>(size), m);
        for (Eigen::Index c = 0; c < m; ++c) {
          const DenseTensor3 t(out.dims,
                               std::vector<double>(blob.values.begin() + c * long(size),
                                                   blob.values.begin() + (c + 1) * long(size)));
          const Matrix u = unfold(t, out.shape);
          draws.col(c) = Eigen::Map<const Vector>(u.data(), u.size());
        }
        out.c_draws.resize(k + 1);
        out.c_draws[k] = std::move(draws);
      }
    }
    out.sigma = detail::summary_from_json(s.at("sigma"));
    return out;
  } catch (const Json::exception& e) {
    throw IoError(IoErrc::parse_failed, (dir / "summary.json").string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Map export

// Slice of |c| orthogonal to `axis` (1, 2 or 3) as an 8-bit P5 PGM,
// linearly scaled so the slice maximum maps to 255. Image rows follow the
// lower remaining mode, columns the higher one.
inline GrayImage slice_image(const DenseTensor3& c, int axis, std::size_t slice) {
  if (axis < 1 || axis > 3) throw ParameterError("export_map: axis must be 1, 2 or 3");
  const auto& d = c.dims();
  const std::size_t extent = d[static_cast<std::size_t>(axis - 1)];
  if (slice >= extent)
    throw ParameterError("export_map: slice " + std::to_string(slice) + " out of range for axis " +
                         std::to_string(axis) + " of extent " + std::to_string(extent));
  const std::size_t row_mode = axis == 1 ? 1 : 0;
  const std::size_t col_mode = axis == 3 ? 1 : 2;
  GrayImage img;
  img.height = d[row_mode];
  img.width = d[col_mode];
  img.pixels.resize(img.height * img.width);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t col = 0; col < img.width; ++col) {
      std::array<std::size_t, 3> idx{};
      idx[static_cast<std::size_t>(axis - 1)] = slice;
      idx[row_mode] = r;
      idx[col_mode] = col;
      img.pixels[r * img.width + col] = std::fabs(c(idx[0], idx[1], idx[2]));
    }
  return img;
}

inline void export_map(const DenseTensor3& c, int axis, std::size_t slice, const fs::path& path) {
  const GrayImage img = slice_image(c, axis, slice);
  const double peak = *std::max_element(img.pixels.begin(), img.pixels.end());
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double v : img.pixels) {
    const double scaled = peak > 0.0 ? std::round(255.0 * v / peak) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0))));
  }
  detail::write_file(path, out);
}

}  // namespace bskpd

#endif  // BSKPD_IO_HPP
