#include "gazelabel/io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gazelabel::io {

RgbImage read_png(const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.bytes().data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + msg);
  }
  return img;
}

void write_png(const fs::path& path, const RgbImage& image) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write PNG " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw std::runtime_error("cannot write PNG " + path.string());
  }
  png_init_io(png, fp);
  // Fast settings: synthetic slides are noisy and compress poorly anyway.
  png_set_compression_level(png, 1);
  png_set_compression_strategy(png, Z_HUFFMAN_ONLY);
  png_set_filter(png, 0, PNG_FILTER_SUB);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(image.bytes().data() + static_cast<std::size_t>(y) * image.width() * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw std::runtime_error("cannot write PNG " + path.string());
}

void write_header(std::ostream& out, const OutputHeader& h) {
  out << "# gazelabel command=" << h.command << " config_hash=" << h.config_hash << " seed=" << h.seed << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
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
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("CSV is missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    std::vector<std::string> cells = split(line);
    if (!have_header) {
      t.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ValidationError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                            " fields");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

CsvTable read_csv_file(const fs::path& path) {
  std::ifstream in = open_input(path);
  return read_csv(in);
}

void write_labels(std::ostream& out, const std::vector<ConsensusLabel>& labels) {
  out << "image_id,x,y,area,peak\n";
  for (const ConsensusLabel& l : labels) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", l.peak);
    out << l.image_id << ',' << num(l.x) << ',' << num(l.y) << ',' << l.hotspot_area << ',' << buf << '\n';
  }
}

PointsByImage read_points(const fs::path& path) {
  const CsvTable t = read_csv_file(path);
  if (t.columns.empty()) return {};
  const std::size_t ci = t.column("image_id"), cx = t.column("x"), cy = t.column("y");
  PointsByImage out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out[t.rows[r][ci]].push_back({to_double(t.rows[r][cx], r + 2), to_double(t.rows[r][cy], r + 2)});
  return out;
}

void write_points(std::ostream& out, const PointsByImage& points) {
  out << "image_id,x,y\n";
  for (const auto& [id, pts] : points)
    for (const ImagePoint& p : pts) out << id << ',' << num(p.x) << ',' << num(p.y) << '\n';
}

void write_detections(std::ostream& out, const std::vector<Detection>& detections) {
  out << "image_id,x,y,probability\n";
  for (const Detection& d : detections) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", d.probability);
    out << d.image_id << ',' << num(d.x) << ',' << num(d.y) << ',' << buf << '\n';
  }
}

std::vector<Detection> read_detections(const fs::path& path) {
  const CsvTable t = read_csv_file(path);
  if (t.columns.empty()) return {};
  const std::size_t ci = t.column("image_id"), cx = t.column("x"), cy = t.column("y"), cp = t.column("probability");
  std::vector<Detection> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.push_back({row[ci], to_double(row[cx], r + 2), to_double(row[cy], r + 2), to_double(row[cp], r + 2)});
  }
  return out;
}

void write_pr_curve(std::ostream& out, const std::vector<PrPoint>& curve) {
  out << "threshold,precision,recall\n";
  for (const PrPoint& p : curve) out << num(p.threshold) << ',' << num(p.precision) << ',' << num(p.recall) << '\n';
}

void write_sweep(std::ostream& out, const SweepTable& table) {
  out << "# match_radius=" << table.radius << '\n';
  out << "k,run,precision,recall,f1,participants,error\n";
  for (const SweepRow& r : table.rows) {
    std::string members;
    for (const std::string& p : r.participants) members += (members.empty() ? "" : ";") + p;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << r.k << ',' << r.run << ',' << num(r.precision) << ',' << num(r.recall) << ',' << num(r.f1) << ',' << members
        << ',' << err << '\n';
  }
}

void write_sweep_summary(std::ostream& out, const SweepTable& table) {
  out << "# match_radius=" << table.radius << '\n';
  out << "k,runs,metric,mean,std,q1,median,q3\n";
  for (const SweepSummary& s : table.summary) {
    const std::pair<const char*, const Stats*> metrics[] = {{"precision", &s.precision}, {"recall", &s.recall}, {"f1", &s.f1}};
    for (const auto& [name, st] : metrics)
      out << s.k << ',' << s.runs << ',' << name << ',' << num(st->mean) << ',' << num(st->std) << ',' << num(st->q1)
          << ',' << num(st->median) << ',' << num(st->q3) << '\n';
  }
}

std::vector<fs::path> list_png(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gazelabel::io
