#include "matzoh/field_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "matzoh/errors.hpp"

namespace matzoh {

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : text_(text) {}

  std::string next() {
    skip_space();
    if (pos_ >= text_.size()) throw ConfigError("field file: unexpected end of input");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  double next_double() {
    const std::string tok = next();
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ConfigError("field file: malformed number '" + tok + "'");
    return v;
  }

  std::size_t next_size() {
    const std::string tok = next();
    std::size_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ConfigError("field file: malformed integer '" + tok + "'");
    return v;
  }

  void expect(const std::string& keyword) {
    const std::string tok = next();
    if (tok != keyword)
      throw ConfigError("field file: expected '" + keyword + "', found '" + tok + "'");
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

char mask_letter(MaskLabel label) {
  switch (label) {
    case MaskLabel::interior: return 'I';
    case MaskLabel::boundary: return 'B';
    case MaskLabel::exterior: return 'E';
  }
  return 'E';
}

MaskLabel mask_from_letter(const std::string& tok) {
  if (tok == "I") return MaskLabel::interior;
  if (tok == "B") return MaskLabel::boundary;
  if (tok == "E") return MaskLabel::exterior;
  throw ConfigError("field file: unknown mask letter '" + tok + "'");
}

}  // namespace

std::string field_to_string(const ScalarField& field) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  std::string out;
  out.reserve(grid.size() * 24 + 256);

  out += "dim ";
  out += std::to_string(grid.dim());
  out += '\n';

  out += "shape";
  for (std::size_t n : grid.shape()) {
    out += ' ';
    out += std::to_string(n);
  }
  out += '\n';

  out += "origin";
  for (double o : grid.origin()) {
    out += ' ';
    append_double(out, o);
  }
  out += '\n';

  out += "spacing";
  for (double h : grid.spacing()) {
    out += ' ';
    append_double(out, h);
  }
  out += '\n';

  out += "time ";
  append_double(out, field.time().value_or(0.0));
  out += '\n';

  std::vector<std::size_t> index(static_cast<std::size_t>(grid.dim()));
  for (std::size_t node = 0; node < grid.size(); ++node) {
    grid.unflatten(node, index);
    for (std::size_t i : index) {
      out += std::to_string(i);
      out += ' ';
    }
    const bool exterior = mask.is_exterior(node);
    append_double(out, exterior ? 0.0 : field.value(node));
    out += ' ';
    out += mask_letter(mask.label(node));
    out += '\n';
  }
  return out;
}

ScalarField field_from_string(const std::string& text) {
  TokenReader in(text);
  in.expect("dim");
  const std::size_t dim = in.next_size();
  if (dim == 0) throw ConfigError("field file: dim must be positive");

  in.expect("shape");
  std::vector<std::size_t> shape(dim);
  for (auto& n : shape) n = in.next_size();
  in.expect("origin");
  std::vector<double> origin(dim);
  for (auto& o : origin) o = in.next_double();
  in.expect("spacing");
  std::vector<double> spacing(dim);
  for (auto& h : spacing) h = in.next_double();
  in.expect("time");
  const double time = in.next_double();

  auto grid = std::make_shared<Grid>(shape, origin, spacing);
  std::vector<double> values(grid->size(), 0.0);
  std::vector<MaskLabel> labels(grid->size(), MaskLabel::exterior);
  std::vector<std::size_t> index(dim);
  for (std::size_t row = 0; row < grid->size(); ++row) {
    for (auto& i : index) i = in.next_size();
    const std::size_t node = grid->flatten(index);
    if (node != row) throw ConfigError("field file: rows must appear in flat node order");
    values[node] = in.next_double();
    labels[node] = mask_from_letter(in.next());
  }
  if (!in.at_end()) throw ConfigError("field file: trailing content after the last node row");

  auto mask = std::make_shared<DomainMask>(DomainMask::from_labels(grid, std::move(labels)));
  return ScalarField(grid, mask, std::move(values), time);
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  const std::string text = field_to_string(field);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

ScalarField read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return field_from_string(buffer.str());
}

void write_series(const std::filesystem::path& dir, const TimeSeriesField& series) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < series.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "snap_%04zu.field", i);
    write_field(dir / name, series.snapshot(i));
  }
}

TimeSeriesField read_series(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("series directory '" + dir.string() + "' does not exist");
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".field")
      files.push_back(entry.path());
  if (files.empty()) throw ConfigError("series directory '" + dir.string() + "' has no .field files");
  std::sort(files.begin(), files.end());

  std::vector<ScalarField> snaps;
  snaps.reserve(files.size());
  for (const auto& f : files) snaps.push_back(read_field(f));
  std::stable_sort(snaps.begin(), snaps.end(), [](const ScalarField& a, const ScalarField& b) {
    return a.time().value_or(0.0) < b.time().value_or(0.0);
  });

  // Re-point snapshots at one shared grid/mask so the series invariant
  // (single grid object) holds after loading from disk.
  std::vector<ScalarField> shared;
  shared.reserve(snaps.size());
  const auto grid = snaps.front().grid_ptr();
  const auto mask = snaps.front().mask_ptr();
  for (ScalarField& s : snaps) {
    if (!(s.grid() == *grid) || !(s.mask() == *mask))
      throw ConfigError("series: snapshots must share one grid and mask");
    shared.emplace_back(grid, mask, std::vector<double>(s.values().begin(), s.values().end()),
                        s.time());
  }
  return TimeSeriesField(std::move(shared));
}

}  // namespace matzoh
