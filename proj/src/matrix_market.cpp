#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gdsw/error.hpp"
#include "gdsw/sparse.hpp"

namespace gdsw {

namespace {

std::string lower(std::string s)
{
   std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
   return s;
}

std::string shortest(double v)
{
   char buf[64];
   auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
   return std::string(buf, end);
}

double parse_double(const std::string& token)
{
   double v = 0.0;
   auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
   if (ec != std::errc() || ptr != token.data() + token.size())
      throw ParseError("matrix market: malformed value '" + token + "'");
   return v;
}

struct Header {
   std::string format;
   std::string field;
   std::string symmetry;
};

Header read_header(std::istream& in)
{
   std::string line;
   if (!std::getline(in, line)) throw ParseError("matrix market: empty input");
   std::istringstream hs(line);
   std::string banner, object, format, field, symmetry;
   hs >> banner >> object >> format >> field >> symmetry;
   if (banner != "%%MatrixMarket" || lower(object) != "matrix")
      throw ParseError("matrix market: missing %%MatrixMarket matrix banner");
   Header h{lower(format), lower(field), lower(symmetry)};
   if (h.format != "coordinate" && h.format != "array") throw ParseError("matrix market: unknown format " + format);
   if (h.field != "real" && h.field != "integer" && h.field != "double")
      throw ParseError("matrix market: unsupported field " + field);
   if (h.symmetry != "general" && h.symmetry != "symmetric")
      throw ParseError("matrix market: unsupported symmetry " + symmetry);
   return h;
}

// Next non-comment, non-blank line.
bool next_data_line(std::istream& in, std::string& line)
{
   while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '%') continue;
      return true;
   }
   return false;
}

}  // namespace

CsrMatrix read_matrix_market(std::istream& in)
{
   const Header h = read_header(in);
   if (h.format != "coordinate") throw ParseError("matrix market: expected coordinate format for a sparse matrix");
   std::string line;
   if (!next_data_line(in, line)) throw ParseError("matrix market: missing size line");
   long long rows = 0, cols = 0, entries = 0;
   {
      std::istringstream ss(line);
      if (!(ss >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
         throw ParseError("matrix market: malformed size line");
   }
   const bool symmetric = h.symmetry == "symmetric";
   if (symmetric && rows != cols) throw ParseError("matrix market: symmetric matrix must be square");
   std::vector<Triplet> trip;
   trip.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
   for (long long e = 0; e < entries; ++e) {
      if (!next_data_line(in, line)) throw ParseError("matrix market: fewer entries than declared");
      std::istringstream ss(line);
      long long r = 0, c = 0;
      std::string token;
      if (!(ss >> r >> c >> token)) throw ParseError("matrix market: malformed entry line '" + line + "'");
      if (r < 1 || r > rows || c < 1 || c > cols) throw ParseError("matrix market: index out of bounds");
      const double v = parse_double(token);
      trip.push_back({static_cast<int>(r - 1), static_cast<int>(c - 1), v});
      if (symmetric && r != c) trip.push_back({static_cast<int>(c - 1), static_cast<int>(r - 1), v});
   }
   return CsrMatrix::from_triplets(static_cast<int>(rows), static_cast<int>(cols), std::move(trip));
}

CsrMatrix read_matrix_market(const std::string& path)
{
   std::ifstream in(path);
   if (!in) throw ParseError("matrix market: cannot open " + path);
   return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& a)
{
   out << "%%MatrixMarket matrix coordinate real general\n";
   out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
   for (int r = 0; r < a.rows(); ++r) {
      const auto cols = a.row_cols(r);
      const auto vals = a.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
         out << r + 1 << ' ' << cols[k] + 1 << ' ' << shortest(vals[k]) << '\n';
   }
}

void write_matrix_market(const std::string& path, const CsrMatrix& a)
{
   std::ofstream out(path);
   if (!out) throw ParseError("matrix market: cannot write " + path);
   write_matrix_market(out, a);
}

void write_matrix_market_vector(std::ostream& out, std::span<const double> v)
{
   out << "%%MatrixMarket matrix array real general\n";
   out << v.size() << " 1\n";
   for (double x : v) out << shortest(x) << '\n';
}

void write_matrix_market_vector(const std::string& path, std::span<const double> v)
{
   std::ofstream out(path);
   if (!out) throw ParseError("matrix market: cannot write " + path);
   write_matrix_market_vector(out, v);
}

std::vector<double> read_matrix_market_vector(std::istream& in)
{
   const Header h = read_header(in);
   if (h.format != "array") throw ParseError("matrix market: expected array format for a vector");
   std::string line;
   if (!next_data_line(in, line)) throw ParseError("matrix market: missing size line");
   long long rows = 0, cols = 0;
   std::istringstream ss(line);
   if (!(ss >> rows >> cols) || cols != 1 || rows < 0) throw ParseError("matrix market: expected a column vector");
   std::vector<double> v;
   v.reserve(static_cast<std::size_t>(rows));
   for (long long i = 0; i < rows; ++i) {
      if (!next_data_line(in, line)) throw ParseError("matrix market: fewer values than declared");
      std::istringstream ls(line);
      std::string token;
      ls >> token;
      v.push_back(parse_double(token));
   }
   return v;
}

}  // namespace gdsw
