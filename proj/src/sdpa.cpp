#include "momentsos/conic.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace momentsos::conic {

namespace {

std::string format_double(double v) {
  char buf[64];
  if (v == 0.0) v = 0.0;  // no negative zero in the file
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Quintuple {
  int matno;
  int blkno;
  int i;
  int j;
  double value;
};

}  // namespace

std::string export_sdpa(const ConicProgram& input) {
  const ConicProgram p = input.canonical();
  // A Free block of size k maps to diagonal entries k+1..2k holding x-.
  std::vector<Quintuple> entries;
  auto emit = [&](int matno, const Coefficient& c, double sign) {
    const Block& blk = p.blocks()[static_cast<std::size_t>(c.block)];
    const int blkno = c.block + 1;
    if (blk.kind == ConeKind::Free) {
      entries.push_back({matno, blkno, c.row + 1, c.row + 1, sign * c.value});
      entries.push_back({matno, blkno, blk.size + c.row + 1, blk.size + c.row + 1, -sign * c.value});
    } else {
      entries.push_back({matno, blkno, c.row + 1, c.col + 1, sign * c.value});
    }
  };
  for (const auto& c : p.cost()) emit(0, c, -1.0);
  for (int i = 0; i < p.num_constraints(); ++i) {
    for (const auto& c : p.constraints()[static_cast<std::size_t>(i)]) emit(i + 1, c, 1.0);
  }
  std::sort(entries.begin(), entries.end(), [](const Quintuple& a, const Quintuple& b) {
    return std::tie(a.matno, a.blkno, a.i, a.j) < std::tie(b.matno, b.blkno, b.i, b.j);
  });

  std::string out;
  out += std::to_string(p.num_constraints()) + "\n";
  out += std::to_string(p.blocks().size()) + "\n";
  for (std::size_t b = 0; b < p.blocks().size(); ++b) {
    const Block& blk = p.blocks()[b];
    const int size = blk.kind == ConeKind::Psd ? blk.size : -(blk.kind == ConeKind::Free ? 2 * blk.size : blk.size);
    if (b > 0) out += ' ';
    out += std::to_string(size);
  }
  out += "\n";
  for (int i = 0; i < p.num_constraints(); ++i) {
    if (i > 0) out += ' ';
    out += format_double(p.rhs()[static_cast<std::size_t>(i)]);
  }
  out += "\n";
  for (const auto& e : entries) {
    out += std::to_string(e.matno) + ' ' + std::to_string(e.blkno) + ' ' + std::to_string(e.i) + ' ' +
           std::to_string(e.j) + ' ' + format_double(e.value) + "\n";
  }
  return out;
}

namespace {

std::vector<std::string> tokens_of(std::string line) {
  for (char& ch : line) {
    if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')' || ch == '\t' || ch == '\r') ch = ' ';
  }
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::optional<double> parse_number(const std::string& t) {
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<int> parse_int(const std::string& t) {
  const auto v = parse_number(t);
  if (!v || *v != static_cast<double>(static_cast<long long>(*v))) return std::nullopt;
  return static_cast<int>(*v);
}

}  // namespace

ConicProgram parse_sdpa(std::string_view text) {
  std::vector<std::pair<int, std::vector<std::string>>> lines;
  {
    std::istringstream in{std::string(text)};
    int number = 0;
    for (std::string line; std::getline(in, line);) {
      ++number;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      if (line[first] == '"' || line[first] == '*') continue;
      lines.emplace_back(number, tokens_of(line));
    }
  }
  std::size_t cursor = 0;
  auto fail_at = [&](std::size_t index, const std::string& what) -> ProgramError {
    const int at = index < lines.size() ? lines[index].first : -1;
    return ProgramError("SDPA parse error" + (at > 0 ? " at line " + std::to_string(at) : std::string()) + ": " + what);
  };
  auto fail = [&](const std::string& what) { return fail_at(cursor, what); };
  auto header_int = [&](const char* what) {
    if (cursor >= lines.size() || lines[cursor].second.empty()) throw fail(std::string("missing ") + what);
    const auto v = parse_int(lines[cursor].second.front());
    if (!v || *v < 0) throw fail(std::string("invalid ") + what);
    ++cursor;
    return *v;
  };
  // Reads `count` numbers that may span several lines; trailing words on a line are ignored.
  auto read_numbers = [&](int count, const char* what) {
    std::vector<double> out;
    while (static_cast<int>(out.size()) < count) {
      if (cursor >= lines.size()) throw fail(std::string("truncated ") + what);
      for (const auto& t : lines[cursor].second) {
        if (static_cast<int>(out.size()) == count) break;
        const auto v = parse_number(t);
        if (!v) break;
        out.push_back(*v);
      }
      ++cursor;
    }
    return out;
  };

  const int m = header_int("constraint count");
  const int nblocks = header_int("block count");
  if (nblocks < 1) throw fail("at least one block is required");
  const std::size_t structure_line = cursor;
  const auto sizes = read_numbers(nblocks, "block structure");
  const auto b = m > 0 ? read_numbers(m, "right-hand side") : std::vector<double>{};

  ConicProgram p;
  for (double s : sizes) {
    const int k = static_cast<int>(s);
    if (k == 0 || static_cast<double>(k) != s) throw fail_at(structure_line, "invalid block size");
    p.add_block(k > 0 ? ConeKind::Psd : ConeKind::NonNeg, std::abs(k));
  }
  for (double v : b) p.add_constraint(v);

  for (; cursor < lines.size(); ++cursor) {
    const auto& tok = lines[cursor].second;
    if (tok.size() != 5) throw fail("expected 'matno blkno i j value'");
    const auto matno = parse_int(tok[0]);
    const auto blkno = parse_int(tok[1]);
    const auto i = parse_int(tok[2]);
    const auto j = parse_int(tok[3]);
    const auto value = parse_number(tok[4]);
    if (!matno || !blkno || !i || !j || !value) throw fail("malformed entry");
    if (*matno < 0 || *matno > m) throw fail("matrix number out of range");
    if (*blkno < 1 || *blkno > nblocks) throw fail("block number out of range");
    const int size = p.blocks()[static_cast<std::size_t>(*blkno - 1)].size;
    if (*i < 1 || *j < 1 || *i > size || *j > size) throw fail("entry index outside its block");
    try {
      if (*matno == 0) {
        p.add_cost(*blkno - 1, *i - 1, *j - 1, -*value);
      } else {
        p.add_coefficient(*matno - 1, *blkno - 1, *i - 1, *j - 1, *value);
      }
    } catch (const ProgramError& e) {
      throw fail(e.what());
    }
  }
  return p.canonical();
}

}  // namespace momentsos::conic
