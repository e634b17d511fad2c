#pragma once

#include "momentsos/gpm.hpp"
#include "momentsos/hierarchy.hpp"
#include "momentsos/poly.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace momentsos::cli {

enum class ProblemErrorCode { Io, Syntax, Schema, UnknownKind, UndeclaredVariable, DegreeMismatch };

const char* to_string(ProblemErrorCode code);

/// A problem file that cannot be read or violates the schema. The message
/// names the line (syntax errors) or the JSON field path (schema errors).
class ProblemFileError : public std::runtime_error {
 public:
  ProblemFileError(ProblemErrorCode code, const std::string& message);
  ProblemErrorCode code() const { return code_; }

 private:
  ProblemErrorCode code_;
};

struct SosCheckProblem {
  Polynomial f;
};

struct VolumeSpec {
  SemialgebraicSet set;
  BoxBounds box;
};

struct ProbBoundSpec {
  SemialgebraicSet omega1;
  SemialgebraicSet omega2;
  std::vector<KnownMoment> moments;
  Direction direction = Direction::Upper;
};

struct SuperResSpec {
  int t = 0;
  SemialgebraicSet omega;
  std::vector<KnownMoment> moments;
};

using ProblemData =
    std::variant<std::monostate, PopProblem, SosCheckProblem, GpmProblem, VolumeSpec, ProbBoundSpec, SuperResSpec>;

/// Schema version 1. Kinds: pop, sos-check, gpm, volume, prob-bound, superres.
struct ProblemFile {
  int version = 1;
  std::string kind;
  std::vector<std::string> variables;
  ProblemData data;
};

ProblemFile parse_problem(std::string_view text);
/// Throws ProblemFileError with code Io when the file cannot be read.
ProblemFile parse_problem_file(const std::filesystem::path& path);

enum ExitCode : int { kSuccess = 0, kUsage = 1, kParse = 2, kSolverFailure = 3, kNotCertified = 4 };

/// Runs the command line; the human summary goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace momentsos::cli
