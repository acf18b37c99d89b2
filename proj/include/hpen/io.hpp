#pragma once

#include <filesystem>
#include <string>

#include "hpen/problem.hpp"

namespace hpen {

struct ProblemInstance {
  QuadraticObjective obj;
  Polyhedron poly;
};

// {"n","l","phi" (row-major),"x0","constraints":[{"a","b"}]}
std::string instance_to_json(const QuadraticObjective& obj, const Polyhedron& poly);
ProblemInstance instance_from_json(const std::string& text);

void write_instance(const std::filesystem::path& path, const QuadraticObjective& obj, const Polyhedron& poly);
ProblemInstance read_instance(const std::filesystem::path& path);

// Same digest as `git hash-object`.
std::string git_blob_sha1(const std::string& content);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace hpen
