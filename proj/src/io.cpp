#include "hpen/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hpen {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec json_vec(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string("instance: ") + what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

std::string instance_to_json(const QuadraticObjective& obj, const Polyhedron& poly) {
  json j;
  j["n"] = obj.dim();
  j["l"] = obj.l();
  json phi = json::array();
  for (Eigen::Index r = 0; r < obj.Phi().rows(); ++r)
    for (Eigen::Index c = 0; c < obj.Phi().cols(); ++c) phi.push_back(obj.Phi()(r, c));
  j["phi"] = std::move(phi);
  j["x0"] = vec_json(obj.x0());
  json cons = json::array();
  for (const auto& c : poly.constraints()) cons.push_back(json{{"a", vec_json(c.a)}, {"b", c.b}});
  j["constraints"] = std::move(cons);
  return j.dump(1) + "\n";
}

ProblemInstance instance_from_json(const std::string& text) {
  const json j = json::parse(text);
  const auto n = j.at("n").get<Eigen::Index>();
  const auto l = j.at("l").get<Eigen::Index>();
  const Vec flat = json_vec(j.at("phi"), "phi");
  if (flat.size() != n * l) throw std::invalid_argument("instance: phi must hold l*n entries");
  Mat phi(l, n);
  for (Eigen::Index r = 0; r < l; ++r)
    for (Eigen::Index c = 0; c < n; ++c) phi(r, c) = flat(r * n + c);
  Vec x0 = json_vec(j.at("x0"), "x0");
  std::vector<LinearConstraint> cons;
  for (const auto& c : j.at("constraints")) {
    Vec a = json_vec(c.at("a"), "a");
    if (a.size() != n) throw std::invalid_argument("instance: constraint dimension differs from n");
    cons.push_back({std::move(a), c.at("b").get<double>()});
  }
  return {QuadraticObjective(std::move(phi), std::move(x0)), Polyhedron(std::move(cons))};
}

void write_instance(const std::filesystem::path& path, const QuadraticObjective& obj, const Polyhedron& poly) {
  write_file(path, instance_to_json(obj, poly));
}

ProblemInstance read_instance(const std::filesystem::path& path) { return instance_from_json(read_file(path)); }

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 digest failed");
  std::string hex(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) std::snprintf(&hex[2 * i], 3, "%02x", md[i]);
  return hex;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace hpen
