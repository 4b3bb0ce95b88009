#include "coneiso/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coneiso/errors.hpp"

namespace coneiso {

std::string format_double(double x) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
  return out;
}

json cone_to_json(const ConeSpec& cone) {
  json shape;
  if (const auto* s = std::get_if<Sector>(&cone.shape())) {
    shape = {{"kind", "sector"}, {"theta", s->theta}};
  } else if (const auto* c = std::get_if<Circular>(&cone.shape())) {
    shape = {{"kind", "circular"}, {"alpha", c->alpha}};
  } else if (const auto* p = std::get_if<Polyhedral>(&cone.shape())) {
    json normals = json::array();
    for (const auto& nk : p->normals) normals.push_back(std::vector<double>(nk.data(), nk.data() + nk.size()));
    shape = {{"kind", "polyhedral"}, {"normals", normals}};
  } else {
    shape = {{"kind", "halfspace"}};
  }
  return {{"ambient_dim", cone.ambient_dim()}, {"shape", shape}};
}

namespace {

const json& require_key(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError("missing key '" + path + key + "'");
  return j.at(key);
}

double require_number(const json& j, const std::string& key, const std::string& path) {
  const auto& v = require_key(j, key, path);
  if (!v.is_number()) throw ValidationError("key '" + path + key + "' must be a number");
  return v.get<double>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ValidationError("unknown key '" + path + k + "'");
  }
}

}  // namespace

ConeSpec cone_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("cone must be a JSON object");
  reject_unknown(j, {"ambient_dim", "shape"}, "");
  const auto& dim_json = require_key(j, "ambient_dim", "");
  if (!dim_json.is_number_integer()) throw ValidationError("key 'ambient_dim' must be an integer");
  const int dim = dim_json.get<int>();
  const auto& shape = require_key(j, "shape", "");
  const auto& kind_json = require_key(shape, "kind", "shape.");
  if (!kind_json.is_string()) throw ValidationError("key 'shape.kind' must be a string");
  const auto kind = kind_json.get<std::string>();
  if (kind == "sector") {
    reject_unknown(shape, {"kind", "theta"}, "shape.");
    if (dim != 2) throw ValidationError("sector cones live in ambient dimension 2");
    return ConeSpec::sector(require_number(shape, "theta", "shape."));
  }
  if (kind == "circular") {
    reject_unknown(shape, {"kind", "alpha"}, "shape.");
    return ConeSpec::circular(require_number(shape, "alpha", "shape."), dim);
  }
  if (kind == "halfspace") {
    reject_unknown(shape, {"kind"}, "shape.");
    return ConeSpec::half_space(dim);
  }
  if (kind == "polyhedral") {
    reject_unknown(shape, {"kind", "normals"}, "shape.");
    const auto& normals_json = require_key(shape, "normals", "shape.");
    if (!normals_json.is_array()) throw ValidationError("key 'shape.normals' must be an array");
    std::vector<Eigen::VectorXd> normals;
    for (const auto& nj : normals_json) {
      if (!nj.is_array()) throw ValidationError("key 'shape.normals' must hold arrays of numbers");
      Eigen::VectorXd v(nj.size());
      for (std::size_t i = 0; i < nj.size(); ++i) {
        if (!nj[i].is_number()) throw ValidationError("key 'shape.normals' must hold arrays of numbers");
        v(static_cast<Eigen::Index>(i)) = nj[i].get<double>();
      }
      if (v.size() != dim) throw ValidationError("polyhedral normal dimension differs from ambient_dim");
      normals.push_back(std::move(v));
    }
    return ConeSpec::polyhedral(std::move(normals));
  }
  throw ValidationError("unknown cone kind '" + kind + "'");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

json parse_json_argument(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed inline JSON: ") + e.what());
    }
  }
  return read_json_file(text);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("short write on '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, digest.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[digest[i] >> 4];
      out += kHex[digest[i] & 0xf];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "' for hashing");
  Sha256 h;
  std::array<char, 1 << 15> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

}  // namespace coneiso
