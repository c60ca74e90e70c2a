#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ldx/errors.hpp"
#include "ldx/models.hpp"

namespace ldx::models {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
  throw ConfigError("model" + path + ": " + msg);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(path, "missing key '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema_error(path, "expected an integer");
  return j.get<int>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> vector(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> rows(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(vector(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::MatrixXd matrix(const json& j, const std::string& path) {
  const auto r = rows(j, path);
  if (r.empty()) schema_error(path, "expected a nonempty matrix");
  Eigen::MatrixXd m(r.size(), r[0].size());
  for (size_t i = 0; i < r.size(); ++i) {
    if (r[i].size() != r[0].size()) schema_error(path, "ragged matrix");
    for (size_t k = 0; k < r[i].size(); ++k) m(i, k) = r[i][k];
  }
  return m;
}

NamedFunction named(const json& j, const std::string& path) {
  NamedFunction f;
  if (j.is_string()) {
    f.name = j.get<std::string>();
    return f;
  }
  f.name = string(field(j, "name", path), path + ".name");
  if (j.contains("params")) f.params = vector(j["params"], path + ".params");
  if (j.contains("matrix")) f.matrix = rows(j["matrix"], path + ".matrix");
  return f;
}

TrigPoly trig(const json& j, const std::string& path) {
  TrigPoly t;
  if (!j.is_object()) schema_error(path, "expected {a0, cos, sin}");
  if (j.contains("a0")) t.a0 = number(j["a0"], path + ".a0");
  if (j.contains("cos")) t.c = vector(j["cos"], path + ".cos");
  if (j.contains("sin")) t.s = vector(j["sin"], path + ".sin");
  return t;
}

double optional_delta(const json& j, const std::string& path) {
  if (!j.contains("delta") || j["delta"].is_null()) return std::numeric_limits<double>::infinity();
  return number(j["delta"], path + ".delta");
}

AnyModel build(const json& j) {
  const std::string type = string(field(j, "type", ""), ".type");
  if (type == "iid_finite")
    return IIDFiniteModel(vector(field(j, "atoms", ""), ".atoms"), vector(field(j, "probs", ""), ".probs"));
  if (type == "iid_mgf") {
    const std::string fam = string(field(j, "family", ""), ".family");
    const json& p = field(j, "params", "");
    const double delta = optional_delta(j, "");
    if (fam == "gaussian")
      return IIDMgfModel::gaussian(number(field(p, "mean", ".params"), ".params.mean"),
                                   number(field(p, "var", ".params"), ".params.var"), delta);
    if (fam == "tabulated")
      return IIDMgfModel::tabulated(number(field(p, "lo", ".params"), ".params.lo"),
                                    number(field(p, "hi", ".params"), ".params.hi"),
                                    vector(field(p, "density", ".params"), ".params.density"), delta);
    schema_error(".family", "unknown MGF family '" + fam + "'");
  }
  if (type == "finite_markov") {
    Eigen::MatrixXd P = matrix(field(j, "P", ""), ".P");
    Eigen::MatrixXd h = matrix(field(j, "h", ""), ".h");
    Eigen::VectorXd mu;
    if (j.contains("mu0")) {
      const auto v = vector(j["mu0"], ".mu0");
      mu = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else {
      mu = Eigen::VectorXd::Constant(P.rows(), 1.0 / static_cast<double>(P.rows()));
    }
    return FiniteMarkovModel(P, h, mu);
  }
  if (type == "nystrom") {
    NystromSpec s;
    s.kernel = named(field(j, "kernel", ""), ".kernel");
    s.h = named(field(j, "h", ""), ".h");
    if (j.contains("rho")) s.rho = named(j["rho"], ".rho");
    if (j.contains("nq")) s.nq = integer(j["nq"], ".nq");
    if (j.contains("quadrature")) s.quadrature = string(j["quadrature"], ".quadrature");
    if (j.contains("panels")) s.panels = integer(j["panels"], ".panels");
    return NystromKernelModel(s);
  }
  if (type == "fourier") {
    CircleMap map;
    const json& mj = field(j, "map", "");
    if (mj.is_string()) {
      map.name = mj.get<std::string>();
    } else {
      map.name = string(field(mj, "name", ".map"), ".map.name");
      if (mj.contains("eps")) map.eps = number(mj["eps"], ".map.eps");
    }
    TrigPoly g = trig(field(j, "g", ""), ".g");
    TrigPoly rho;
    rho.a0 = 1.0;
    if (j.contains("rho")) rho = trig(j["rho"], ".rho");
    const int m_max = j.contains("m_max") ? integer(j["m_max"], ".m_max") : 32;
    const int grid = j.contains("grid") ? integer(j["grid"], ".grid") : 0;
    return FourierTransferModel(map, g, rho, m_max, grid);
  }
  schema_error(".type", "unknown model type '" + type + "'");
}

}  // namespace

AnyModel parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("model parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  try {
    return build(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model schema error: ") + e.what());
  }
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace ldx::models
