#include "chainlik_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "chainlik/error.hpp"
#include "chainlik_cli/io.hpp"

namespace chainlik::cli {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector json_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw Error(Errc::Config, "'" + key + "' must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(Errc::Config, "'" + key + "' must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::Config, where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw Error(Errc::Config, "unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::Config, "'" + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  std::shared_ptr<const ParametricModel> m;
  try {
    m = make_model(model);
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
  try {
    method.validate();
    fit.validate();
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
  if (theta) {
    if (static_cast<std::size_t>(theta->size()) != m->dim()) {
      throw Error(Errc::Config, "theta has " + std::to_string(theta->size()) + " entries; " +
                                    std::string(family_name(model.family)) + " has " + std::to_string(m->dim()));
    }
    if (!m->in_domain(*theta)) throw Error(Errc::Config, "theta lies outside the model domain");
  }
  for (const Vector& s : fit.start_points) {
    if (static_cast<std::size_t>(s.size()) != m->dim() || !m->in_domain(s)) {
      throw Error(Errc::Config, "a start point lies outside the model domain");
    }
  }
}

bool RunConfig::operator==(const RunConfig& o) const {
  auto same_vec = [](const std::optional<Vector>& a, const std::optional<Vector>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || (a->size() == b->size() && *a == *b);
  };
  if (model.family != o.model.family || model.num_states != o.model.num_states ||
      !same_vec(model.known_p, o.model.known_p) || !same_vec(theta, o.theta))
    return false;
  if (fit.start_points.size() != o.fit.start_points.size()) return false;
  for (std::size_t i = 0; i < fit.start_points.size(); ++i) {
    if (fit.start_points[i].size() != o.fit.start_points[i].size() || fit.start_points[i] != o.fit.start_points[i])
      return false;
  }
  return method == o.method && fit.n_starts == o.fit.n_starts && fit.grad_tol == o.fit.grad_tol &&
         fit.step_tol == o.fit.step_tol && fit.max_iter == o.fit.max_iter &&
         fit.throw_on_failure == o.fit.throw_on_failure && seed == o.seed && n == o.n && reps == o.reps &&
         allow_periodic == o.allow_periodic && input == o.input && output == o.output;
}

json to_json(const RunConfig& c) {
  json model = {{"family", family_name(c.model.family)}, {"states", c.model.num_states}};
  if (c.model.known_p) model["known_p"] = vector_json(*c.model.known_p);
  json starts = json::array();
  for (const Vector& s : c.fit.start_points) starts.push_back(vector_json(s));
  json out = {
      {"model", model},
      {"method", c.method.label()},
      {"fit",
       {{"n_starts", c.fit.n_starts},
        {"grad_tol", c.fit.grad_tol},
        {"step_tol", c.fit.step_tol},
        {"max_iter", c.fit.max_iter},
        {"start_points", starts}}},
      {"seed", c.seed},
      {"n", c.n},
      {"reps", c.reps},
      {"allow_periodic", c.allow_periodic},
      {"input", c.input},
      {"output", c.output},
  };
  if (c.theta) out["theta"] = vector_json(*c.theta);
  return out;
}

RunConfig config_from_json(const json& j) {
  check_keys(j, {"model", "theta", "method", "fit", "seed", "n", "reps", "allow_periodic", "input", "output"},
             "config");
  RunConfig c;
  if (!j.contains("model")) throw Error(Errc::Config, "config needs a 'model' object");
  const json& m = j.at("model");
  check_keys(m, {"family", "states", "known_p"}, "model");
  if (!m.contains("family")) throw Error(Errc::Config, "model needs a 'family'");
  try {
    const std::string name = get_as<std::string>(m.at("family"), "model.family");
    const auto family = parse_family(name);
    if (!family) throw Error(Errc::Config, "unknown model family '" + name + "'");
    c.model.family = *family;
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
  if (m.contains("states")) c.model.num_states = get_as<std::size_t>(m.at("states"), "model.states");
  if (m.contains("known_p")) c.model.known_p = json_vector(m.at("known_p"), "model.known_p");
  if (j.contains("theta")) c.theta = json_vector(j.at("theta"), "theta");
  if (j.contains("method")) {
    try {
      c.method = parse_method(get_as<std::string>(j.at("method"), "method"));
    } catch (const Error& e) {
      throw Error(Errc::Config, e.what());
    }
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, {"n_starts", "grad_tol", "step_tol", "max_iter", "start_points"}, "fit");
    if (f.contains("n_starts")) c.fit.n_starts = get_as<unsigned>(f.at("n_starts"), "fit.n_starts");
    if (f.contains("grad_tol")) c.fit.grad_tol = get_as<double>(f.at("grad_tol"), "fit.grad_tol");
    if (f.contains("step_tol")) c.fit.step_tol = get_as<double>(f.at("step_tol"), "fit.step_tol");
    if (f.contains("max_iter")) c.fit.max_iter = get_as<unsigned>(f.at("max_iter"), "fit.max_iter");
    if (f.contains("start_points")) {
      const json& s = f.at("start_points");
      if (!s.is_array()) throw Error(Errc::Config, "'fit.start_points' must be an array of arrays");
      for (const json& p : s) c.fit.start_points.push_back(json_vector(p, "fit.start_points"));
    }
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
  if (j.contains("n")) c.n = get_as<std::size_t>(j.at("n"), "n");
  if (j.contains("reps")) c.reps = get_as<std::size_t>(j.at("reps"), "reps");
  if (j.contains("allow_periodic")) c.allow_periodic = get_as<bool>(j.at("allow_periodic"), "allow_periodic");
  if (j.contains("input")) c.input = get_as<std::string>(j.at("input"), "input");
  if (j.contains("output")) c.output = get_as<std::string>(j.at("output"), "output");
  return c;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::Config, path + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& config, const std::string& path) {
  write_file_atomic(path, to_json(config).dump(2) + "\n");
}

Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw Error(Errc::Config, "empty entry in list '" + text + "'");
    item = item.substr(first, last - first + 1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size() || !std::isfinite(v)) {
      throw Error(Errc::Config, "'" + item + "' is not a number");
    }
    values.push_back(v);
    pos = end + 1;
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace chainlik::cli
