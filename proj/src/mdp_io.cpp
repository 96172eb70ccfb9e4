#include "asyncq/mdp_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace asyncq {

namespace {

bool is_significant(const std::string& line) {
  for (const char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c != '#';
  }
  return false;
}

[[noreturn]] void fail_at(const std::string& path, int line_no, const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
}

/// After the expected fields were extracted, only whitespace or a comment
/// may remain.
bool only_trailing_comment(std::istringstream& iss) {
  std::string rest;
  if (!(iss >> rest)) return true;
  return !rest.empty() && rest[0] == '#';
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

TabularMdp read_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);

  std::string line;
  int line_no = 0;
  bool have_header = false;
  long long num_states = 0;
  long long num_actions = 0;
  double gamma = 0.0;

  // Header first: `num_states num_actions gamma`.
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (!is_significant(line)) continue;
    std::istringstream iss(line);
    if (!(iss >> num_states >> num_actions >> gamma) || !only_trailing_comment(iss))
      fail_at(path, line_no, "expected header `num_states num_actions gamma`");
    if (num_states < 1 || num_states > 1000000000)
      fail_at(path, line_no, "num_states must be a positive count");
    if (num_actions < 1 || num_actions > 1000000000)
      fail_at(path, line_no, "num_actions must be a positive count");
    if (!(gamma > 0.0 && gamma < 1.0))
      fail_at(path, line_no, "gamma must lie strictly inside (0, 1)");
    have_header = true;
  }
  if (!have_header) throw ValidationError(path + ": empty model file, header missing");

  TabularMdp mdp(static_cast<StateId>(num_states), static_cast<ActionId>(num_actions), gamma);
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_significant(line)) continue;
    std::istringstream iss(line);
    long long i = 0;
    long long a = 0;
    long long j = 0;
    double p = 0.0;
    double r = 0.0;
    if (!(iss >> i >> a >> j >> p >> r) || !only_trailing_comment(iss))
      fail_at(path, line_no, "expected transition `i a j p r`");
    if (i < 0 || i >= num_states) fail_at(path, line_no, "state index i out of range");
    if (a < 0 || a >= num_actions) fail_at(path, line_no, "action index a out of range");
    if (j < 0 || j >= num_states) fail_at(path, line_no, "successor index j out of range");
    mdp.add_transition(static_cast<StateId>(i), static_cast<ActionId>(a),
                       static_cast<StateId>(j), p, r);
  }
  mdp.finalize();
  validate_mdp(mdp);
  return mdp;
}

void write_mdp_file(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << mdp.num_states() << ' ' << mdp.num_actions() << ' ' << format_double(mdp.gamma())
      << '\n';
  for (StateId i = 0; i < mdp.num_states(); ++i) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      for (const Transition& t : mdp.row(i, a)) {
        out << i << ' ' << a << ' ' << t.next << ' ' << format_double(t.prob) << ' '
            << format_double(t.reward) << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Policy read_policy_file(const std::string& path, StateId num_states, ActionId num_actions) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open policy file: " + path);

  Policy policy;
  policy.reserve(static_cast<std::size_t>(num_states));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_significant(line)) continue;
    std::istringstream iss(line);
    long long action = 0;
    if (!(iss >> action) || !only_trailing_comment(iss))
      fail_at(path, line_no, "expected a single action index");
    if (static_cast<StateId>(policy.size()) == num_states)
      fail_at(path, line_no, "more entries than states (" + std::to_string(num_states) + ")");
    if (action < 0) fail_at(path, line_no, "action index must be nonnegative");
    if (num_actions >= 0 && action >= num_actions)
      fail_at(path, line_no,
              "action index " + std::to_string(action) + " out of range, have " +
                  std::to_string(num_actions) + " actions");
    policy.push_back(static_cast<ActionId>(action));
  }
  if (static_cast<StateId>(policy.size()) != num_states)
    throw ValidationError(path + ": expected " + std::to_string(num_states) +
                          " entries, found " + std::to_string(policy.size()));
  return policy;
}

void write_policy_file(const Policy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const ActionId a : policy) out << a << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace asyncq
