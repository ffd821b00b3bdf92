#include "nestplay/policy.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nestplay/text_util.h"

namespace nestplay::grpo {
namespace {

constexpr std::string_view kSnapshotHeader = "nestplay-policy 1";

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, int lineno) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("policy snapshot line " + std::to_string(lineno) +
                             ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::uint64_t observation_key(std::string_view text,
                              std::span<const std::string> actions) {
  std::string buf(text);
  for (const auto& a : actions) {
    buf += '\x1f';
    buf += a;
  }
  return fnv1a64(buf);
}

std::vector<double> PolicyParams::logits(std::uint64_t key,
                                         std::size_t num_actions) const {
  auto it = table_.find(key);
  if (it == table_.end()) return std::vector<double>(num_actions, 0.0);
  if (it->second.size() != num_actions) {
    throw std::logic_error("observation " + hex64(key) + " has " +
                           std::to_string(it->second.size()) + " actions, not " +
                           std::to_string(num_actions));
  }
  return it->second;
}

std::vector<double>& PolicyParams::ensure(std::uint64_t key,
                                          std::size_t num_actions) {
  auto [it, inserted] = table_.try_emplace(key, num_actions, 0.0);
  if (!inserted && it->second.size() != num_actions) {
    throw std::logic_error("observation " + hex64(key) +
                           " seen with a different action count");
  }
  return it->second;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : table_) n += v.size();
  return n;
}

void PolicyParams::save(std::ostream& out) const {
  out << kSnapshotHeader << '\n';
  for (const auto& [key, logits] : table_) {
    out << hex64(key) << '\t' << logits.size() << '\t';
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (i) out << ' ';
      out << format_double(logits[i]);
    }
    out << '\n';
  }
}

PolicyParams PolicyParams::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSnapshotHeader) {
    throw std::runtime_error("not a policy snapshot (bad header)");
  }
  PolicyParams p;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].size() != 16) {
      throw std::runtime_error("policy snapshot line " + std::to_string(lineno) +
                               ": malformed");
    }
    std::uint64_t key = 0;
    auto kr = std::from_chars(fields[0].data(), fields[0].data() + 16, key, 16);
    std::size_t n = 0;
    auto nr = std::from_chars(fields[1].data(),
                              fields[1].data() + fields[1].size(), n);
    if (kr.ec != std::errc() || nr.ec != std::errc()) {
      throw std::runtime_error("policy snapshot line " + std::to_string(lineno) +
                               ": bad key or count");
    }
    std::vector<double> logits;
    for (const auto& tok : split(fields[2], ' ')) {
      logits.push_back(parse_double(tok, lineno));
    }
    if (logits.size() != n) {
      throw std::runtime_error("policy snapshot line " + std::to_string(lineno) +
                               ": logit count mismatch");
    }
    p.table_.emplace(key, std::move(logits));
  }
  return p;
}

void PolicyParams::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy snapshot: " + path);
  save(out);
}

PolicyParams PolicyParams::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read policy snapshot: " + path);
  return load(in);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax of no logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double entropy_of_logits(std::span<const double> logits) {
  const auto lp = log_softmax(logits);
  double h = 0.0;
  for (double l : lp) h -= std::exp(l) * l;
  return h;
}

double policy_logprob(const PolicyParams& p, std::uint64_t key,
                      std::size_t num_actions, std::size_t action) {
  if (action >= num_actions) {
    throw UnknownAction("action " + std::to_string(action) + " of " +
                        std::to_string(num_actions));
  }
  const auto z = p.logits(key, num_actions);
  return log_softmax(z)[action];
}

double policy_entropy(const PolicyParams& p, std::uint64_t key,
                      std::size_t num_actions) {
  return entropy_of_logits(p.logits(key, num_actions));
}

ActionDraw SoftmaxPolicy::act(std::string_view text,
                              std::span<const std::string> actions,
                              Rng& rng) const {
  if (actions.empty()) throw std::invalid_argument("no actions to choose from");
  const auto key = observation_key(text, actions);
  const auto lp = log_softmax(params_->logits(key, actions.size()));
  const double u = uniform_unit(rng);
  double cum = 0.0;
  std::size_t pick = lp.size() - 1;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    cum += std::exp(lp[i]);
    if (u < cum) {
      pick = i;
      break;
    }
  }
  return {pick, lp[pick]};
}

ActionDraw UniformPolicy::act(std::string_view,
                              std::span<const std::string> actions,
                              Rng& rng) const {
  if (actions.empty()) throw std::invalid_argument("no actions to choose from");
  const std::size_t i = uniform_index(rng, actions.size());
  return {i, -std::log(static_cast<double>(actions.size()))};
}

}  // namespace nestplay::grpo
