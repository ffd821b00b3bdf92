#ifndef NESTPLAY_POLICY_H_
#define NESTPLAY_POLICY_H_

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nestplay/random.h"

namespace nestplay::grpo {

// Stable key for an observation: FNV-1a over the text and the action list.
std::uint64_t observation_key(std::string_view text,
                              std::span<const std::string> actions);

struct ActionDraw {
  std::size_t index = 0;
  double logprob = 0.0;
};

// The contract every acting policy satisfies: given the rendered observation
// and its discrete action set, pick one action and report its log-probability.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual ActionDraw act(std::string_view text,
                         std::span<const std::string> actions, Rng& rng) const = 0;
  virtual std::string name() const = 0;
};

class UnknownAction : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Tabular contextual softmax: observation key -> one logit per action.
// Missing entries read as all-zero logits.
class PolicyParams {
 public:
  using Table = std::map<std::uint64_t, std::vector<double>>;

  // Logits for `key`; zeros when absent. Throws if an existing entry has a
  // different action count.
  std::vector<double> logits(std::uint64_t key, std::size_t num_actions) const;
  // Creates the entry with zeros on first sight.
  std::vector<double>& ensure(std::uint64_t key, std::size_t num_actions);
  bool contains(std::uint64_t key) const { return table_.count(key) > 0; }

  const Table& table() const { return table_; }
  Table& table() { return table_; }
  std::size_t parameter_count() const;

  bool operator==(const PolicyParams&) const = default;

  // Versioned flat text record; doubles written in shortest round-trip form.
  void save(std::ostream& out) const;
  static PolicyParams load(std::istream& in);
  void save_file(const std::string& path) const;
  static PolicyParams load_file(const std::string& path);

 private:
  Table table_;
};

std::vector<double> log_softmax(std::span<const double> logits);
double entropy_of_logits(std::span<const double> logits);

double policy_logprob(const PolicyParams& p, std::uint64_t key,
                      std::size_t num_actions, std::size_t action);
double policy_entropy(const PolicyParams& p, std::uint64_t key,
                      std::size_t num_actions);

class SoftmaxPolicy : public Policy {
 public:
  explicit SoftmaxPolicy(const PolicyParams& params) : params_(&params) {}
  ActionDraw act(std::string_view text, std::span<const std::string> actions,
                 Rng& rng) const override;
  std::string name() const override { return "softmax"; }

 private:
  const PolicyParams* params_;
};

class UniformPolicy : public Policy {
 public:
  ActionDraw act(std::string_view text, std::span<const std::string> actions,
                 Rng& rng) const override;
  std::string name() const override { return "uniform"; }
};

}  // namespace nestplay::grpo

#endif  // NESTPLAY_POLICY_H_
