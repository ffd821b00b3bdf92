#include <algorithm>
#include <sstream>

#include "nestplay/tasks.h"
#include "nestplay/text_util.h"

namespace nestplay::tasks {
namespace {

constexpr char kOps[] = {'+', '-', '*'};

long long apply_op(long long a, char op, long long b) {
  switch (op) {
    case '+': return a + b;
    case '-': return a - b;
    default: return a * b;
  }
}

std::string answer_text(long long v) { return "The answer is " + std::to_string(v); }

}  // namespace

ArithProblem make_arith_problem(Rng& rng, const ArithOptions& opts) {
  if (opts.max_operand < 1) throw std::invalid_argument("max_operand must be positive");
  if (opts.choices < 2) throw std::invalid_argument("arith needs at least 2 choices");
  const auto span = static_cast<std::size_t>(opts.max_operand) + 1;
  ArithProblem p;
  p.a = static_cast<long long>(uniform_index(rng, span));
  p.b = static_cast<long long>(uniform_index(rng, span));
  p.op = kOps[uniform_index(rng, std::size(kOps))];
  p.answer = apply_op(p.a, p.op, p.b);

  std::ostringstream q;
  q << "Compute " << p.a << ' ' << (p.op == '*' ? 'x' : p.op) << ' ' << p.b
    << ". Reply with the final integer answer.";
  p.prompt = q.str();

  // Distractors sit near the truth so they read as plausible slips.
  std::vector<long long> values{p.answer};
  while (values.size() < static_cast<std::size_t>(opts.choices)) {
    const long long delta = static_cast<long long>(uniform_index(rng, 20)) - 10;
    const long long v = p.answer + (delta == 0 ? 11 : delta);
    if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
  }
  shuffle_in_place(values, rng);
  for (long long v : values) p.options.push_back(answer_text(v));
  return p;
}

ArithProblem arith_pool_problem(const ArithOptions& opts, std::size_t index) {
  if (opts.pool_size <= 0) throw std::invalid_argument("arith pool is disabled");
  Rng rng(derive_seed(opts.pool_seed, index % static_cast<std::size_t>(opts.pool_size)));
  return make_arith_problem(rng, opts);
}

ArithTask arith_task(Rng& rng, const ArithOptions& opts) {
  ArithProblem p;
  if (opts.pool_size > 0) {
    p = arith_pool_problem(opts, uniform_index(rng, static_cast<std::size_t>(opts.pool_size)));
  } else {
    p = make_arith_problem(rng, opts);
  }
  return {p.prompt, p.options, arith_verifier(p.answer)};
}

std::function<int(std::string_view)> arith_verifier(long long truth) {
  return [truth](std::string_view answer) {
    const auto v = last_integer(answer);
    return v && *v == truth ? 1 : 0;
  };
}

}  // namespace nestplay::tasks
