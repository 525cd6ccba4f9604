#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bblab/errors.hpp"
#include "bblab/signal.hpp"

namespace bblab {

// Query-counting wrapper around a decision function. Every attack talks to
// the target only through a session, so the reported query budget Q is the
// session counter by construction. Single-writer: queries within one
// session must stay serialized, distinct sessions are independent.
template <typename Response>
class Session {
 public:
  using Fn = std::function<Response(const Signal&)>;

  explicit Session(Fn fn, bool logging = false) : fn_(std::move(fn)) {
    if (logging) log_.emplace();
  }

  Response query(const Signal& q) {
    Response r = fn_(q);  // counter advances only for answered queries
    ++count_;
    if (log_) log_->emplace_back(q, r);
    return r;
  }

  std::uint64_t count() const { return count_; }
  bool logging() const { return log_.has_value(); }

  const std::vector<std::pair<Signal, Response>>& log() const {
    if (!log_) throw Error("session logging is disabled");
    return *log_;
  }

 private:
  Fn fn_;
  std::uint64_t count_ = 0;
  std::optional<std::vector<std::pair<Signal, Response>>> log_;
};

// A binary session exposes only yes/no answers; a numeric session exposes
// the raw detector score. Attacks in this codebase consume the binary kind.
using BinarySession = Session<bool>;
using NumericSession = Session<double>;

}  // namespace bblab
