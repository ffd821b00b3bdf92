#ifndef NESTPLAY_ERRORS_H_
#define NESTPLAY_ERRORS_H_

#include <stdexcept>

namespace nestplay {

// Raised by any opponent that cannot produce a usable move. Episodes catch it
// and abort with an error record instead of failing the batch.
class OpponentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nestplay

#endif  // NESTPLAY_ERRORS_H_
