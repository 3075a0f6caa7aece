#pragma once

#include <gtest/gtest.h>

#include "blockade/errors.hpp"

namespace blockade::test_support {

// Error code thrown by f(); records a failure when nothing is thrown.
template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no blockade::Error thrown";
  return ErrorCode::IoError;
}

}  // namespace blockade::test_support
