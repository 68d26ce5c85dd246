#pragma once

#include <doctest.h>

#include <functional>

#include "osclab/error.hpp"

// Error code thrown by f; fails the test when nothing is thrown.
inline osc::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const osc::Error& e) {
    return e.code();
  }
  FAIL("expected an osc::Error");
  return osc::ErrorCode::internal;
}
