#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scoutlabel {

// Machine-readable failure categories. The CLI reports these verbatim.
enum class ErrorCode {
  io,
  parse,
  dimension_mismatch,
  duplicate_image_id,
  split_conflict,
  label_conflict,
  empty_train_split,
  invalid_argument,
  zero_norm,
  isolated_sample,
  missing_exemplar,
  missing_annotation,
  single_class,
  budget_mismatch,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::duplicate_image_id: return "duplicate_image_id";
    case ErrorCode::split_conflict: return "split_conflict";
    case ErrorCode::label_conflict: return "label_conflict";
    case ErrorCode::empty_train_split: return "empty_train_split";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::zero_norm: return "zero_norm";
    case ErrorCode::isolated_sample: return "isolated_sample";
    case ErrorCode::missing_exemplar: return "missing_exemplar";
    case ErrorCode::missing_annotation: return "missing_annotation";
    case ErrorCode::single_class: return "single_class";
    case ErrorCode::budget_mismatch: return "budget_mismatch";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace scoutlabel
