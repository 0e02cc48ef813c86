#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace wmbench {

/// Every failure the harness can report. The names double as the wire
/// representation in transcripts and reports.
enum class Errc {
  MalformedDocument,
  SchemaViolation,
  EmptyArray,
  MissingImage,
  CorruptImage,
  ManifestParseError,
  DimensionMismatch,
  EmptyDataset,
  InvalidVerdict,
  InvalidLength,
  GroupTooSmall,
  WindowTooLarge,
  LayerMismatch,
  ZeroNormFeature,
  NonPSD,
  TooFewSamples,
  EmptySource,
  EmbedderFailure,
  Transport,
  ProviderRefusal,
  InvalidImagePayload,
  InvalidSelection,
  DimensionInconsistency,
  PreconditionViolation,
  SelectionFailure,
  EmptyAfterExclusion,
  ConfigError,
  ReplayMiss,
};

namespace detail {
inline constexpr std::array<std::pair<Errc, std::string_view>, 28> kErrcNames{{
    {Errc::MalformedDocument, "MalformedDocument"},
    {Errc::SchemaViolation, "SchemaViolation"},
    {Errc::EmptyArray, "EmptyArray"},
    {Errc::MissingImage, "MissingImage"},
    {Errc::CorruptImage, "CorruptImage"},
    {Errc::ManifestParseError, "ManifestParseError"},
    {Errc::DimensionMismatch, "DimensionMismatch"},
    {Errc::EmptyDataset, "EmptyDataset"},
    {Errc::InvalidVerdict, "InvalidVerdict"},
    {Errc::InvalidLength, "InvalidLength"},
    {Errc::GroupTooSmall, "GroupTooSmall"},
    {Errc::WindowTooLarge, "WindowTooLarge"},
    {Errc::LayerMismatch, "LayerMismatch"},
    {Errc::ZeroNormFeature, "ZeroNormFeature"},
    {Errc::NonPSD, "NonPSD"},
    {Errc::TooFewSamples, "TooFewSamples"},
    {Errc::EmptySource, "EmptySource"},
    {Errc::EmbedderFailure, "EmbedderFailure"},
    {Errc::Transport, "Transport"},
    {Errc::ProviderRefusal, "ProviderRefusal"},
    {Errc::InvalidImagePayload, "InvalidImagePayload"},
    {Errc::InvalidSelection, "InvalidSelection"},
    {Errc::DimensionInconsistency, "DimensionInconsistency"},
    {Errc::PreconditionViolation, "PreconditionViolation"},
    {Errc::SelectionFailure, "SelectionFailure"},
    {Errc::EmptyAfterExclusion, "EmptyAfterExclusion"},
    {Errc::ConfigError, "ConfigError"},
    {Errc::ReplayMiss, "ReplayMiss"},
}};
}  // namespace detail

inline std::string_view to_string(Errc code) {
  for (const auto& [c, name] : detail::kErrcNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

inline std::optional<Errc> errc_from_string(std::string_view name) {
  for (const auto& [c, n] : detail::kErrcNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message),
        index_(index) {}

  Errc code() const noexcept { return code_; }
  /// Message without the error-kind prefix.
  const std::string& detail() const noexcept { return detail_; }
  /// Offending element position, when the error concerns one element of a list.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::string detail_;
  std::optional<std::size_t> index_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message,
                              std::optional<std::size_t> index = std::nullopt) {
  throw Error(code, message, index);
}

}  // namespace wmbench
