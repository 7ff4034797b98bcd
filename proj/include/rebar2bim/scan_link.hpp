#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rebar2bim {

enum class EventKind { ScanD1, ScanD2, LabelImage };

struct TimedEvent {
  EventKind kind = EventKind::ScanD1;
  std::string id;  // scan_id or image_id
  std::int64_t timestamp = 0;
  std::string element_id;  // label events only; may be empty if resolved later
};

struct ScanLink {
  std::string element_id;
  std::optional<std::string> scan_h;  // D1 scan
  std::optional<std::string> scan_v;  // D2 scan
  std::string image_id;

  bool operator==(const ScanLink&) const = default;
};

struct LinkResult {
  std::vector<ScanLink> links;  // in label time order
  std::vector<std::string> unmatched;

  bool operator==(const LinkResult&) const = default;
};

struct LinkPolicy {
  std::int64_t clock_offset = 0;  // ms, added to every scan timestamp
  bool require_both_directions = true;
  std::optional<std::int64_t> max_gap;  // ms from a scan to its label; nullopt = unbounded
};

/// Links every label to the scans taken after the previous label and strictly
/// before it. Throws E_EMPTY_WINDOW, E_MISSING_DIRECTION or E_EXTRA_SCANS;
/// ambiguity is never resolved heuristically. Scans that fall in no window
/// (after the last label, at a label's exact time, or beyond max_gap) are
/// reported as unmatched.
LinkResult allocate_timestamps(const std::vector<TimedEvent>& scans, const std::vector<TimedEvent>& labels,
                               const LinkPolicy& policy);

/// `links.json` interchange.
std::string links_to_json(const LinkResult& r);
LinkResult links_from_json(std::string_view text);

}  // namespace rebar2bim
