#include "rebar2bim/scan_link.hpp"

#include <algorithm>
#include <tuple>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"

namespace rebar2bim {

namespace {

struct Adjusted {
  const TimedEvent* ev;
  std::int64_t t;
};

std::string describe(const TimedEvent& label) {
  return "label image " + label.id + " @" + std::to_string(label.timestamp);
}

}  // namespace

LinkResult allocate_timestamps(const std::vector<TimedEvent>& scans, const std::vector<TimedEvent>& labels,
                               const LinkPolicy& policy) {
  if (policy.max_gap && *policy.max_gap <= 0) throw Error(ErrorCode::Schema, "max_gap must be > 0");
  std::vector<Adjusted> s;
  s.reserve(scans.size());
  for (const TimedEvent& e : scans) {
    if (e.kind == EventKind::LabelImage) throw Error(ErrorCode::Schema, "label event " + e.id + " passed as scan");
    if (e.timestamp < 0) throw Error(ErrorCode::Schema, "scan " + e.id + " has a negative timestamp");
    s.push_back({&e, e.timestamp + policy.clock_offset});
  }
  std::vector<const TimedEvent*> l;
  l.reserve(labels.size());
  for (const TimedEvent& e : labels) {
    if (e.kind != EventKind::LabelImage) throw Error(ErrorCode::Schema, "scan event " + e.id + " passed as label");
    if (e.timestamp < 0) throw Error(ErrorCode::Schema, "label " + e.id + " has a negative timestamp");
    l.push_back(&e);
  }
  std::sort(s.begin(), s.end(), [](const Adjusted& a, const Adjusted& b) {
    return std::tie(a.t, a.ev->kind, a.ev->id) < std::tie(b.t, b.ev->kind, b.ev->id);
  });
  std::sort(l.begin(), l.end(), [](const TimedEvent* a, const TimedEvent* b) {
    return std::tie(a->timestamp, a->id) < std::tie(b->timestamp, b->id);
  });

  LinkResult result;
  std::vector<bool> used(s.size(), false);
  std::size_t cursor = 0;  // first scan not yet at or before the previous label
  std::optional<std::int64_t> prev;
  for (const TimedEvent* label : l) {
    // Skip scans at or before the previous label; they cannot join this window.
    while (cursor < s.size() && prev && s[cursor].t <= *prev) ++cursor;
    std::vector<std::size_t> d1, d2;
    std::size_t i = cursor;
    for (; i < s.size() && s[i].t < label->timestamp; ++i) {
      if (policy.max_gap && label->timestamp - s[i].t > *policy.max_gap) continue;
      (s[i].ev->kind == EventKind::ScanD1 ? d1 : d2).push_back(i);
    }
    if (d1.empty() && d2.empty()) throw Error(ErrorCode::EmptyWindow, "no scans precede " + describe(*label));
    if (d1.size() > 1 || d2.size() > 1) {
      throw Error(ErrorCode::ExtraScans, std::to_string(d1.size()) + " D1 and " + std::to_string(d2.size()) +
                                             " D2 scans precede " + describe(*label));
    }
    if (policy.require_both_directions && (d1.empty() || d2.empty())) {
      throw Error(ErrorCode::MissingDirection,
                  std::string(d1.empty() ? "D1" : "D2") + " scan missing before " + describe(*label));
    }
    ScanLink link;
    link.element_id = label->element_id;
    link.image_id = label->id;
    if (!d1.empty()) {
      link.scan_h = s[d1.front()].ev->id;
      used[d1.front()] = true;
    }
    if (!d2.empty()) {
      link.scan_v = s[d2.front()].ev->id;
      used[d2.front()] = true;
    }
    result.links.push_back(std::move(link));
    prev = label->timestamp;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!used[i]) result.unmatched.push_back(s[i].ev->id);
  }
  return result;
}

std::string links_to_json(const LinkResult& r) {
  using detail::json;
  json links = json::array();
  for (const ScanLink& k : r.links) {
    links.push_back({{"element_id", k.element_id},
                     {"scan_h", k.scan_h ? json(*k.scan_h) : json(nullptr)},
                     {"scan_v", k.scan_v ? json(*k.scan_v) : json(nullptr)},
                     {"image_id", k.image_id}});
  }
  json doc = {{"links", std::move(links)}, {"unmatched", r.unmatched}};
  return doc.dump(2) + "\n";
}

LinkResult links_from_json(std::string_view text) {
  using detail::json;
  constexpr std::string_view ctx = "links.json";
  json doc = detail::parse_json(text, ctx);
  LinkResult r;
  for (const auto& rec : detail::get_array(doc, "links", ctx)) {
    ScanLink k;
    k.element_id = detail::get_string(rec, "element_id", ctx);
    for (const char* key : {"scan_h", "scan_v"}) {
      const json& v = detail::field(rec, key, ctx);
      if (v.is_null()) continue;
      (std::string_view(key) == "scan_h" ? k.scan_h : k.scan_v) = detail::get_string(rec, key, ctx);
    }
    k.image_id = detail::get_string(rec, "image_id", ctx);
    r.links.push_back(std::move(k));
  }
  for (const auto& u : detail::get_array(doc, "unmatched", ctx)) {
    if (!u.is_string()) throw Error(ErrorCode::Schema, "links.json: unmatched entries must be strings");
    r.unmatched.push_back(u.get<std::string>());
  }
  return r;
}

}  // namespace rebar2bim
