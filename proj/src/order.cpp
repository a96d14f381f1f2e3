#include "hwanno/order.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hwanno/error.hpp"

namespace hwanno::order {

std::string to_string(BoxId id) { return std::to_string(id.value); }

Rect rect_from_drag(double x0, double y0, double x1, double y1) {
  return {std::min(x0, x1), std::min(y0, y1), std::abs(x1 - x0), std::abs(y1 - y0)};
}

OrderedLayout::OrderedLayout(std::vector<BoxId> sequence) : sequence_(std::move(sequence)) {
  for (std::size_t k = 0; k < sequence_.size(); ++k) {
    Neighbors n;
    if (k > 0) n.prev = sequence_[k - 1];
    if (k + 1 < sequence_.size()) n.next = sequence_[k + 1];
    if (!links_.emplace(sequence_[k], n).second)
      throw Error(ErrorCode::ValidationError, "duplicate id " + to_string(sequence_[k]) + " in order");
  }
}

const Neighbors& OrderedLayout::neighbors(BoxId id) const {
  auto it = links_.find(id);
  if (it == links_.end()) throw Error(ErrorCode::UnknownId, "no box " + to_string(id) + " in order");
  return it->second;
}

std::optional<std::size_t> OrderedLayout::position(BoxId id) const {
  auto it = std::find(sequence_.begin(), sequence_.end(), id);
  if (it == sequence_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - sequence_.begin());
}

void OrderConfig::validate() const {
  if (!(line_overlap_ratio > 0 && line_overlap_ratio <= 1))
    throw Error(ErrorCode::InvalidArgument, "line_overlap_ratio must be in (0, 1]");
}

std::vector<std::vector<BoxId>> cluster_lines(const std::vector<BoxRecord>& boxes,
                                              const OrderConfig& cfg) {
  cfg.validate();
  std::vector<const BoxRecord*> by_top;
  by_top.reserve(boxes.size());
  for (const auto& b : boxes) by_top.push_back(&b);
  std::sort(by_top.begin(), by_top.end(), [](const BoxRecord* a, const BoxRecord* b) {
    if (a->rect.y != b->rect.y) return a->rect.y < b->rect.y;
    if (a->rect.x != b->rect.x) return a->rect.x < b->rect.x;
    return a->id < b->id;
  });

  struct Line {
    double top, bottom;
    double center_sum = 0;
    std::vector<const BoxRecord*> members;
  };
  std::vector<Line> lines;
  for (const BoxRecord* b : by_top) {
    const Rect& r = b->rect;
    if (!lines.empty()) {
      Line& cur = lines.back();
      const double overlap = std::min(cur.bottom, r.bottom()) - std::max(cur.top, r.y);
      const double needed = cfg.line_overlap_ratio * std::min(r.h, cur.bottom - cur.top);
      if (overlap > 0 && overlap >= needed) {
        cur.top = std::min(cur.top, r.y);
        cur.bottom = std::max(cur.bottom, r.bottom());
        cur.center_sum += r.center_y();
        cur.members.push_back(b);
        continue;
      }
    }
    lines.push_back({r.y, r.bottom(), r.center_y(), {b}});
  }

  // Stable sort keeps creation order (ascending top) for equal mean centres.
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.center_sum / a.members.size() < b.center_sum / b.members.size();
  });

  std::vector<std::vector<BoxId>> out;
  out.reserve(lines.size());
  for (auto& line : lines) {
    std::sort(line.members.begin(), line.members.end(),
              [](const BoxRecord* a, const BoxRecord* b) {
                if (a->rect.x != b->rect.x) return a->rect.x < b->rect.x;
                if (a->rect.y != b->rect.y) return a->rect.y < b->rect.y;
                return a->id < b->id;
              });
    std::vector<BoxId> ids;
    for (const auto* m : line.members) ids.push_back(m->id);
    out.push_back(std::move(ids));
  }
  return out;
}

OrderedLayout serialize_boxes(const std::vector<BoxRecord>& boxes, const OrderConfig& cfg) {
  std::vector<BoxId> seq;
  for (const auto& line : cluster_lines(boxes, cfg)) seq.insert(seq.end(), line.begin(), line.end());
  return OrderedLayout(std::move(seq));
}

OrderedLayout swap(const OrderedLayout& layout, BoxId a, BoxId b) {
  const auto pa = layout.position(a);
  const auto pb = layout.position(b);
  if (!pa) throw Error(ErrorCode::UnknownId, "no box " + to_string(a) + " in order");
  if (!pb) throw Error(ErrorCode::UnknownId, "no box " + to_string(b) + " in order");
  std::vector<BoxId> seq = layout.sequence();
  std::swap(seq[*pa], seq[*pb]);
  return OrderedLayout(std::move(seq));
}

Page::Page(double width, double height) : width_(width), height_(height) {
  if (!(width > 0 && height > 0))
    throw Error(ErrorCode::InvalidArgument, "page dimensions must be positive");
}

Page Page::restore(double width, double height, std::vector<BoxRecord> boxes,
                   std::vector<BoxId> sequence) {
  Page page(width, height);
  std::set<BoxId> ids;
  for (const auto& b : boxes) {
    if (!ids.insert(b.id).second)
      throw Error(ErrorCode::ValidationError, "duplicate box id " + to_string(b.id));
    if (!(b.rect.w > 0 && b.rect.h > 0))
      throw Error(ErrorCode::ValidationError, "box " + to_string(b.id) + " has no area");
    if (b.score && !(*b.score >= 0 && *b.score <= 1))
      throw Error(ErrorCode::ValidationError, "box " + to_string(b.id) + " score outside [0, 1]");
    page.next_id_ = std::max(page.next_id_, b.id.value + 1);
  }
  std::set<BoxId> seq_ids(sequence.begin(), sequence.end());
  if (seq_ids.size() != sequence.size())
    throw Error(ErrorCode::ValidationError, "order repeats a box id");
  if (seq_ids != ids) {
    std::vector<std::string> details;
    for (auto id : seq_ids)
      if (!ids.count(id)) details.push_back("order references missing box " + to_string(id));
    for (auto id : ids)
      if (!seq_ids.count(id)) details.push_back("box " + to_string(id) + " missing from order");
    throw Error(ErrorCode::ValidationError, "order is not a permutation of the box ids", details);
  }
  page.boxes_ = std::move(boxes);
  page.layout_ = OrderedLayout(std::move(sequence));
  return page;
}

bool Page::contains(BoxId id) const {
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const BoxRecord& b) { return b.id == id; });
}

const BoxRecord& Page::box(BoxId id) const {
  for (const auto& b : boxes_)
    if (b.id == id) return b;
  throw Error(ErrorCode::UnknownId, "no box " + to_string(id));
}

BoxRecord& Page::mutable_box(BoxId id) {
  for (auto& b : boxes_)
    if (b.id == id) return b;
  throw Error(ErrorCode::UnknownId, "no box " + to_string(id));
}

Rect Page::clip(const Rect& rect) const {
  // Inside rectangles are kept bit-exact; recomputing w as right - x would not be.
  if (rect.x >= 0 && rect.y >= 0 && rect.w > 0 && rect.h > 0 && rect.right() <= width_ &&
      rect.bottom() <= height_)
    return rect;
  const double x0 = std::clamp(rect.x, 0.0, width_);
  const double y0 = std::clamp(rect.y, 0.0, height_);
  const double x1 = std::clamp(rect.right(), 0.0, width_);
  const double y1 = std::clamp(rect.bottom(), 0.0, height_);
  if (!(x1 > x0 && y1 > y0)) throw Error(ErrorCode::ZeroArea, "rectangle has no area on the page");
  return {x0, y0, x1 - x0, y1 - y0};
}

const BoxRecord& Page::add_box(const Rect& rect, std::optional<double> score, double angle) {
  const Rect r = clip(rect);
  boxes_.push_back({BoxId{next_id_++}, r, angle, score, std::nullopt, false});
  std::vector<BoxId> seq = layout_.sequence();
  seq.push_back(boxes_.back().id);
  layout_ = OrderedLayout(std::move(seq));
  layout_stale_ = true;
  return boxes_.back();
}

void Page::delete_box(BoxId id) {
  auto it = std::find_if(boxes_.begin(), boxes_.end(), [&](const BoxRecord& b) { return b.id == id; });
  if (it == boxes_.end()) throw Error(ErrorCode::UnknownId, "no box " + to_string(id));
  boxes_.erase(it);
  std::vector<BoxId> seq = layout_.sequence();
  seq.erase(std::remove(seq.begin(), seq.end(), id), seq.end());
  layout_ = OrderedLayout(std::move(seq));
}

const BoxRecord& Page::update_box(BoxId id, const Rect& rect) {
  BoxRecord& b = mutable_box(id);
  b.rect = clip(rect);
  b.text.reset();
  b.text_edited = false;
  return b;
}

void Page::set_text(BoxId id, std::string text, bool edited) {
  BoxRecord& b = mutable_box(id);
  b.text = std::move(text);
  b.text_edited = edited;
}

const OrderedLayout& Page::serialize(const OrderConfig& cfg) {
  layout_ = serialize_boxes(boxes_, cfg);
  layout_stale_ = false;
  return layout_;
}

void Page::swap(BoxId a, BoxId b) { layout_ = order::swap(layout_, a, b); }

}  // namespace hwanno::order
