#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hwanno::order {

struct BoxId {
  std::uint64_t value = 0;
  auto operator<=>(const BoxId&) const = default;
};

std::string to_string(BoxId id);

struct Rect {
  double x = 0, y = 0, w = 0, h = 0;
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double center_x() const { return x + w / 2; }
  double center_y() const { return y + h / 2; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Normalised rectangle spanned by two drag endpoints.
Rect rect_from_drag(double x0, double y0, double x1, double y1);

struct BoxRecord {
  BoxId id;
  Rect rect;
  double angle = 0;
  std::optional<double> score;      // absent for user-drawn boxes
  std::optional<std::string> text;  // absent until recognised or typed
  bool text_edited = false;
  friend bool operator==(const BoxRecord&, const BoxRecord&) = default;
};

struct Neighbors {
  std::optional<BoxId> prev;
  std::optional<BoxId> next;
  friend bool operator==(const Neighbors&, const Neighbors&) = default;
};

// Reading order. Links are always rebuilt from the sequence.
class OrderedLayout {
 public:
  OrderedLayout() = default;
  explicit OrderedLayout(std::vector<BoxId> sequence);

  const std::vector<BoxId>& sequence() const { return sequence_; }
  const Neighbors& neighbors(BoxId id) const;  // throws UnknownId
  std::optional<std::size_t> position(BoxId id) const;
  bool empty() const { return sequence_.empty(); }
  std::size_t size() const { return sequence_.size(); }

  friend bool operator==(const OrderedLayout& a, const OrderedLayout& b) {
    return a.sequence_ == b.sequence_;
  }

 private:
  std::vector<BoxId> sequence_;
  std::map<BoxId, Neighbors> links_;
};

struct OrderConfig {
  double line_overlap_ratio = 0.5;
  void validate() const;
};

// Lines top to bottom, each listing its boxes left to right.
std::vector<std::vector<BoxId>> cluster_lines(const std::vector<BoxRecord>& boxes,
                                              const OrderConfig& cfg = {});

OrderedLayout serialize_boxes(const std::vector<BoxRecord>& boxes, const OrderConfig& cfg = {});

OrderedLayout swap(const OrderedLayout& layout, BoxId a, BoxId b);

// The editable set of boxes on one page together with its reading order.
// Single writer; the service layer serialises access.
class Page {
 public:
  Page() = default;
  Page(double width, double height);
  // Rebuilds a page from persisted parts. Throws ValidationError unless the
  // layout is a permutation of the box ids and every box is well formed.
  static Page restore(double width, double height, std::vector<BoxRecord> boxes,
                      std::vector<BoxId> sequence);

  double width() const { return width_; }
  double height() const { return height_; }
  const std::vector<BoxRecord>& boxes() const { return boxes_; }
  const OrderedLayout& layout() const { return layout_; }
  bool layout_stale() const { return layout_stale_; }
  const BoxRecord& box(BoxId id) const;  // throws UnknownId
  bool contains(BoxId id) const;

  // New boxes are appended to the end of the sequence and mark the layout
  // stale. The rectangle is clipped to the page; throws ZeroArea.
  const BoxRecord& add_box(const Rect& rect, std::optional<double> score = std::nullopt,
                           double angle = 0);
  void delete_box(BoxId id);
  // Keeps the order position; any transcript is dropped because it no longer
  // describes the region.
  const BoxRecord& update_box(BoxId id, const Rect& rect);
  void set_text(BoxId id, std::string text, bool edited);

  const OrderedLayout& serialize(const OrderConfig& cfg = {});
  void swap(BoxId a, BoxId b);

  std::vector<std::vector<BoxId>> lines(const OrderConfig& cfg = {}) const {
    return cluster_lines(boxes_, cfg);
  }

  friend bool operator==(const Page& a, const Page& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.boxes_ == b.boxes_ &&
           a.layout_ == b.layout_;
  }

 private:
  BoxRecord& mutable_box(BoxId id);
  Rect clip(const Rect& rect) const;

  double width_ = 0;
  double height_ = 0;
  std::vector<BoxRecord> boxes_;
  OrderedLayout layout_;
  bool layout_stale_ = false;
  std::uint64_t next_id_ = 1;
};

}  // namespace hwanno::order
