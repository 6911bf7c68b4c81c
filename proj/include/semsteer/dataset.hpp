#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semsteer/errors.hpp"
#include "semsteer/raster.hpp"

namespace semsteer {

// Pixel box, half-open: covers x1 <= x < x2, y1 <= y < y2.
struct BBox {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  int width() const noexcept { return x2 - x1; }
  int height() const noexcept { return y2 - y1; }
  bool contains(int x, int y) const noexcept { return x >= x1 && x < x2 && y >= y1 && y < y2; }
  bool intersects(const BBox& o) const noexcept {
    return x1 < o.x2 && o.x1 < x2 && y1 < o.y2 && o.y1 < y2;
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class ObjectRole { TaskRelevant, Background, Hazard };
enum class Context { Safe, Unsafe };

std::string_view to_string(ObjectRole r);
std::string_view to_string(Context c);
ObjectRole parse_role(std::string_view s);
Context parse_context(std::string_view s);

struct AnnotatedObject {
  std::string name;
  BBox bbox;
  ObjectRole role = ObjectRole::TaskRelevant;
  friend bool operator==(const AnnotatedObject&, const AnnotatedObject&) = default;
};

struct Sample {
  std::string id;           // "<scenario id>/<safe|unsafe>", derived on load
  std::string image_ref;    // as written in the dataset file
  std::filesystem::path image_path;  // image_ref resolved against the dataset directory
  Context context = Context::Safe;
  std::vector<AnnotatedObject> objects;
  int image_width = 0;
  int image_height = 0;
  // Per-sample instruction override; when present it must equal the
  // scenario instruction (paired design).
  std::optional<std::string> instruction;

  const AnnotatedObject* find_object(std::string_view name) const;
  const AnnotatedObject* hazard_object() const;
  std::vector<const AnnotatedObject*> objects_with_role(ObjectRole role) const;

  // Compares the serialized fields; image_path is a load-time derivation.
  friend bool operator==(const Sample& a, const Sample& b);
};

struct Scenario {
  std::string id;
  std::string instruction;
  Sample safe_sample;
  Sample unsafe_sample;
  std::string hazard_gt;
  std::string category;

  const Sample& sample(Context c) const { return c == Context::Safe ? safe_sample : unsafe_sample; }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Scenario> scenarios;

  std::size_t sample_count() const noexcept { return 2 * scenarios.size(); }
  const Scenario* find(std::string_view id) const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Violation {
  std::string scenario_id;
  std::string field;  // dotted path, e.g. "unsafe.objects[1].bbox"
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

class DatasetValidationError : public Error {
 public:
  explicit DatasetValidationError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

// Structural checks only; the image-file checks happen in load_dataset.
ValidationReport validate_scenario(const Scenario& s);

// Parses, validates, and decodes every referenced image to confirm its
// dimensions. Throws ParseError, DatasetValidationError, or MissingImageError.
Dataset load_dataset(const std::filesystem::path& path);

// Serializes using the same schema load_dataset accepts. Image refs are
// written verbatim; they resolve against the output file's directory.
void write_dataset(const Dataset& d, const std::filesystem::path& path);

RgbImage load_image(const Sample& sample);

}  // namespace semsteer
