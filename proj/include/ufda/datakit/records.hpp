#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ufda::datakit {

enum class Label { live, spoof };
enum class Split { train, dev, test };

std::string to_string(Label label);
std::string to_string(Split split);
Label parse_label(const std::string& s);
Split parse_split(const std::string& s);

struct FaceBox {
  int x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

struct SampleRecord {
  std::string image_path;  // relative to the manifest's directory unless absolute
  Label label = Label::live;
  FaceBox face_box;
  Split split = Split::train;
  std::string domain_tag;
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Ordered list of records plus the directory relative paths resolve against.
struct Manifest {
  std::filesystem::path base_dir;
  std::vector<SampleRecord> records;

  std::filesystem::path resolve(const SampleRecord& r) const;
  std::vector<SampleRecord> split(Split s) const;
};

inline constexpr const char* kManifestHeader = "path,label,x,y,w,h,split,domain_tag";

// Raises InputError if any train record is labelled spoof.
void enforce_one_class(const std::vector<SampleRecord>& records);

// Reads a manifest file: header line, then one comma-separated record per line.
// Lines starting with '#' are comments. Enforces the one-class train split.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

}  // namespace ufda::datakit
