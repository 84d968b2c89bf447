#include "ufda/datakit/records.hpp"

#include <fstream>
#include <sstream>

#include "ufda/core/error.hpp"

namespace ufda::datakit {

std::string to_string(Label label) { return label == Label::live ? "live" : "spoof"; }

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Label parse_label(const std::string& s) {
  if (s == "live") return Label::live;
  if (s == "spoof") return Label::spoof;
  throw FormatError("unknown label '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw FormatError("unknown split '" + s + "'");
}

std::filesystem::path Manifest::resolve(const SampleRecord& r) const {
  std::filesystem::path p(r.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<SampleRecord> Manifest::split(Split s) const {
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

void enforce_one_class(const std::vector<SampleRecord>& records) {
  for (const auto& r : records) {
    if (r.split == Split::train && r.label == Label::spoof) {
      throw InputError("one-class violation: training split contains spoof record " + r.image_path);
    }
  }
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kManifestHeader) throw FormatError(path.string() + ": expected header '" + kManifestHeader + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 8) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields, got " +
                        std::to_string(fields.size()));
    }
    SampleRecord r;
    r.image_path = fields[0];
    r.label = parse_label(fields[1]);
    try {
      r.face_box = {std::stoi(fields[2]), std::stoi(fields[3]), std::stoi(fields[4]), std::stoi(fields[5])};
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed face box");
    }
    r.split = parse_split(fields[6]);
    r.domain_tag = fields[7];
    m.records.push_back(std::move(r));
  }
  if (!header_seen) throw FormatError(path.string() + ": empty manifest");
  enforce_one_class(m.records);
  return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  enforce_one_class(records);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& r : records) {
    out << r.image_path << ',' << to_string(r.label) << ',' << r.face_box.x << ',' << r.face_box.y << ','
        << r.face_box.w << ',' << r.face_box.h << ',' << to_string(r.split) << ',' << r.domain_tag << '\n';
  }
  if (!out) throw InputError("failed writing manifest " + path.string());
}

}  // namespace ufda::datakit
