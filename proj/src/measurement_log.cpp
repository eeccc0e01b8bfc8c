/*
 * Copyright 2026 The trustplane authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "trustplane/measurement_log.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "trustplane/digest.hpp"

namespace trustplane::measurement {

namespace {

bool valid_path(const std::string& path) {
  if (path.empty()) return false;
  return path.find('\n') == std::string::npos && path.find('\r') == std::string::npos;
}

std::optional<uint64_t> parse_uint(std::string_view field) {
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

}  // namespace

Digest32 template_digest_for(const std::string& path, const Digest32& file_digest) {
  Bytes encoded;
  append_u32be(encoded, static_cast<uint32_t>(path.size()));
  append(encoded, view(path));
  append(encoded, view(file_digest));
  return sha256(view(encoded));
}

PcrBank::PcrBank() : registers_(kPcrCount, Digest32{}) {}

bool PcrBank::in_range(int pcr_index) const {
  return pcr_index >= 0 && pcr_index < kPcrCount;
}

bool PcrBank::extend(int pcr_index, const Digest32& digest) {
  if (!in_range(pcr_index)) return false;
  registers_[pcr_index] = sha256_concat(view(registers_[pcr_index]), view(digest));
  return true;
}

const Digest32& PcrBank::value(int pcr_index) const {
  if (!in_range(pcr_index)) throw std::out_of_range("pcr index");
  return registers_[pcr_index];
}

bool MeasurementList::append(int pcr_index, const std::string& path,
                             const Digest32& file_digest) {
  if (!valid_path(path)) return false;
  MeasurementEntry e;
  e.index = static_cast<uint32_t>(entries_.size());
  e.pcr_index = pcr_index;
  e.path = path;
  e.file_digest = file_digest;
  e.template_digest = template_digest_for(path, file_digest);
  entries_.push_back(std::move(e));
  return true;
}

bool MeasurementList::contains_path(const std::string& path) const {
  for (const auto& e : entries_)
    if (e.path == path) return true;
  return false;
}

std::string MeasurementList::serialize() const {
  std::ostringstream out;
  for (const auto& e : entries_) {
    out << e.index << ' ' << e.pcr_index << ' ' << to_hex(view(e.template_digest)) << ' '
        << to_hex(view(e.file_digest)) << ' ' << e.path << '\n';
  }
  return out.str();
}

std::optional<MeasurementList> MeasurementList::parse(const std::string& text) {
  MeasurementList list;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) return std::nullopt;  // unterminated line
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) return std::nullopt;

    // First four space-separated fields, then the remainder is the path
    // (paths may contain spaces).
    std::array<std::string_view, 4> fields;
    size_t cursor = 0;
    for (auto& field : fields) {
      size_t sep = line.find(' ', cursor);
      if (sep == std::string_view::npos) return std::nullopt;
      field = line.substr(cursor, sep - cursor);
      cursor = sep + 1;
    }
    std::string path(line.substr(cursor));

    auto index = parse_uint(fields[0]);
    auto pcr = parse_uint(fields[1]);
    auto tmpl = array_from_hex<32>(std::string(fields[2]));
    auto file = array_from_hex<32>(std::string(fields[3]));
    if (!index || !pcr || !tmpl || !file || !valid_path(path)) return std::nullopt;
    if (*index != list.entries_.size()) return std::nullopt;
    if (*pcr >= kPcrCount) return std::nullopt;
    if (*tmpl != template_digest_for(path, *file)) return std::nullopt;

    MeasurementEntry e;
    e.index = static_cast<uint32_t>(*index);
    e.pcr_index = static_cast<int>(*pcr);
    e.path = std::move(path);
    e.file_digest = *file;
    e.template_digest = *tmpl;
    list.entries_.push_back(std::move(e));
  }
  return list;
}

bool measure(MeasurementList& list, PcrBank& bank, int pcr_index, const std::string& path,
             ByteView content) {
  if (!bank.in_range(pcr_index)) return false;
  Digest32 file_digest = sha256(content);
  if (!list.append(pcr_index, path, file_digest)) return false;
  bank.extend(pcr_index, list.entries().back().template_digest);
  return true;
}

Digest32 replay(const MeasurementList& list) {
  Digest32 acc{};  // all-zero initial register
  for (const auto& e : list.entries())
    acc = sha256_concat(view(acc), view(template_digest_for(e.path, e.file_digest)));
  return acc;
}

}  // namespace trustplane::measurement
