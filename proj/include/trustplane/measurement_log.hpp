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

#pragma once

#include <string>
#include <vector>

#include "trustplane/bytes.hpp"

namespace trustplane::measurement {

inline constexpr int kPcrCount = 24;
inline constexpr int kDefaultMeasurementPcr = 10;

/// One measured object. template_digest commits to (path, file_digest) under
/// a length-prefixed encoding, so path/digest boundaries are unambiguous.
struct MeasurementEntry {
  uint32_t index = 0;
  int pcr_index = kDefaultMeasurementPcr;
  std::string path;
  Digest32 file_digest{};
  Digest32 template_digest{};
};

/// H(u32be(len(path)) || path || file_digest)
Digest32 template_digest_for(const std::string& path, const Digest32& file_digest);

/// Bank of 24 digest registers, all-zero at reset. Register values change
/// only through extend().
class PcrBank {
 public:
  PcrBank();

  // register' = H(register || digest). Returns false when pcr_index is out
  // of range, leaving the bank untouched.
  bool extend(int pcr_index, const Digest32& digest);

  const Digest32& value(int pcr_index) const;
  bool in_range(int pcr_index) const;

 private:
  std::vector<Digest32> registers_;
};

/// Append-only list of measurements. Entries are never mutated or removed.
class MeasurementList {
 public:
  const std::vector<MeasurementEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Appends a fully-formed entry; index is assigned from the current length.
  // Rejects paths that are empty or contain line terminators (the serialized
  // form is line oriented).
  bool append(int pcr_index, const std::string& path, const Digest32& file_digest);

  bool contains_path(const std::string& path) const;

  // Line-oriented wire form, one entry per line:
  //   <index> <pcr_index> <template_digest_hex> <file_digest_hex> <path>
  std::string serialize() const;

  // Parses and validates: indices must be contiguous from zero and each
  // stored template digest must match the recomputation from (path,
  // file_digest). A tampered line fails the parse.
  static std::optional<MeasurementList> parse(const std::string& text);

 private:
  std::vector<MeasurementEntry> entries_;
};

/// Measures `content` as `path`: appends an entry with file_digest =
/// H(content) and extends `pcr_index` with the template digest. Returns false
/// (and leaves both untouched) on a bad pcr index or path.
bool measure(MeasurementList& list, PcrBank& bank, int pcr_index, const std::string& path,
             ByteView content);

/// Folds the recomputed template digests over the all-zero register, in list
/// order. For an untampered list this equals the live PCR value produced by
/// the same sequence of measure() calls.
Digest32 replay(const MeasurementList& list);

}  // namespace trustplane::measurement
