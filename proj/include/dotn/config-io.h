// include/dotn/config-io.h

// Copyright 2026  The dotn Authors

// See ../../LICENSE for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#ifndef DOTN_CONFIG_IO_H_
#define DOTN_CONFIG_IO_H_

#include <initializer_list>
#include <string>

#include "dotn/datagen.h"
#include "dotn/trainer.h"
#include "json.hpp"

namespace dotn {

// JSON conversion of the configuration structs. The readers fill in
// defaults for absent keys, reject unknown keys, and report problems as
// config errors that name the field path, e.g. "corpus.snr_grid_db[2]".

using Json = nlohmann::ordered_json;

/// Small helper for path-aware reads from one JSON object.
class JsonReader {
 public:
  JsonReader(const nlohmann::json &obj, std::string path);

  /// Throws unless every key of the object is in `known`.
  void AllowOnly(std::initializer_list<const char *> known) const;
  bool Has(const char *key) const;
  const nlohmann::json &At(const char *key) const;
  std::string Field(const std::string &key) const;

  void Read(const char *key, int *out) const;
  void Read(const char *key, double *out) const;
  void Read(const char *key, bool *out) const;
  void Read(const char *key, uint64_t *out) const;
  void Read(const char *key, std::string *out) const;
  void Read(const char *key, std::vector<double> *out) const;
  /// Accepts an integer >= 1 or the string "never".
  void ReadPeriod(const char *key, int *out) const;

 private:
  const nlohmann::json &obj_;
  std::string path_;
};

Json NoiseSpecToJson(const NoiseSpec &spec);
/// Accepts a family name string (default parameters) or an object with
/// "family" and optional "band_low_hz", "band_high_hz", "modulation_hz".
NoiseSpec NoiseSpecFromJson(const nlohmann::json &j, const std::string &path);

Json SpectralConfigToJson(const SpectralConfig &c);
SpectralConfig SpectralConfigFromJson(const nlohmann::json &j,
                                      const std::string &path);

Json CorpusConfigToJson(const CorpusConfig &c);
CorpusConfig CorpusConfigFromJson(const nlohmann::json &j,
                                  const std::string &path);

Json AdamConfigToJson(const AdamConfig &c);
AdamConfig AdamConfigFromJson(const nlohmann::json &j, const std::string &path,
                              const AdamConfig &defaults);

Json TrainScheduleToJson(const TrainSchedule &s);
TrainSchedule TrainScheduleFromJson(const nlohmann::json &j,
                                    const std::string &path,
                                    const TrainSchedule &defaults = {});

}  // namespace dotn

#endif  // DOTN_CONFIG_IO_H_
