#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sz3d/classifier.hpp"
#include "sz3d/evaluation.hpp"

namespace sz3d {

/// Container layout (little-endian):
///   magic "SZ3DMODL" | u32 version | u64 payload bytes | payload | u32 crc32
/// payload = u32 record count, then per record
///   u8 type (0 text, 1 array) | u16 name length | name
///   text:  u64 length | bytes
///   array: u32 rank | u64 extent x rank | f64 x product(extents)
/// The checksum is zlib crc32 over every byte before it.
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ArrayRecord {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

struct Record {
  std::string name;
  std::variant<std::string, ArrayRecord> value;
};

std::vector<std::uint8_t> encode_records(const std::vector<Record>& records,
                                         std::uint32_t version = kModelFormatVersion);
std::vector<Record> decode_records(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

void save_svm_model(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_svm_model(const std::filesystem::path& path);

void save_pca_model(const std::filesystem::path& path, const PcaModel& model);
PcaModel load_pca_model(const std::filesystem::path& path);

void save_classifier(const std::filesystem::path& path, const Classifier& model);
Classifier load_classifier(const std::filesystem::path& path);

void save_ensemble(const std::filesystem::path& path, const Ensemble& ensemble);
Ensemble load_ensemble(const std::filesystem::path& path);

/// Either kind of saved predictor, as found in the file.
using SavedPredictor = std::variant<Classifier, Ensemble>;
SavedPredictor load_predictor(const std::filesystem::path& path);

}  // namespace sz3d
