#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "utep/batch.hpp"

namespace utep {

struct MoonsParams {
  std::size_t n_per_domain = 500;
  double rotation_deg = 30.0;
  double translation_x = 0.0;
  double translation_y = 0.0;
  double noise = 0.1;
};

struct BlobsParams {
  std::size_t classes = 3;
  std::size_t dim = 2;
  std::vector<double> shift;  // target mean offset, length dim (empty = zero)
  double sigma = 1.0;
  double radius = 3.0;        // class means sit on a circle of this radius
  std::size_t n_per_domain = 500;
};

/// Source and target pools. Every sample carries its true label; `labeled`
/// says whether training may see it.
struct DomainPair {
  LabeledBatch source;
  LabeledBatch target;
  std::size_t classes = 2;
};

/// Standard two moons as source; target = the same moons rotated by
/// `rotation_deg` about their centre (0.5, 0.25), then translated.
DomainPair gen_two_moons_shift(const MoonsParams& params, std::uint64_t seed);

/// C isotropic Gaussian clusters; target means = source means + shift.
DomainPair gen_gaussian_blobs(const BlobsParams& params, std::uint64_t seed);

std::vector<std::vector<double>> blob_means(const BlobsParams& params);
/// Closed-form p_t(x) / p_s(x) for a blob pair with equal class priors.
double blob_density_ratio(const BlobsParams& params, std::span<const double> x);

enum class SplitMode { Uda, Ssda, Ssl };

struct SplitSpec {
  SplitMode mode = SplitMode::Uda;
  double label_fraction = 0.01;  // SSDA, used when shots == 0
  std::size_t shots = 0;         // SSDA k-shot or SSL k per class
};

/// Training view of a pair. In SSL the source pool is split into a labeled
/// part (domain 1) and an unlabeled part that plays the target role (domain 0).
struct DomainSplit {
  SplitMode mode = SplitMode::Uda;
  std::size_t classes = 2;
  LabeledBatch labeled_source;
  LabeledBatch labeled_target;
  LabeledBatch unlabeled_target;
};

DomainSplit make_splits(const DomainPair& pair, const SplitSpec& spec, std::uint64_t seed);

/// Resamples the smaller pool with replacement (keeping every original) until
/// both pools have the same size.
DomainPair balance_upsample(const DomainPair& pair, std::uint64_t seed);

/// Header `x0,...,x{d-1},y,domain,labeled`.
void write_dataset_csv(const std::filesystem::path& path, std::span<const LabeledBatch> parts);
void write_dataset_csv(const std::filesystem::path& path, const DomainPair& pair);
DomainPair read_dataset_csv(const std::filesystem::path& path);

std::string split_mode_name(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

}  // namespace utep
