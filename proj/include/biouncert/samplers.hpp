#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "biouncert/label_volume.hpp"
#include "biouncert/phantom.hpp"

namespace biouncert::phantom {

/// Forward models standing in for the four Bayesian segmentation networks.
enum class SamplerKind { McDropout, FullyBayesian, Probabilistic, Hierarchical };

std::string_view to_string(SamplerKind kind) noexcept;
/// Display name used in report rows, e.g. "MC Dropout".
std::string_view display_name(SamplerKind kind) noexcept;
/// Accepts "mc-dropout", "fully-bayesian", "probabilistic", "hierarchical".
SamplerKind parse_sampler_kind(std::string_view text);

struct SamplerConfig {
    SamplerKind kind = SamplerKind::McDropout;
    int n_samples = 10;
    std::uint64_t seed = 0;

    double dropout_rate = 0.2;      // McDropout: flip probability inside the boundary band
    double boundary_band_vox = 2.0; // McDropout band half-width; FullyBayesian noise band
    double noise_std = 0.1;         // FullyBayesian: std of eps in g = mu + eps * sigma
    double logit_sharpness = 0.1;   // FullyBayesian: mu per voxel of signed distance
    int latent_dim = 12;            // Probabilistic / Hierarchical
    double latent_std = 1.0;        // std of each latent coordinate
    int n_scales = 3;               // Hierarchical

    void validate() const;
};

/// Draws sample `sample_index` of a stack. Each sample owns the RNG stream
/// derived from (cfg.seed, sample_index), so samples can be drawn in any order.
LabelVolume draw_sample(const Phantom& phantom, const SamplerConfig& cfg, int sample_index);

/// All cfg.n_samples samples, in index order.
SampleStack sample_stack(const Phantom& phantom, const SamplerConfig& cfg, std::string subject_id = "subject");

} // namespace biouncert::phantom
