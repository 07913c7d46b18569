#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pinlab/itembank.hpp"
#include "pinlab/response_log.hpp"
#include "pinlab/stats.hpp"

namespace pinlab {

enum class ItemClass { experiential, reactive, neutral };

std::string_view to_string(ItemClass c) noexcept;

struct SynthConfig {
    int n_models = 50;
    int n_experiential_items = 30;
    int n_reactive_items = 10;
    int n_neutral_items = 20;
    double loading_strength = 0.7;
    double noise_sd = 0.5;
    double hs_noise_sd = 0.4;
    ResponseScale scale{1, 5, {}};
    std::uint64_t seed = 7;
    /// Items are dealt round-robin into this many questionnaires.
    int n_questionnaires = 6;
    /// Loading of neutral-class items on a second, condition-independent model
    /// trait present in both conditions. 0 gives the plain generator.
    double persistent_strength = 0.0;

    void validate() const;
};

/// Reads a JSON object whose keys mirror the SynthConfig fields; scale as
/// {"min": .., "max": ..}. Missing keys keep their defaults.
SynthConfig load_synth_config(std::filesystem::path const& path);

struct GroundTruth {
    std::vector<std::string> model_slugs;
    Vector traits;      // t_m
    Vector persistent;  // u_m
    std::vector<std::string> item_ids;
    std::vector<ItemClass> item_classes;
    Vector loadings;  // a_i
};

struct Population {
    ItemBank bank;
    ResponseLog neutral;
    ResponseLog human_simulation;
    GroundTruth truth;
};

/// Linear-Gaussian responses with a planted trait in the neutral condition only.
Population generate_population(SynthConfig const& config);

/// `kind,id,class,value` rows: one per model (trait) then one per item (loading).
void write_ground_truth(GroundTruth const& truth, std::filesystem::path const& path);

/// Writes bank.txt, neutral.jsonl, human_simulation.jsonl, ground_truth.csv,
/// plus a toy embedding table (vectors.txt, freq.txt) covering the item vocabulary.
void write_population(Population const& pop, SynthConfig const& config, std::filesystem::path const& dir);

/// Word vectors for the synthetic vocabulary: each class's words scatter around
/// a class centroid. Lines are "word v1 ... vd"; frequencies "word count".
void write_toy_embeddings(std::filesystem::path const& vectors, std::filesystem::path const& freq,
                          std::uint64_t seed, int dim = 50);

}  // namespace pinlab
