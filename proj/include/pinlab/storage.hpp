#pragma once

// On-disk layout of intermediate stage outputs.
//
// clean dir:
//   <q>__<c>.csv        post-deletion matrix; header "model,<item ids>"
//   <q>__<c>.raw.csv    parsed responses before deletion; empty field = missing
//   <q>__<c>.meta.json  dropped items/models and the viability flag
//   items.csv           item_id,questionnaire,questionnaire_name,text
//   oob_responses.csv
//
// solution dir (one set per questionnaire x condition):
//   <q>__<c>.pattern.csv, .factor_corr.csv, .scores.csv, .solution.json

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pinlab/cleaning.hpp"
#include "pinlab/factors.hpp"

namespace pinlab::storage {

std::string stem(std::string_view questionnaire_id, std::string_view condition_id);

struct CleanSummary {
    std::size_t matrices = 0;
    std::size_t viable = 0;
    std::size_t oob_rows = 0;
    std::vector<std::filesystem::path> files;
};

/// Build and write every questionnaire x condition matrix present in the log.
CleanSummary write_clean_outputs(std::filesystem::path const& dir, ResponseLog const& log, ItemBank const& bank);

void write_matrix(std::filesystem::path const& dir, ResponseMatrix const& m);
void write_raw_table(std::filesystem::path const& path, ResponseTable const& t);

/// All matrices of one condition, sorted by questionnaire id.
std::vector<ResponseMatrix> read_matrices(std::filesystem::path const& dir, std::string_view condition_id);

/// Pre-deletion responses of one condition merged across questionnaires.
ResponseTable read_raw_responses(std::filesystem::path const& dir, std::string_view condition_id);

struct ItemInfo {
    std::string item_id;
    std::string questionnaire_id;
    std::string questionnaire_name;
    std::string text;
};

void write_items(std::filesystem::path const& path, ItemBank const& bank);
std::vector<ItemInfo> read_items(std::filesystem::path const& path);

/// Returns the files written.
std::vector<std::filesystem::path> write_solution(std::filesystem::path const& dir, FactorSolution const& s);
FactorSolution read_solution(std::filesystem::path const& dir, std::string_view questionnaire_id,
                             std::string_view condition_id);
std::vector<FactorSolution> read_solutions(std::filesystem::path const& dir, std::string_view condition_id);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(std::filesystem::path const& path);

}  // namespace pinlab::storage
