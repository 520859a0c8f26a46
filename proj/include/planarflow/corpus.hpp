#pragma once

#include <string>
#include <vector>

#include "planarflow/rng.hpp"
#include "planarflow/se3.hpp"

namespace planarflow::corpus {

// One prompt record. camera_logic holds a motion kind name, or a
// comma-separated list for composite trajectories (a schema extension; the
// single-kind form is the canonical one). `dynamic` is the extension flag
// marking the high-entropy subset used by decoupled training.
struct PromptEntry {
    std::string prompt;
    std::string camera_logic;
    std::string domain;
    std::string layout_type;  // Intra | Inter | Static
    bool dynamic = false;

    std::vector<se3::MotionKind> camera_kinds() const;
};

struct Corpus {
    std::vector<PromptEntry> entries;
    std::vector<std::string> warnings;  // keyword-detection mismatches

    std::vector<std::size_t> pool_indices(bool dynamic_only) const;
};

// Expected layout_type for a motion kind (Appendix-style taxonomy: push/orbit
// explore a volume, pull/move/pan transition across space, fixed is static).
std::string_view expected_layout(se3::MotionKind kind);

Corpus load_corpus(const std::string& path);
Corpus parse_corpus(const std::string& json_text);
void save_corpus(const Corpus& corpus, const std::string& path);
std::string corpus_to_json(const Corpus& corpus);

enum class Pool { full, dynamic };

// Uniform sampling without replacement (with_replacement opts out); batches
// are deterministic per rng state.
std::vector<PromptEntry> sample_batch(const Corpus& corpus, Pool pool, int n, Rng& rng,
                                      bool with_replacement = false);

// Emits n template-generated entries covering every camera kind and domain,
// with roughly one sixth flagged dynamic.
void generate_example_corpus(const std::string& path, int n, Rng& rng);
Corpus make_example_corpus(int n, Rng& rng);

} // namespace planarflow::corpus
