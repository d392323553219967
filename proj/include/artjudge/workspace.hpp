#pragma once

// A corpus directory loaded into memory.
//
//   artists.json artworks.json biographies.json pairs.json   collection documents
//   visual.ajem                                              one row per artwork embedding_key
//   poles.ajem generic_poles.ajem                            rows axis1+ .. axis5-
//   iconclass_codes.txt iconclass_edges.txt                  concept graph (edges optional)
//   codesets.jsonl                                           {"artwork_id", "codes"} per line
//   lexicon.json                                             optional; built-in cue lexicon otherwise

#include <artjudge/config.hpp>
#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/iconclass.hpp>
#include <artjudge/text.hpp>
#include <artjudge/tools.hpp>
#include <artjudge/wolfflin.hpp>

#include <filesystem>
#include <memory>
#include <optional>

namespace artjudge {

struct Workspace {
  std::filesystem::path root;
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const EmbeddingMatrix> visual;
  std::optional<EmbeddingMatrix> poles;
  std::optional<EmbeddingMatrix> generic_poles;
  std::shared_ptr<const ConceptGraph> graph;
  std::vector<CodeSet> code_sets;
  CueLexicon lexicon = default_lexicon();
  std::vector<DirectedPair> pairs;

  const EmbeddingMatrix& pole_store(bool generic) const {
    const auto& p = generic ? generic_poles : poles;
    if (!p) throw DataError(std::string(generic ? "generic_poles.ajem" : "poles.ajem") + " is missing from " + root.string());
    return *p;
  }
};

inline Workspace load_workspace(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError(root.string() + " is not a directory");
  Workspace w;
  w.root = root;
  auto bios = fs::exists(root / "biographies.json") ? read_collection<BiographyDoc>(root / "biographies.json", "biographies")
                                                    : std::vector<BiographyDoc>{};
  w.corpus = std::make_shared<const Corpus>(read_collection<ArtistProfile>(root / "artists.json", "artists"),
                                            read_collection<ArtworkRecord>(root / "artworks.json", "artworks"), std::move(bios));
  w.visual = std::make_shared<const EmbeddingMatrix>(read_store(root / "visual.ajem"));
  if (fs::exists(root / "poles.ajem")) w.poles = read_store(root / "poles.ajem");
  if (fs::exists(root / "generic_poles.ajem")) w.generic_poles = read_store(root / "generic_poles.ajem");
  if (fs::exists(root / "iconclass_codes.txt")) {
    const auto edges = root / "iconclass_edges.txt";
    w.graph = std::make_shared<const ConceptGraph>(read_graph(root / "iconclass_codes.txt", fs::exists(edges) ? edges : fs::path{}));
  } else {
    w.graph = std::make_shared<const ConceptGraph>();
  }
  if (fs::exists(root / "codesets.jsonl")) w.code_sets = read_code_sets(root / "codesets.jsonl");
  for (const auto& s : w.code_sets) validate_code_set(s, *w.graph);
  if (fs::exists(root / "lexicon.json")) w.lexicon = read_lexicon(root / "lexicon.json");
  if (fs::exists(root / "pairs.json")) w.pairs = read_pairs(root / "pairs.json");
  return w;
}

inline ValidationReport validate_workspace(const Workspace& w) { return validate_corpus(*w.corpus, *w.visual); }

/// Tool inputs for a run; signatures come from the Wolfflin or the generic pole prompts.
inline std::shared_ptr<const ToolEnvironment> make_environment(const Workspace& w, const RunConfig& cfg) {
  auto env = std::make_shared<ToolEnvironment>();
  env->corpus = w.corpus;
  env->visual = w.visual;
  env->graph = w.graph;
  env->codes = code_set_map(w.code_sets);
  env->lexicon = w.lexicon;
  env->encoder = HashingEncoder(cfg.encoder_dim);
  env->biography = {cfg.top_passages, cfg.mask_bio};
  env->decay = {cfg.lambda};
  env->delta_years = cfg.delta_years;
  env->visual_top_matches = cfg.visual_top_matches;
  const WolfflinManifold manifold(w.pole_store(cfg.generic_prompts));
  env->signatures = manifold.signatures(*w.corpus, *w.visual);
  return env;
}

inline ToolRegistry make_registry(const Workspace& w, const RunConfig& cfg) {
  auto r = make_registry(make_environment(w, cfg));
  for (auto t : cfg.disabled_tools) r.remove(t);
  return r;
}

}  // namespace artjudge
