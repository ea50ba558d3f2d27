#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jf/gateway/mock.hpp"

namespace jf::bootstrap {

// Responses written by the mock carry a marker "[mock:<image>:<level>:<rev>]"
// so that later calls (evaluation, refinement, paraphrase, judging) can tell
// which level and revision they are looking at. Gold responses use level 5.
struct MockMarker {
  std::string image;
  int level = 0;
  int revision = 0;
};

std::vector<MockMarker> find_markers(std::string_view text);

struct MockWorldOptions {
  int levels = 5;
  // Rating the scripted evaluator reports for a candidate. Defaults to the
  // intended level.
  std::function<int(const MockMarker&)> evaluator;
  // Paraphrase indices (1-based) that come back with their tags stripped.
  std::function<bool(const MockMarker&, int index)> break_paraphrase;
  // Pointwise judge rating and pairwise preference for the eval prompts.
  // Defaults to a perfect judge: rating = level, preferring the higher level.
  std::function<int(const MockMarker&)> judge_rating;
  // Verdict ("real", "fake" or "edited") for detect and reason requests, by image ref.
  std::function<std::string(const std::string&)> verdict;
};

// Chat function answering every prompt purpose used by the pipeline.
gateway::FunctionBackend::ChatFn mock_world_chat(MockWorldOptions options = {});

std::string mock_response_text(const MockMarker& m, bool real, int variant = 0);

}  // namespace jf::bootstrap
