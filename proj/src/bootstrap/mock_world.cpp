#include "jf/bootstrap/mock_world.hpp"

#include <algorithm>

#include "jf/core/error.hpp"

namespace jf::bootstrap {
namespace {

constexpr std::string_view kOpen = "[mock:";

const char* const kOpeners[] = {"The scene", "Looking closely, the image", "On inspection the picture",
                                "Overall the photo", "At first glance the frame"};
const char* const kQuality[] = {"", "shows almost nothing relevant and the claims drift",
                                "mentions a cue but misplaces the region", "covers some cues with vague boxes",
                                "covers most cues with minor omissions", "matches the annotated cues and regions"};

std::string image_of(const gateway::ChatRequest& req) {
  for (const auto& m : req.messages) {
    if (m.image_ref) {
      std::string s = *m.image_ref;
      std::replace(s.begin(), s.end(), ':', '_');
      std::replace(s.begin(), s.end(), ']', '_');
      std::replace(s.begin(), s.end(), ' ', '_');
      return s;
    }
  }
  return "none";
}

std::vector<int> keys_after(std::string_view text, std::string_view stem) {
  std::vector<int> out;
  for (std::size_t p = text.find(stem); p != std::string_view::npos; p = text.find(stem, p + 1)) {
    const std::size_t d = p + stem.size();
    if (d < text.size() && text[d] >= '1' && text[d] <= '9') {
      int v = text[d] - '0';
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
  }
  return out;
}

std::string answer_json(const std::vector<std::pair<std::string, std::string>>& kv) {
  Json j = Json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j.dump();
}

bool is_real(std::string_view prompt) {
  return prompt.find("<answer>Real</answer>") != std::string_view::npos;
}

}  // namespace

std::vector<MockMarker> find_markers(std::string_view text) {
  std::vector<MockMarker> out;
  for (std::size_t p = text.find(kOpen); p != std::string_view::npos; p = text.find(kOpen, p + 1)) {
    const std::size_t end = text.find(']', p);
    if (end == std::string_view::npos) break;
    const std::string body(text.substr(p + kOpen.size(), end - p - kOpen.size()));
    const auto c2 = body.rfind(':');
    const auto c1 = c2 == std::string::npos ? std::string::npos : body.rfind(':', c2 - 1);
    if (c1 == std::string::npos) continue;
    try {
      out.push_back({body.substr(0, c1), std::stoi(body.substr(c1 + 1, c2 - c1 - 1)),
                     std::stoi(body.substr(c2 + 1))});
    } catch (const std::exception&) {
    }
  }
  return out;
}

std::string mock_response_text(const MockMarker& m, bool real, int variant) {
  const int level = std::clamp(m.level, 1, 5);
  std::string think = std::string(kOpeners[variant % 5]) + " " + kQuality[level] + " [mock:" + m.image + ":" +
                      std::to_string(m.level) + ":" + std::to_string(m.revision) + "]";
  if (m.revision > 0) think += " revision " + std::to_string(m.revision);
  if (variant > 0) think += " wording " + std::to_string(variant);
  return "<think>" + think + ".</think>\n<answer>" + (real ? "Real" : "Fake") + "</answer>";
}

gateway::FunctionBackend::ChatFn mock_world_chat(MockWorldOptions options) {
  if (!options.evaluator) options.evaluator = [](const MockMarker& m) { return m.level; };
  if (!options.judge_rating) options.judge_rating = [](const MockMarker& m) { return m.level; };
  if (!options.verdict) options.verdict = [](const std::string&) { return std::string("fake"); };
  return [opt = std::move(options)](const gateway::ChatRequest& req) -> std::string {
    const std::string prompt = gateway::prompt_text(req);
    const std::string& purpose = req.purpose;
    if (purpose == "gold") {
      const bool real = prompt.find("ground-truth label is Real") != std::string::npos;
      return mock_response_text({image_of(req), 5, 0}, real);
    }
    if (purpose == "p_gen") {
      const bool real = is_real(prompt);
      std::vector<std::pair<std::string, std::string>> kv;
      for (int r = opt.levels - 1; r >= 1; --r) {
        kv.emplace_back("rating_" + std::to_string(r), mock_response_text({image_of(req), r, 0}, real));
      }
      return answer_json(kv);
    }
    if (purpose == "p_eval") {
      const auto pos = prompt.rfind("Generated Responses");
      for (const auto& m : find_markers(std::string_view(prompt).substr(pos == std::string::npos ? 0 : pos))) {
        if (m.level >= 5) continue;
        const int r = opt.evaluator(m);
        return Json{{"candidate_1", {{"rating", r}, {"rationale", "quality matches rating " + std::to_string(r)}}}}
            .dump();
      }
      return "no candidate found";
    }
    if (purpose == "p_ref") {
      const bool real = is_real(prompt);
      const auto pos = prompt.rfind("Feedback Data");
      std::vector<std::pair<std::string, std::string>> kv;
      for (const auto& m : find_markers(std::string_view(prompt).substr(pos == std::string::npos ? 0 : pos))) {
        if (m.level >= 5) continue;
        kv.emplace_back("rating " + std::to_string(m.level),
                        mock_response_text({m.image, m.level, m.revision + 1}, real));
      }
      return answer_json(kv);
    }
    if (purpose == "paraphrase") {
      const auto pos = prompt.rfind("Original response");
      const auto markers = find_markers(std::string_view(prompt).substr(pos == std::string::npos ? 0 : pos));
      if (markers.empty()) return "{}";
      const bool real = prompt.find("<answer>Real</answer>", pos) != std::string::npos;
      std::vector<std::pair<std::string, std::string>> kv;
      for (int i : keys_after(prompt.substr(prompt.rfind("Output only")), "\"paraphrase_")) {
        std::string text = mock_response_text(markers.front(), real, i);
        if (opt.break_paraphrase && opt.break_paraphrase(markers.front(), i)) {
          text = "plain text without tags " + std::to_string(i);
        }
        kv.emplace_back("paraphrase_" + std::to_string(i), text);
      }
      return answer_json(kv);
    }
    if (purpose == "pointwise_eval") {
      const auto markers = find_markers(prompt);
      if (markers.empty()) return "<score>3</score>";
      const int r = opt.judge_rating(markers.back());
      return "<reasoning>graded against the cues</reasoning>\n<score>" + std::to_string(r) + "</score>";
    }
    if (purpose == "pairwise_eval") {
      const auto pa = prompt.rfind("Response A:");
      const auto pb = prompt.rfind("Response B:");
      if (pa == std::string::npos || pb == std::string::npos) return "<answer>A</answer>";
      const auto ma = find_markers(std::string_view(prompt).substr(pa, pb - pa));
      const auto mb = find_markers(std::string_view(prompt).substr(pb));
      const int ra = ma.empty() ? 0 : opt.judge_rating(ma.front());
      const int rb = mb.empty() ? 0 : opt.judge_rating(mb.front());
      return std::string("<answer>") + (rb > ra ? "B" : "A") + "</answer>";
    }
    if (purpose == "detect") {
      const auto image = req.messages.back().image_ref.value_or("");
      return "<reasoning>checked the cues</reasoning>\n<answer>" + opt.verdict(image) + "</answer>";
    }
    if (purpose == "reason") {
      const auto image = req.messages.back().image_ref.value_or("");
      return mock_response_text({image_of(req), 5, 0}, opt.verdict(image) == "real");
    }
    throw TransportError("mock world: unknown purpose " + purpose, false);
  };
}

}  // namespace jf::bootstrap
