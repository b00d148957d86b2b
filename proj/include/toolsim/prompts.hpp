#pragma once

#include <map>
#include <string>

namespace toolsim {

// Editable prompt templates with ${placeholder} substitution. Built-in
// defaults match the files shipped under prompts/; load_dir overrides any
// template with the contents of <name>.txt.
class PromptCatalog {
 public:
  PromptCatalog();

  static PromptCatalog builtin();
  static PromptCatalog from_dir(const std::string& dir);

  void load_dir(const std::string& dir);

  const std::string& raw(const std::string& name) const;
  std::string render(const std::string& name, const std::map<std::string, std::string>& vars) const;

  const std::map<std::string, std::string>& all() const { return templates_; }

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace toolsim
