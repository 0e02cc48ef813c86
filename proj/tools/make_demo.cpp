// Writes the demo workspaces: make_demo <dir> [--splits]

#include <iostream>

#include <CLI11.hpp>

#include "wmbench/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate demo workspaces"};
  std::string dir = "demo";
  bool splits = false;
  app.add_option("dir", dir, "Output directory");
  app.add_flag("--splits", splits, "Also write the large split-count manifest");
  CLI11_PARSE(app, argc, argv);
  namespace syn = wmbench::synthetic;
  const std::filesystem::path root(dir);
  syn::write_protect_workbook_scenario(root / "protect_workbook");
  syn::write_search_dataset(root / "search20");
  syn::write_suite_workspace(root / "suite");
  if (splits) syn::write_split_manifest(root / "splits", {syn::kReferenceSplitCounts, 2, 2});
  std::cout << "wrote " << root.string() << "\n";
  return 0;
}
