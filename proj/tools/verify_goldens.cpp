// Regenerates the pinned corpus pipeline and byte-diffs every output
// against the checked-in goldens. Usage:
//   verify_goldens <corpus_dir> <memfp_binary>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return in ? s.str() : std::string();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <corpus_dir> <memfp_binary>\n", argv[0]);
    return 2;
  }
  const fs::path corpus = argv[1];
  const fs::path golden = corpus / "golden";
  const fs::path config = corpus / "config.json";
  if (!fs::is_directory(golden) || !fs::is_regular_file(config)) {
    std::fprintf(stderr, "corpus layout not found under %s\n", corpus.string().c_str());
    return 2;
  }

  const fs::path work = fs::temp_directory_path() / "memfp_goldens";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string cmd = std::string("'") + argv[2] + "' pipeline --config '" +
                          config.string() + "' --out-dir '" + work.string() + "' > '" +
                          (work / "run.stdout").string() + "' 2>&1";
  if (std::system(cmd.c_str()) != 0) {
    std::fprintf(stderr, "pipeline run failed; see %s\n", (work / "run.stdout").string().c_str());
    return 1;
  }

  int failures = 0;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(golden))
    if (entry.is_regular_file()) files.push_back(entry.path().filename());
  std::sort(files.begin(), files.end());
  for (const auto& name : files) {
    const std::string want = slurp(golden / name);
    const std::string got = slurp(work / name);
    const bool ok = !want.empty() && want == got;
    std::printf("%s  %s\n", ok ? "PASS" : "FAIL", name.string().c_str());
    failures += !ok;
  }
  if (failures) {
    std::printf("%d golden file(s) differ; regenerated copies left in %s\n", failures,
                work.string().c_str());
    return 1;
  }
  fs::remove_all(work);
  std::printf("all %zu goldens reproduced byte-exactly\n", files.size());
  return 0;
}
