// Writes the demo corpus, mock provider script and roster used by the
// README walkthrough and the end-to-end tests.
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "fixtures/feedback_fixture.hpp"
#include "peerlabel/hash.hpp"
#include "peerlabel/taxonomy.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a 200-comment demo corpus and a matching mock provider script"};
  std::string out_dir;
  std::size_t batch_size = 15;
  app.add_option("out_dir", out_dir, "Output directory")->required();
  app.add_option("--batch-size", batch_size, "Batch size the script is keyed for")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path dir = out_dir;
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> ids;
  const auto taxonomy = peerlabel::default_taxonomy();
  for (const auto& l : taxonomy.labels()) ids[l.text] = l.id;
  const auto comments = fixture::corpus_comments();
  peerlabel::write_file_atomic(dir / "corpus.csv", fixture::corpus_csv(comments));
  peerlabel::write_file_atomic(dir / "mock_script.json", fixture::mock_script(comments, batch_size, ids).dump(2) + "\n");
  peerlabel::write_file_atomic(dir / "roster.txt", "Arda\nSehar\n");
  std::cout << "wrote " << comments.size() << " comments to " << (dir / "corpus.csv").string() << "\n";
  return 0;
}
