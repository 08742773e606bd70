#pragma once

#include "unibom/classify.hpp"
#include "unibom/vulndb.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace unibom::cli {

enum class Command { Binwalk, GenerateSbom, GenerateCcppReport, GetHistory, ClassifyCwe, Compare, IngestFeed,
                     Serve };

struct CliInvocation {
    Command command = Command::Serve;
    std::vector<std::string> args;
    std::map<std::string, std::string> flags;  // boolean flags map to ""

    bool has(const std::string& flag) const { return flags.contains(flag); }
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode { kOk = 0, kUsage = 1, kBadInput = 2, kInternal = 3 };

/// argv without the program name. Throws UsageError.
CliInvocation parse_args(const std::vector<std::string>& argv);

int run(const CliInvocation& inv, std::ostream& out, std::ostream& err);

/// parse_args + run, mapping usage errors to exit 1.
int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

std::string usage();

/// $UNIBOM_HOME, else ~/.unibom.
std::filesystem::path unibom_home();

/// --feed, then $UNIBOM_FEED, then the installed snapshot, then the bundled feed.
vulndb::VulnDatabase load_feed(const std::optional<std::string>& feed_flag);

/// The external classifier when UNIBOM_CLASSIFIER_URL is set, else the rule engine.
std::shared_ptr<classify::ClassifierPort> make_classifier();

}  // namespace unibom::cli
