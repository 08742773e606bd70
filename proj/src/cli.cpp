#include "unibom/cli.hpp"

#include "unibom/analysis.hpp"
#include "unibom/api.hpp"
#include "unibom/bundled.hpp"
#include "unibom/firmware.hpp"
#include "unibom/fsutil.hpp"
#include "unibom/scanners.hpp"

#include <cstdlib>
#include <iostream>
#include <set>

namespace unibom::cli {

namespace fs = std::filesystem;

namespace {

struct CommandSpec {
    std::string_view name;
    Command command;
    std::size_t arity;
};

constexpr CommandSpec kCommands[] = {
    {"binwalk", Command::Binwalk, 2},
    {"generateSbom", Command::GenerateSbom, 2},
    {"generateCCPPReport", Command::GenerateCcppReport, 2},
    {"getHistory", Command::GetHistory, 1},
    {"classifyCwe", Command::ClassifyCwe, 1},
    {"compare", Command::Compare, 2},
    {"ingestFeed", Command::IngestFeed, 1},
    {"serve", Command::Serve, 0},
};

const std::set<std::string, std::less<>> kBoolFlags = {"--json", "--match-unversioned", "-Me"};
const std::set<std::string, std::less<>> kValueFlags = {"--feed", "--out", "--whatif", "--store",
                                                        "--host", "--port", "--ui-dir", "--description"};

const CommandSpec* command_named(std::string_view token) {
    if (token.starts_with("--")) token.remove_prefix(2);
    else if (token.starts_with("-")) token.remove_prefix(1);
    else return nullptr;
    for (const auto& c : kCommands) {
        if (c.name == token) return &c;
    }
    return nullptr;
}

std::optional<std::string> flag(const CliInvocation& inv, const std::string& name) {
    auto it = inv.flags.find(name);
    if (it == inv.flags.end()) return std::nullopt;
    return it->second;
}

analysis::AnalysisOptions analysis_options(const CliInvocation& inv) {
    analysis::AnalysisOptions o;
    o.match.match_unversioned = inv.has("--match-unversioned");
    return o;
}

std::optional<vulndb::Severity> whatif_threshold(const CliInvocation& inv) {
    auto v = flag(inv, "--whatif");
    if (!v) return std::nullopt;
    auto s = vulndb::severity_from_string(*v);
    if (!s || *s == vulndb::Severity::Unknown) {
        throw UsageError("--whatif expects none, low, medium, high or critical");
    }
    return s;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

int cmd_binwalk(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const fs::path workdir = inv.args[0];
    const fs::path image = inv.args[1];
    std::error_code ec;
    if (!fs::is_regular_file(image, ec)) {
        err << "error: cannot read image " << image.string() << '\n';
        return kBadInput;
    }
    auto report = firmware::extract(image, workdir, inv.has("-Me"));
    print_warnings(report.warnings, err);
    if (inv.has("--json")) {
        out << firmware::to_json(report).dump(2) << '\n';
        return kOk;
    }
    std::vector<std::vector<std::string>> rows;
    auto add = [&](const firmware::ExtractionReport& r, auto& self) -> void {
        for (const auto& c : r.carves) {
            rows.push_back({r.image_path.generic_string(), std::to_string(c.offset),
                            std::string(firmware::to_string(c.format_id)),
                            c.carved_length ? std::to_string(*c.carved_length) : "-",
                            std::string(firmware::to_string(c.status)),
                            c.output_dir ? c.output_dir->generic_string() : "-"});
        }
        for (const auto& n : r.nested) self(n, self);
    };
    add(report, add);
    out << analysis::render_table({"IMAGE", "OFFSET", "FORMAT", "LENGTH", "STATUS", "OUTPUT"}, rows);
    out << "\nrecursion depth " << report.recursion_depth_reached << "; report written to "
        << (workdir / "extraction-report.json").string() << '\n';
    return kOk;
}

int cmd_generate(const CliInvocation& inv, bool ccpp, std::ostream& out, std::ostream& err) {
    const fs::path input = inv.args[0];
    const std::string name = inv.args[1];
    const fs::path outdir = flag(inv, "--out").value_or(".");
    const auto threshold = whatif_threshold(inv);
    std::error_code ec;
    if (!fs::exists(input, ec)) {
        err << "error: cannot read " << input.string() << '\n';
        return kBadInput;
    }

    sbom::SbomDocument doc;
    bool loaded = false;
    if (ccpp) {
        if (!fs::is_directory(input, ec)) {
            err << "error: " << input.string() << " is not a directory\n";
            return kBadInput;
        }
        auto r = scan::scan_ccpp(input);
        print_warnings(r.warnings, err);
        doc = std::move(r.document);
    } else if (fs::is_directory(input, ec)) {
        auto r = scan::scan_filesystem(input);
        print_warnings(r.warnings, err);
        doc = std::move(r.document);
    } else if (firmware::looks_like_firmware(input)) {
        const auto workdir = outdir / (name + ".extract");
        auto ex = firmware::extract(input, workdir, true);
        print_warnings(ex.warnings, err);
        const auto tree = workdir / ("_" + input.filename().string() + ".extracted");
        if (fs::is_directory(tree, ec)) {
            auto r = scan::scan_filesystem(tree);
            print_warnings(r.warnings, err);
            doc = std::move(r.document);
        } else {
            doc.created_at = utc_now_rfc3339();
        }
    } else {
        try {
            doc = sbom::load_sbom(input);
            loaded = true;
        } catch (const sbom::SbomError& e) {
            err << "error: " << input.string() << " is not a directory, firmware image or SBOM (" << e.what()
                << ")\n";
            return kBadInput;
        }
    }
    if (!loaded) doc.target_name = name;

    fs::create_directories(outdir, ec);
    sbom::emit_sbom(doc, outdir / (name + ".sbom.json"));

    const auto db = load_feed(flag(inv, "--feed"));
    auto port = make_classifier();
    const auto report = analysis::analyze_sbom(doc, db, *port, analysis_options(inv));
    write_file_atomic(outdir / (name + ".vulns.json"), analysis::to_json(report).dump(2) + "\n");

    if (inv.has("--json")) {
        if (threshold) out << analysis::to_json(analysis::whatif_memory_safe(report, *threshold)).dump(2) << '\n';
        else out << analysis::to_json(report).dump(2) << '\n';
        return kOk;
    }
    out << analysis::render(report);
    if (threshold) out << analysis::render(analysis::whatif_memory_safe(report, *threshold));
    return kOk;
}

int cmd_history(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const auto name = cpe::parse_cpe(inv.args[0]);
    if (!name.vendor.is_literal() || !name.product.is_literal()) {
        err << "error: the CPE needs a literal vendor and product\n";
        return kBadInput;
    }
    const auto db = load_feed(flag(inv, "--feed"));
    auto port = make_classifier();
    const auto h = analysis::history(name.vendor.text(), name.product.text(), db, *port, name.part.text().front());
    if (inv.has("--json")) {
        out << analysis::history_payload(h, db).dump(2) << '\n';
        return kOk;
    }
    if (h.rows.empty()) err << "no known versions of " << h.vendor << ':' << h.product << '\n';
    out << analysis::render(h);
    return kOk;
}

int cmd_classify(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const auto& id = inv.args[0];
    if (!classify::is_valid_cwe_id(id)) {
        err << "error: not a CWE identifier: " << id << '\n';
        return kBadInput;
    }
    auto description = flag(inv, "--description");
    auto port = make_classifier();
    std::optional<std::string_view> desc;
    if (description) desc = *description;
    const auto c = port->classify(id, desc);
    if (inv.has("--json")) {
        out << nlohmann::json{{"cwe_id", id},
                              {"memory_class", classify::to_string(c.memory_class)},
                              {"provenance", classify::to_string(c.provenance)}}
                   .dump(2)
            << '\n';
    } else {
        out << classify::to_string(c.memory_class) << '\n';
    }
    return kOk;
}

int cmd_compare(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    std::vector<sbom::SbomDocument> docs;
    for (const auto& a : inv.args) {
        std::error_code ec;
        if (!fs::is_regular_file(a, ec)) {
            err << "error: cannot read SBOM " << a << '\n';
            return kBadInput;
        }
        try {
            docs.push_back(sbom::load_sbom(a));
        } catch (const sbom::SbomError& e) {
            err << "error: " << a << ": " << e.what() << '\n';
            return kBadInput;
        }
    }
    const auto db = load_feed(flag(inv, "--feed"));
    auto port = make_classifier();
    const auto c = analysis::compare(docs[0], docs[1], db, *port, analysis_options(inv));
    if (inv.has("--json")) out << analysis::to_json(c).dump(2) << '\n';
    else out << analysis::render(c);
    return kOk;
}

int cmd_ingest(const CliInvocation& inv, std::ostream& out, std::ostream&) {
    const fs::path file = inv.args[0];
    const auto db = vulndb::ingest_feed(file);
    const auto target = unibom_home() / "feed.json";
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    write_file_atomic(target, read_file(file));
    out << "installed " << db.size() << " record(s) to " << target.string() << '\n';
    return kOk;
}

int cmd_serve(const CliInvocation& inv, std::ostream&, std::ostream& err) {
    api::ServiceConfig config;
    if (auto h = flag(inv, "--host")) config.host = *h;
    if (auto p = flag(inv, "--port")) {
        try {
            std::size_t used = 0;
            config.port = std::stoi(*p, &used);
            if (used != p->size() || config.port < 0 || config.port > 65535) throw std::invalid_argument(*p);
        } catch (const std::logic_error&) {
            throw UsageError("--port expects a number in 0..65535");
        }
    }
    config.store = flag(inv, "--store").value_or((unibom_home() / "store").string());
    if (auto ui = flag(inv, "--ui-dir")) config.ui_dir = *ui;

    auto db = std::make_shared<const vulndb::VulnDatabase>(load_feed(flag(inv, "--feed")));
    api::ApiServer server(config, db, make_classifier());
    const int port = server.bind();
    err << "listening on http://" << config.host << ':' << port << " (store " << config.store.string() << ")\n";
    server.listen();
    return kOk;
}

}  // namespace

std::string usage() {
    return "usage:\n"
           "  unibom -binwalk <workdir> [-Me] <image>\n"
           "  unibom -generateSbom <path> <name> [--out DIR] [--whatif SEVERITY]\n"
           "  unibom -generateCCPPReport <path> <name> [--out DIR] [--whatif SEVERITY]\n"
           "  unibom -getHistory <cpe>\n"
           "  unibom -classifyCwe <CWE-ID> [--description TEXT]\n"
           "  unibom -compare <sbom1> <sbom2>\n"
           "  unibom -ingestFeed <file>\n"
           "  unibom -serve [--host H] [--port P] [--store DIR] [--ui-dir DIR]\n"
           "common flags: --json, --feed FILE, --match-unversioned\n";
}

CliInvocation parse_args(const std::vector<std::string>& argv) {
    CliInvocation inv;
    const CommandSpec* spec = nullptr;
    for (std::size_t i = 0; i < argv.size(); ++i) {
        std::string tok = argv[i];
        if (tok == "[-Me]") tok = "-Me";
        if (const auto* c = command_named(tok)) {
            if (spec) throw UsageError("more than one command given");
            spec = c;
            continue;
        }
        if (tok.starts_with("-") && tok.size() > 1) {
            std::optional<std::string> inline_value;
            if (auto eq = tok.find('='); eq != std::string::npos && tok.starts_with("--")) {
                inline_value = tok.substr(eq + 1);
                tok.erase(eq);
            }
            if (kBoolFlags.contains(tok)) {
                if (inline_value) throw UsageError(tok + " takes no value");
                inv.flags[tok] = "";
            } else if (kValueFlags.contains(tok)) {
                if (inline_value) {
                    inv.flags[tok] = *inline_value;
                } else {
                    if (i + 1 >= argv.size()) throw UsageError(tok + " needs a value");
                    inv.flags[tok] = argv[++i];
                }
            } else {
                throw UsageError("unknown flag: " + tok);
            }
            continue;
        }
        inv.args.push_back(tok);
    }
    if (!spec) throw UsageError("no command given");
    inv.command = spec->command;
    if (inv.args.size() != spec->arity) {
        throw UsageError("-" + std::string(spec->name) + " expects " + std::to_string(spec->arity) +
                         " argument(s), got " + std::to_string(inv.args.size()));
    }
    return inv;
}

fs::path unibom_home() {
    if (const char* h = std::getenv("UNIBOM_HOME"); h && *h) return h;
    if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".unibom";
    return ".unibom";
}

vulndb::VulnDatabase load_feed(const std::optional<std::string>& feed_flag) {
    if (feed_flag) return vulndb::ingest_feed(*feed_flag);
    if (const char* env = std::getenv("UNIBOM_FEED"); env && *env) return vulndb::ingest_feed(env);
    std::error_code ec;
    if (auto installed = unibom_home() / "feed.json"; fs::is_regular_file(installed, ec)) {
        return vulndb::ingest_feed(installed);
    }
    return vulndb::parse_feed(bundled::feed());
}

std::shared_ptr<classify::ClassifierPort> make_classifier() {
    if (auto cfg = classify::ExternalModelClient::config_from_env(unibom_home() / "cwe-class-cache.json")) {
        return std::make_shared<classify::ExternalModelClient>(std::move(*cfg));
    }
    return std::make_shared<classify::RuleEngine>();
}

int run(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    try {
        switch (inv.command) {
            case Command::Binwalk: return cmd_binwalk(inv, out, err);
            case Command::GenerateSbom: return cmd_generate(inv, false, out, err);
            case Command::GenerateCcppReport: return cmd_generate(inv, true, out, err);
            case Command::GetHistory: return cmd_history(inv, out, err);
            case Command::ClassifyCwe: return cmd_classify(inv, out, err);
            case Command::Compare: return cmd_compare(inv, out, err);
            case Command::IngestFeed: return cmd_ingest(inv, out, err);
            case Command::Serve: return cmd_serve(inv, out, err);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << usage();
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const sbom::SbomError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const vulndb::FeedError& e) {
        err << "error: feed: " << e.what() << '\n';
        return kBadInput;
    } catch (const cpe::CpeError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kInternal;
}

int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    if (argv.empty() || argv[0] == "-h" || argv[0] == "--help") {
        (argv.empty() ? err : out) << usage();
        return argv.empty() ? kUsage : kOk;
    }
    CliInvocation inv;
    try {
        inv = parse_args(argv);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << usage();
        return kUsage;
    }
    return run(inv, out, err);
}

}  // namespace unibom::cli
