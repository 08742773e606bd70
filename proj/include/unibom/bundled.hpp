#pragma once

#include <string_view>

// Data files compiled into the library from data/ and fixtures/.
namespace unibom::bundled {

std::string_view cwe_table();
std::string_view scanner_rules();
std::string_view classifier_prompt();
std::string_view feed();

}  // namespace unibom::bundled
