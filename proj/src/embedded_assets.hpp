#ifndef BGI_EMBEDDED_ASSETS_HPP
#define BGI_EMBEDDED_ASSETS_HPP

#include <string_view>

// Contents of assets/, compiled in by CMake.
namespace bgi::assets {

extern const std::string_view kPaperGridConfig;
extern const std::string_view kSmokeConfig;
extern const std::string_view kReferenceTables;

}  // namespace bgi::assets

#endif  // BGI_EMBEDDED_ASSETS_HPP
