#pragma once

namespace bv {

// Contents of share/platform_stubs.air and share/default_rules.cfg,
// embedded at build time so the binaries are self-contained.
const char* default_stubs_text();
const char* default_config_text();

}  // namespace bv
