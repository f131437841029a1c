#include "mpk/error.hpp"

namespace mpk {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::input: return "input";
        case ErrorKind::numerical: return "numerical";
    }
    return "unknown";
}

}  // namespace mpk
